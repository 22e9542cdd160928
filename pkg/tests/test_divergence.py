import numpy as np
import pytest
from scipy import integrate, stats

from jamlab.divergence import (bhattacharyya_coefficient,
                               bhattacharyya_distance, clamp_probs,
                               discrete_kld, discrete_symmetric_kld,
                               gaussian_kld, gaussian_symmetric_kld)


def numeric_kld_1d(mu_p, var_p, mu_q, var_q):
    p = stats.norm(mu_p, np.sqrt(var_p))
    q = stats.norm(mu_q, np.sqrt(var_q))

    def f(x):
        return p.pdf(x) * (p.logpdf(x) - q.logpdf(x))

    lo = min(mu_p, mu_q) - 12 * max(np.sqrt(var_p), np.sqrt(var_q))
    hi = max(mu_p, mu_q) + 12 * max(np.sqrt(var_p), np.sqrt(var_q))
    val, _ = integrate.quad(f, lo, hi, limit=200)
    return val


def numeric_bc_1d(mu_p, var_p, mu_q, var_q):
    p = stats.norm(mu_p, np.sqrt(var_p))
    q = stats.norm(mu_q, np.sqrt(var_q))
    lo = min(mu_p, mu_q) - 12 * max(np.sqrt(var_p), np.sqrt(var_q))
    hi = max(mu_p, mu_q) + 12 * max(np.sqrt(var_p), np.sqrt(var_q))
    val, _ = integrate.quad(lambda x: np.sqrt(p.pdf(x) * q.pdf(x)),
                            lo, hi, limit=200)
    return val


ONE_D_CASES = [
    (0.0, 1.0, 0.0, 1.0),
    (0.0, 1.0, 1.5, 1.0),
    (0.5, 0.3, -0.7, 2.0),
    (-2.0, 4.0, 1.0, 0.25),
]


@pytest.mark.parametrize("mu_p,var_p,mu_q,var_q", ONE_D_CASES)
def test_gaussian_kld_matches_numeric_integration_1d(mu_p, var_p, mu_q, var_q):
    got = gaussian_kld(np.array([mu_p]), np.array([[var_p]]),
                       np.array([mu_q]), np.array([[var_q]]))
    want = numeric_kld_1d(mu_p, var_p, mu_q, var_q)
    assert abs(got - want) < 1e-4


@pytest.mark.parametrize("mu_p,var_p,mu_q,var_q", ONE_D_CASES)
def test_bhattacharyya_matches_numeric_integration_1d(mu_p, var_p, mu_q, var_q):
    got = bhattacharyya_distance(np.array([mu_p]), np.array([[var_p]]),
                                 np.array([mu_q]), np.array([[var_q]]))
    want = -np.log(numeric_bc_1d(mu_p, var_p, mu_q, var_q))
    assert abs(got - want) < 1e-4


def test_gaussian_kld_matches_numeric_integration_2d():
    mu_p = np.array([0.3, -0.2])
    cov_p = np.array([[1.0, 0.3], [0.3, 0.8]])
    mu_q = np.array([-0.5, 0.4])
    cov_q = np.array([[0.6, -0.1], [-0.1, 1.4]])
    p = stats.multivariate_normal(mu_p, cov_p)
    q = stats.multivariate_normal(mu_q, cov_q)
    want, _ = integrate.dblquad(
        lambda y, x: p.pdf([x, y]) * (p.logpdf([x, y]) - q.logpdf([x, y])),
        -10, 10, -10, 10, epsabs=1e-7)
    got = gaussian_kld(mu_p, cov_p, mu_q, cov_q)
    assert abs(got - want) < 1e-4


def test_bhattacharyya_matches_numeric_integration_2d():
    mu_p = np.array([0.3, -0.2])
    cov_p = np.array([[1.0, 0.3], [0.3, 0.8]])
    mu_q = np.array([-0.5, 0.4])
    cov_q = np.array([[0.6, -0.1], [-0.1, 1.4]])
    p = stats.multivariate_normal(mu_p, cov_p)
    q = stats.multivariate_normal(mu_q, cov_q)
    bc, _ = integrate.dblquad(
        lambda y, x: np.sqrt(p.pdf([x, y]) * q.pdf([x, y])),
        -10, 10, -10, 10, epsabs=1e-7)
    got = bhattacharyya_distance(mu_p, cov_p, mu_q, cov_q)
    assert abs(got - (-np.log(bc))) < 1e-4


def test_symmetric_kld_is_sum_of_both_directions():
    mu_p, cov_p = np.array([0.2]), np.array([[0.5]])
    mu_q, cov_q = np.array([-1.0]), np.array([[2.0]])
    want = (gaussian_kld(mu_p, cov_p, mu_q, cov_q)
            + gaussian_kld(mu_q, cov_q, mu_p, cov_p))
    assert gaussian_symmetric_kld(mu_p, cov_p, mu_q, cov_q) == pytest.approx(want)


def test_identical_gaussians_have_zero_divergence():
    mu = np.array([1.0, 2.0])
    cov = np.array([[1.0, 0.2], [0.2, 0.7]])
    assert gaussian_kld(mu, cov, mu, cov) == pytest.approx(0.0, abs=1e-12)
    assert bhattacharyya_distance(mu, cov, mu, cov) == pytest.approx(0.0, abs=1e-12)
    assert bhattacharyya_coefficient(mu, cov, mu, cov) == pytest.approx(1.0)


def test_clamp_probs_returns_simplex():
    p = clamp_probs(np.array([1.0, 0.0, 0.0]))
    assert p.sum() == pytest.approx(1.0)
    assert np.all(p > 0.0)


def test_discrete_kld_of_equal_distributions_is_zero():
    p = np.array([0.2, 0.3, 0.5])
    assert discrete_kld(p, p) == pytest.approx(0.0, abs=1e-9)
    assert discrete_symmetric_kld(p, p) == pytest.approx(0.0, abs=1e-9)


def test_discrete_kld_known_value():
    p = np.array([0.5, 0.5])
    q = np.array([0.9, 0.1])
    want = 0.5 * np.log(0.5 / 0.9) + 0.5 * np.log(0.5 / 0.1)
    assert discrete_kld(p, q) == pytest.approx(want, abs=1e-9)
