import numpy as np
import pytest

from jamlab.abnormality import (ThresholdConfig, calibrate_thresholds,
                                continuous_surprise, generalized_errors,
                                subcarrier_distances, transition_surprise)
from jamlab.divergence import bhattacharyya_distance, discrete_symmetric_kld


def test_calibrated_thresholds_are_clean_run_statistics(rng):
    cla = rng.gamma(2.0, 1.0, 500)
    dcla = rng.gamma(1.0, 0.5, (500, 3))
    clb = rng.gamma(2.0, 2.0, 500)
    th = calibrate_thresholds(cla, dcla, clb)
    assert th.eta == pytest.approx(cla.mean() + 3 * cla.std())
    assert th.eta_model == pytest.approx(clb.mean() + 3 * clb.std())
    assert np.allclose(th.dcla, dcla.mean(axis=0) + dcla.std(axis=0))


def test_decision_flags_are_monotone_in_scores():
    th = ThresholdConfig(psi=1.0, eta=2.0, eta_model=3.0,
                         dcla=np.array([0.5, 0.5]))
    low = th.decide(0.5, 1.0, 1.0, np.array([0.1, 0.1]))
    high = th.decide(2.0, 5.0, 9.0, np.array([1.0, 0.1]))
    assert not any([low["klda"], low["cla"], low["clb"]])
    assert all([high["klda"], high["cla"], high["clb"]])
    assert high["dcla"].tolist() == [True, False]


def test_continuous_surprise_is_bhattacharyya_distance():
    mu_p, cov_p = np.array([0.0, 0.0]), 0.3 * np.eye(2)
    mu_q, cov_q = np.array([1.0, -1.0]), 0.5 * np.eye(2)
    want = bhattacharyya_distance(mu_p, cov_p, mu_q, cov_q)
    assert continuous_surprise(mu_p, cov_p, mu_q, cov_q) == pytest.approx(want)
    assert continuous_surprise(mu_p, cov_p, mu_p, cov_p) == pytest.approx(
        0.0, abs=1e-12)


def test_transition_surprise_weights_rows_by_occupancy():
    rows = np.array([[0.9, 0.1], [0.2, 0.8]])
    ev = np.array([0.5, 0.5])
    occ = np.array([0.25, 0.75])
    want = (0.25 * discrete_symmetric_kld(rows[0], ev)
            + 0.75 * discrete_symmetric_kld(rows[1], ev))
    assert transition_surprise(rows, occ, ev) == pytest.approx(want)
    # perfect agreement is zero surprise
    assert transition_surprise(np.array([[0.5, 0.5]]), np.array([1.0]),
                               ev) == pytest.approx(0.0, abs=1e-6)


def test_subcarrier_distances_per_carrier():
    d = 2
    z = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0])
    pred = np.zeros(8)
    got = subcarrier_distances(z, pred, d)
    assert np.allclose(got, [1.0, 1.0])


def test_generalized_errors_branches_on_discrete_agreement():
    means = np.array([[1.0, 0.0], [-1.0, 0.0]])
    z = np.array([0.8, 0.1])
    pred = np.array([0.9, 0.0])
    agree = generalized_errors(z, pred, np.array([0.8, 0.2]),
                               np.array([0.7, 0.3]), means)
    assert np.allclose(agree.cluster_error, means[0] - pred)
    assert np.allclose(agree.evidence_residual, z - means[0])
    assert agree.discrete_error.sum() == pytest.approx(0.0)
    disagree = generalized_errors(z, pred, np.array([0.8, 0.2]),
                                  np.array([0.3, 0.7]), means)
    assert np.allclose(disagree.cluster_error, means[0] - means[1])
