import numpy as np
import pytest

from jamlab.divergence import bhattacharyya_distance
from jamlab.filtering import EvidenceModel, Mmjpf, MmjpfConfig, run_filter

from conftest import build_vocab


def single_state_vocab(mu, cov):
    return build_vocab([mu], [cov], np.array([[1.0]]), d=1)


def plain_kalman(observations, mu, cov0, r_diag, q):
    """Reference filter for identity dynamics driven by a fixed control:
    state block shifts by the control, derivative block is reset to it, the
    derivative covariance is zeroed before adding process noise."""
    dim = len(mu)
    half = dim // 2
    control = np.asarray(mu[half:], float)
    x = np.asarray(observations[0], float).copy()
    p = np.asarray(cov0, float).copy()
    out = [x.copy()]
    eye = np.eye(dim)
    for z in observations[1:]:
        x_pred = x.copy()
        x_pred[:half] += control
        x_pred[half:] = control
        p_pred = np.zeros_like(p)
        p_pred[:half, :half] = p[:half, :half]
        p_pred += q * eye
        s = p_pred + np.diag(r_diag)
        k = np.linalg.solve(s, p_pred).T
        x = x_pred + k @ (z - x_pred)
        p = (eye - k) @ p_pred
        p = 0.5 * (p + p.T) + 1e-12 * eye
        out.append(x.copy())
    return np.array(out)


def test_single_superstate_filter_matches_plain_kalman(rng):
    mu = np.array([1.0, -0.5, 0.2, 0.1])
    cov = np.diag([0.05, 0.04, 0.02, 0.03])
    vocab = single_state_vocab(mu, cov)
    r_diag = np.array([0.01, 0.01, 0.02, 0.02])
    obs = mu[None, :] + 0.1 * rng.standard_normal((60, 4))
    trace = run_filter(vocab, obs, np.diag(r_diag),
                       MmjpfConfig(n_particles=10, seed=0))
    want = plain_kalman(obs, mu, cov, r_diag, 1e-2)
    assert np.max(np.abs(trace.filtered_means - want)) < 1e-9
    assert np.all(trace.winner_state == 0)


def test_filter_is_seed_deterministic(rng):
    means = np.array([[1.0, 1.0, 0.0, 0.0], [-1.0, -1.0, 0.0, 0.0]])
    covs = np.tile(0.05 * np.eye(4), (2, 1, 1))
    pi = np.array([[0.9, 0.1], [0.1, 0.9]])
    vocab = build_vocab(means, covs, pi)
    obs = means[rng.integers(0, 2, 80)] + 0.1 * rng.standard_normal((80, 4))
    r = 0.02 * np.eye(4)
    a = run_filter(vocab, obs, r, MmjpfConfig(seed=5))
    b = run_filter(vocab, obs, r, MmjpfConfig(seed=5))
    assert np.array_equal(a.cla, b.cla)
    assert np.array_equal(a.winner_state, b.winner_state)
    assert np.array_equal(a.filtered_means, b.filtered_means)


def test_evidence_is_normalized_inverse_bhattacharyya():
    means = np.array([[1.0, 0.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]])
    covs = np.tile(0.1 * np.eye(4), (2, 1, 1))
    pi = np.full((2, 2), 0.5)
    vocab = build_vocab(means, covs, pi)
    r = 0.05 * np.eye(4)
    model = EvidenceModel(vocab, r)
    z = np.array([0.7, 0.1, 0.0, 0.0])
    want = np.array([1.0 / bhattacharyya_distance(z, r, m, c)
                     for m, c in zip(means, covs)])
    want = want / want.sum()
    got = model.evidence(z)
    assert np.allclose(got, want, atol=1e-12)
    assert got.sum() == pytest.approx(1.0)
    assert got[0] > got[1]


def test_filter_tracks_switching_states(rng):
    means = np.array([[2.0, 0.0, 0.0, 0.0], [-2.0, 0.0, 0.0, 0.0]])
    covs = np.tile(0.02 * np.eye(4), (2, 1, 1))
    pi = np.array([[0.95, 0.05], [0.05, 0.95]])
    vocab = build_vocab(means, covs, pi)
    truth = np.zeros(120, int)
    truth[40:80] = 1
    obs = means[truth] + 0.1 * rng.standard_normal((120, 4))
    trace = run_filter(vocab, obs, 0.02 * np.eye(4), MmjpfConfig(seed=2))
    # allow a couple of steps of lag around each switch
    agree = np.mean(trace.winner_state[5:] == truth[5:])
    assert agree > 0.95


def test_abnormality_rises_under_unmodeled_offset(rng):
    means = np.array([[1.0, 1.0, 0.0, 0.0], [-1.0, -1.0, 0.0, 0.0]])
    covs = np.tile(0.02 * np.eye(4), (2, 1, 1))
    pi = np.array([[0.9, 0.1], [0.1, 0.9]])
    vocab = build_vocab(means, covs, pi)
    r = 0.02 * np.eye(4)
    labels = rng.integers(0, 2, 200)
    obs = means[labels] + 0.05 * rng.standard_normal((200, 4))
    obs[100:, :2] += 1.5  # unmodeled interference on the state block
    trace = run_filter(vocab, obs, r, MmjpfConfig(seed=1))
    assert np.median(trace.cla[100:]) > 4 * np.median(trace.cla[1:100])


def test_particle_weights_stay_on_simplex(rng):
    means = np.array([[1.0, 0.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0]])
    covs = np.tile(0.05 * np.eye(4), (2, 1, 1))
    vocab = build_vocab(means, covs, np.full((2, 2), 0.5))
    filt = Mmjpf(vocab, 0.05 * np.eye(4), MmjpfConfig(seed=0))
    for t in range(50):
        z = 3.0 * rng.standard_normal(4)
        filt.step(z)
        w = filt.belief.weights
        assert np.all(w >= 0.0)
        assert w.sum() == pytest.approx(1.0)
        assert np.all(np.isfinite(filt.belief.means))


def test_config_validation():
    with pytest.raises(ValueError):
        MmjpfConfig(n_particles=0)
    with pytest.raises(ValueError):
        MmjpfConfig(process_noise=0.0)
