import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jamlab.active import init_beliefs, update_beliefs
from jamlab.divergence import clamp_probs
from jamlab.jammer_ops import update_transition_matrix
from jamlab.metrics import roc_curve
from jamlab.modulation import SCHEMES, bits_per_symbol, demodulate, modulate
from jamlab.vocabulary import estimate_transition_matrix, superstate_statistics

SETTINGS = settings(max_examples=50, deadline=None)


@SETTINGS
@given(arrays(float, st.integers(2, 8),
              elements=st.floats(0.0, 100.0)))
def test_clamp_probs_always_yields_a_simplex(p):
    out = clamp_probs(p)
    assert np.all(out > 0.0)
    assert out.sum() == pytest.approx(1.0)


@SETTINGS
@given(st.lists(st.integers(0, 3), min_size=2, max_size=60))
def test_transition_estimate_rows_are_stochastic(labels):
    pi = estimate_transition_matrix(np.array(labels), 4)
    assert pi.shape == (4, 4)
    assert np.all(pi > 0.0)
    assert np.allclose(pi.sum(axis=1), 1.0)


@SETTINGS
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 5))
def test_transition_update_preserves_simplex(seed, n):
    rng = np.random.default_rng(seed)
    pi = rng.dirichlet(np.ones(n), n)
    errs = 0.6 * rng.standard_normal((10, n))
    winners = rng.integers(0, n, 10)
    out = update_transition_matrix(pi, errs, winners)
    assert np.all(out >= 0.0)
    assert np.allclose(out.sum(axis=1), 1.0)


@SETTINGS
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 6), st.integers(1, 40))
def test_belief_updates_preserve_simplex(seed, n, steps):
    rng = np.random.default_rng(seed)
    b = init_beliefs(n, tau_max=3)
    for _ in range(steps):
        s, a, nxt, src = rng.integers(0, n, 4)
        update_beliefs(b, int(s), int(a), int(nxt),
                       collided=bool(rng.random() < 0.6),
                       gamma_star=float(rng.random()),
                       jam_source=int(src))
    for arr in (b.p_u, b.p_j, b.pi_a):
        assert np.all(arr >= 0.0)
        assert np.allclose(arr.sum(axis=-1), 1.0)


@SETTINGS
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 4), st.integers(2, 5))
def test_cluster_covariances_are_positive_definite(seed, n_states, dim):
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((50, dim))
    labels = rng.integers(0, n_states, 50)
    nodes = rng.standard_normal((n_states, dim))
    _, covs = superstate_statistics(samples, labels, nodes)
    for c in covs:
        assert np.allclose(c, c.T)
        assert np.all(np.linalg.eigvalsh(c) > 0.0)


@SETTINGS
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(sorted(SCHEMES)))
def test_modulation_round_trip(seed, scheme):
    rng = np.random.default_rng(seed)
    k = bits_per_symbol(scheme)
    bits = rng.integers(0, 2, 20 * k)
    sym = modulate(bits, scheme)
    assert np.array_equal(demodulate(sym, scheme), bits)
    assert np.mean(np.abs(sym) ** 2) == pytest.approx(1.0, rel=0.35)


@SETTINGS
@given(st.integers(0, 2 ** 32 - 1))
def test_auc_invariant_under_strictly_monotone_maps(seed):
    rng = np.random.default_rng(seed)
    scores = rng.standard_normal(80)
    labels = np.zeros(80, bool)
    labels[rng.choice(80, 20, replace=False)] = True
    base = roc_curve(scores, labels).auc
    assert roc_curve(np.exp(scores), labels).auc == pytest.approx(base)
    assert roc_curve(3.0 * scores - 7.0, labels).auc == pytest.approx(base)
    assert 0.0 <= base <= 1.0
