import numpy as np
import pytest

from jamlab.classifier import (classify_stream, confusion_matrix,
                               correct_classification_probability,
                               interference_residuals, majority_vote,
                               residual_covariance, subcarrier_samples,
                               train_jammer_model, trimmed_window_score,
                               viterbi_cluster_path)

from conftest import build_vocab


def test_viterbi_recovers_sticky_path_under_heavy_noise(rng):
    d = 3
    means = np.zeros((2, 4 * d))
    means[0, :2 * d] = 1.0
    means[1, :2 * d] = -1.0
    truth = np.zeros(200, int)
    truth[80:150] = 1
    obs = means[truth] + 1.2 * rng.standard_normal((200, 4 * d))
    path = viterbi_cluster_path(obs, means, d, scale=1.44)
    assert np.mean(path == truth) > 0.95
    # per-step nearest-mean assignment is much worse on the same data
    greedy = np.argmin(((obs[:, None, :2 * d]
                         - means[None, :, :2 * d]) ** 2).sum(axis=2), axis=1)
    assert np.mean(path == truth) > np.mean(greedy == truth)


def test_interference_residuals_remove_command_content(rng):
    d = 2
    vocab = build_vocab(
        [[1.0] * (2 * d) + [0.0] * (2 * d), [-1.0] * (2 * d) + [0.0] * (2 * d)],
        np.tile(0.01 * np.eye(4 * d), (2, 1, 1)),
        np.array([[0.9, 0.1], [0.1, 0.9]]), d=d)
    truth = np.where(rng.random(150) < 0.5, 0, 1)
    for t in range(1, 150):
        if rng.random() < 0.9:
            truth[t] = truth[t - 1]
    obs = vocab.means[truth] + 0.05 * rng.standard_normal((150, 4 * d))
    res = interference_residuals(obs, vocab, scale=0.01)
    assert np.max(np.abs(res.mean(axis=0))) < 0.05
    assert np.max(np.abs(res)) < 0.5


def test_subcarrier_samples_layout():
    d = 2
    res = np.array([[1, 2, 3, 4, 5, 6, 7, 8],
                    [10, 20, 30, 40, 50, 60, 70, 80]], float)
    out = subcarrier_samples(res, d)
    assert out.shape == (4, 4)
    # first subcarrier's time series comes first
    assert out[0].tolist() == [1, 3, 5, 7]
    assert out[1].tolist() == [10, 30, 50, 70]
    assert out[2].tolist() == [2, 4, 6, 8]


def test_residual_covariance_is_robust_to_outliers(rng):
    clean = 0.1 * rng.standard_normal((1000, 4))
    spiked = clean.copy()
    spiked[:20] += 50.0
    r_clean = residual_covariance(clean)
    r_spiked = residual_covariance(spiked)
    assert np.allclose(np.diag(r_spiked), np.diag(r_clean), rtol=0.25)
    assert np.all(np.diag(r_clean) > 0)


def test_majority_vote_ties_go_low():
    assert majority_vote(np.array([2, 2, 1, 1, 3])) == 1
    assert majority_vote(np.array([0, 0, 1])) == 0


def test_trimmed_window_score_drops_largest_values():
    scores = np.array([[1.0, 10.0]] * 9 + [[100.0, 10.0]])
    trimmed = trimmed_window_score(scores, trim=0.1)
    assert np.allclose(trimmed, [9.0, 90.0])
    full = trimmed_window_score(scores, trim=0.0)
    assert np.allclose(full, [109.0, 100.0])


def test_confusion_matrix_and_accuracy():
    cm = confusion_matrix(np.array([0, 0, 1, 1]), np.array([0, 1, 1, 1]), 2)
    assert cm.tolist() == [[1, 1], [0, 2]]
    assert correct_classification_probability(cm) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        confusion_matrix(np.array([0]), np.array([0, 1]), 2)
    with pytest.raises(ValueError):
        correct_classification_probability(np.zeros((2, 2)))


def test_classify_stream_separates_distinct_interference(rng):
    # two candidate interference geometries with distinct cluster layouts
    bpsk_like = 2.0 * np.array([[1.0], [-1.0]])
    qpsk_like = 2.0 * np.array([[1.0, 1.0], [1.0, -1.0],
                                [-1.0, 1.0], [-1.0, -1.0]]) / np.sqrt(2)

    def stream(points, n):
        idx = rng.integers(0, len(points), n)
        out = np.zeros((n, 4))
        out[:, :2] = points[idx] if points.shape[1] == 2 else \
            np.column_stack([points[idx, 0], np.zeros(n)])
        out[1:, 2:] = np.diff(out[:, :2], axis=0)
        return out + 0.05 * rng.standard_normal((n, 4))

    train_a = stream(bpsk_like, 600)
    train_b = stream(qpsk_like, 600)
    models = [train_jammer_model(train_a, "A", max_nodes=2, seed=0),
              train_jammer_model(train_b, "B", max_nodes=4, seed=0)]
    shared = np.diag([0.0025, 0.0025, 0.005, 0.005])
    test_b = stream(qpsk_like, 100)
    result = classify_stream(test_b, models, windows=[(0, 100)],
                             shared_cov=shared)
    assert result.schemes[int(result.per_window[0])] == "B"
    assert result.window_schemes() == ["B"]
    test_a = stream(bpsk_like, 100)
    result_a = classify_stream(test_a, models, windows=[(0, 100)],
                               shared_cov=shared)
    assert result_a.schemes[int(result_a.per_window[0])] == "A"


def test_classify_stream_rejects_empty_bank():
    with pytest.raises(ValueError):
        classify_stream(np.zeros((5, 4)), [])
