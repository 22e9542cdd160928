"""Evaluation metrics: ROC/AUC, energy detection, error powers, rank
correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass
class RocCurve:
    pfa: np.ndarray
    pd: np.ndarray
    thresholds: np.ndarray
    auc: float


def roc_curve(scores: np.ndarray, labels: np.ndarray) -> RocCurve:
    """ROC of a score where larger means more likely positive.

    labels are booleans (True = positive class). AUC is the exact
    rank-statistic value (ties counted half), identical under any strictly
    monotone transform of the scores.
    """
    scores = np.asarray(scores, float).ravel()
    labels = np.asarray(labels, bool).ravel()
    if scores.size != labels.size:
        raise ValueError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("need both classes present")
    order = np.argsort(-scores, kind="stable")
    s_sorted = scores[order]
    l_sorted = labels[order]
    tp = np.cumsum(l_sorted)
    fp = np.cumsum(~l_sorted)
    # keep one point per distinct threshold
    distinct = np.r_[np.diff(s_sorted) != 0, True]
    pd = np.r_[0.0, tp[distinct] / n_pos]
    pfa = np.r_[0.0, fp[distinct] / n_neg]
    thresholds = np.r_[np.inf, s_sorted[distinct]]
    ranks = stats.rankdata(scores)
    auc = (ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return RocCurve(pfa=pfa, pd=pd, thresholds=thresholds, auc=float(auc))


def energy_scores(grid_samples: np.ndarray) -> np.ndarray:
    """Mean received power per time step over the sensed sub-carriers."""
    s = np.asarray(grid_samples)
    return np.mean(np.abs(s) ** 2, axis=0)


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    return float(np.mean(np.abs(a - b) ** 2))


def relative_mse(a: np.ndarray, reference: np.ndarray) -> float:
    """MSE normalized by the mean power of the reference signal."""
    power = float(np.mean(np.abs(np.asarray(reference)) ** 2))
    if power <= 0.0:
        raise ValueError("reference has zero power")
    return mse(a, reference) / power


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    return float(stats.spearmanr(x, y).statistic)


def detection_rates(scores: np.ndarray, labels: np.ndarray,
                    threshold: float) -> tuple[float, float]:
    """(P_d, P_fa) of thresholding a score at a fixed threshold."""
    scores = np.asarray(scores, float)
    labels = np.asarray(labels, bool)
    pd = float(np.mean(scores[labels] > threshold)) if labels.any() else float("nan")
    pfa = float(np.mean(scores[~labels] > threshold)) if (~labels).any() else float("nan")
    return pd, pfa
