"""Divergence kernels between Gaussians and between discrete distributions."""

from __future__ import annotations

import numpy as np
from scipy import linalg

PROB_FLOOR = 1e-12


def _chol(cov: np.ndarray):
    cov = np.asarray(cov, float)
    try:
        return linalg.cho_factor(cov, lower=True)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"covariance not positive definite: {exc}") from exc


def _logdet(chol_factor) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(chol_factor[0]))))


def gaussian_kld(mu_p: np.ndarray, cov_p: np.ndarray,
                 mu_q: np.ndarray, cov_q: np.ndarray) -> float:
    """KL(N_p || N_q) in nats."""
    mu_p = np.asarray(mu_p, float).ravel()
    mu_q = np.asarray(mu_q, float).ravel()
    k = mu_p.size
    cq = _chol(cov_q)
    cp = _chol(cov_p)
    delta = mu_q - mu_p
    tr = float(np.trace(linalg.cho_solve(cq, np.asarray(cov_p, float))))
    maha = float(delta @ linalg.cho_solve(cq, delta))
    return 0.5 * (_logdet(cq) - _logdet(cp) - k + tr + maha)


def gaussian_symmetric_kld(mu_p, cov_p, mu_q, cov_q) -> float:
    return gaussian_kld(mu_p, cov_p, mu_q, cov_q) + gaussian_kld(mu_q, cov_q, mu_p, cov_p)


def bhattacharyya_distance(mu_p: np.ndarray, cov_p: np.ndarray,
                           mu_q: np.ndarray, cov_q: np.ndarray) -> float:
    """Bhattacharyya distance between two Gaussians (>= 0, 0 iff equal)."""
    mu_p = np.asarray(mu_p, float).ravel()
    mu_q = np.asarray(mu_q, float).ravel()
    cov_p = np.asarray(cov_p, float)
    cov_q = np.asarray(cov_q, float)
    mix = 0.5 * (cov_p + cov_q)
    cm = _chol(mix)
    delta = mu_p - mu_q
    maha = float(delta @ linalg.cho_solve(cm, delta))
    logdet_term = _logdet(cm) - 0.5 * (_logdet(_chol(cov_p)) + _logdet(_chol(cov_q)))
    return 0.125 * maha + 0.5 * logdet_term


def bhattacharyya_coefficient(mu_p, cov_p, mu_q, cov_q) -> float:
    """exp(-distance), in (0, 1]."""
    return float(np.exp(-bhattacharyya_distance(mu_p, cov_p, mu_q, cov_q)))


def clamp_probs(p: np.ndarray, floor: float = PROB_FLOOR) -> np.ndarray:
    """Clamp at the floor and renormalize to a simplex vector."""
    p = np.maximum(np.asarray(p, float), floor)
    return p / p.sum()


def discrete_kld(p: np.ndarray, q: np.ndarray, floor: float = PROB_FLOOR) -> float:
    """KL(p || q) over a finite alphabet, entries clamped then renormalized."""
    p = clamp_probs(p, floor)
    q = clamp_probs(q, floor)
    return float(np.sum(p * np.log(p / q)))


def discrete_symmetric_kld(p, q, floor: float = PROB_FLOOR) -> float:
    return discrete_kld(p, q, floor) + discrete_kld(q, p, floor)
