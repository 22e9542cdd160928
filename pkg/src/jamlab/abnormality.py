"""Abnormality measures, decision thresholds, and generalized errors.

Four measures are tracked per step: a discrete transition-surprise score
(occupancy-weighted symmetric KL between predicted transition rows and the
discrete evidence), two continuous Bhattacharyya scores (prediction vs
evidence, prediction vs winning cluster), and a per-subcarrier I/Q distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .divergence import (bhattacharyya_coefficient, clamp_probs,
                         discrete_symmetric_kld)

# default decision constants
ZETA = 0.8
ALPHA = 0.5
BETA1 = 1.0
BETA2 = 0.0
Q_TAIL = 0.2


def discrete_threshold(zeta: float = ZETA, alpha: float = ALPHA) -> float:
    """Transition-surprise threshold psi = (1 - zeta) * alpha."""
    return (1.0 - zeta) * alpha


def continuous_coefficient_bound(q_tail: float = Q_TAIL, alpha: float = ALPHA,
                                 beta1: float = BETA1, beta2: float = BETA2) -> float:
    """Lower bound on the Bhattacharyya coefficient under normal behaviour."""
    return float(np.sqrt(q_tail * (beta1 * (1.0 - alpha) + beta2 * (1.0 - alpha))))


@dataclass
class ThresholdConfig:
    """Decision thresholds; continuous ones are usually calibrated from a
    clean run (mean + 3 std for the score, mean + std per subcarrier)."""

    psi: float = field(default_factory=discrete_threshold)
    eta: float = field(default_factory=lambda: -float(np.log(continuous_coefficient_bound())))
    eta_model: float | None = None
    dcla: np.ndarray | None = None

    def decide(self, klda_v: float, cla_v: float, clb_v: float,
               dcla_v: np.ndarray | None = None) -> dict[str, object]:
        """H1 flags per measure; each flag is monotone in its measure."""
        eta_m = self.eta if self.eta_model is None else self.eta_model
        out: dict[str, object] = {
            "klda": bool(klda_v > self.psi),
            "cla": bool(cla_v > self.eta),
            "clb": bool(clb_v > eta_m),
        }
        if dcla_v is not None and self.dcla is not None:
            out["dcla"] = np.asarray(dcla_v) > np.asarray(self.dcla)
        return out


def calibrate_thresholds(clean_cla: np.ndarray, clean_dcla: np.ndarray | None = None,
                         clean_clb: np.ndarray | None = None) -> ThresholdConfig:
    """Thresholds from clean-run statistics: eta = mean + 3 std of the
    prediction-vs-evidence score, per-subcarrier = mean + std."""
    cfg = ThresholdConfig()
    clean_cla = np.asarray(clean_cla, float)
    cfg.eta = float(clean_cla.mean() + 3.0 * clean_cla.std())
    if clean_clb is not None:
        clb = np.asarray(clean_clb, float)
        cfg.eta_model = float(clb.mean() + 3.0 * clb.std())
    if clean_dcla is not None:
        dc = np.asarray(clean_dcla, float)
        cfg.dcla = dc.mean(axis=0) + dc.std(axis=0)
    return cfg


def transition_surprise(rows: np.ndarray, occupancy: np.ndarray,
                        evidence: np.ndarray) -> float:
    """Occupancy-weighted symmetric KL between predicted transition rows and
    the discrete evidence distribution (zero-occupancy rows are skipped)."""
    rows = np.atleast_2d(np.asarray(rows, float))
    occupancy = np.asarray(occupancy, float)
    evidence = clamp_probs(evidence)
    score = 0.0
    for l in np.flatnonzero(occupancy > 0.0):
        score += occupancy[l] * discrete_symmetric_kld(rows[l], evidence)
    return float(score)


def continuous_surprise(mu_pred: np.ndarray, cov_pred: np.ndarray,
                        mu_ev: np.ndarray, cov_ev: np.ndarray) -> float:
    """-ln of the Bhattacharyya coefficient between two Gaussians."""
    bc = bhattacharyya_coefficient(mu_pred, cov_pred, mu_ev, cov_ev)
    return float(-np.log(max(bc, 1e-300)))


def subcarrier_distances(observation: np.ndarray, pred_state: np.ndarray,
                         d: int) -> np.ndarray:
    """Euclidean I/Q distance per subcarrier between the observation and the
    predicted state block."""
    obs = np.asarray(observation, float)
    pred = np.asarray(pred_state, float)
    di = obs[:d] - pred[:d]
    dq = obs[d:2 * d] - pred[d:2 * d]
    return np.sqrt(di ** 2 + dq ** 2)


@dataclass
class GeneralizedErrors:
    """Per-step hierarchy of model-vs-evidence errors.

    observation_error: observation minus predicted observation;
    state_error: mapped-back observation minus predicted state;
    discrete_error: evidence minus predicted superstate distribution
    (sums to zero); cluster_error: cluster-level continuous error (two-branch
    depending on whether the discrete argmaxes agree); evidence_residual:
    observation minus the evidence-winning cluster mean, i.e. the additive
    interference estimate.
    """

    observation_error: np.ndarray
    state_error: np.ndarray
    discrete_error: np.ndarray
    cluster_error: np.ndarray
    evidence_residual: np.ndarray


def generalized_errors(observation: np.ndarray, pred_mean: np.ndarray,
                       evidence_probs: np.ndarray, predicted_probs: np.ndarray,
                       cluster_means: np.ndarray) -> GeneralizedErrors:
    """Build the error hierarchy for one step (observation map H = identity)."""
    z = np.asarray(observation, float)
    pred = np.asarray(pred_mean, float)
    lam = np.asarray(evidence_probs, float)
    pi = np.asarray(predicted_probs, float)
    means = np.atleast_2d(np.asarray(cluster_means, float))
    k_lam = int(np.argmax(lam))
    k_pi = int(np.argmax(pi))
    if k_lam == k_pi:
        cluster_err = means[k_lam] - pred
    else:
        cluster_err = means[k_lam] - means[k_pi]
    return GeneralizedErrors(
        observation_error=z - pred,
        state_error=z - pred,
        discrete_error=lam - pi,
        cluster_error=cluster_err,
        evidence_residual=z - means[k_lam],
    )
