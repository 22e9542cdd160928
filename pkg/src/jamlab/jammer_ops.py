"""Jammer characterization, extraction, suppression, and model updates.

After detection flags an attack window, the filter trace is mined for the
jammer's discrete signature (cluster shift map), its continuous signature
(voted generalized offset), and a per-step interference estimate that can be
subtracted from the received grid. The learned signature can then be folded
back into the dynamic model as a removable overlay.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .filtering import FilterTrace
from .modulation import constellation
from .vocabulary import Vocabulary

VOTE_GRID_STEP = 0.1


@dataclass
class DiscreteCharacterization:
    predicted: np.ndarray   # predicted superstate per attacked step
    observed: np.ndarray    # evidence superstate per attacked step
    shift_map: Counter      # (predicted -> observed) pair counts


@dataclass
class ContinuousCharacterization:
    offsets: np.ndarray     # per-step generalized offsets, (n, dim)
    force: np.ndarray       # max-vote offset (cell centroid), (dim,)
    votes: Counter          # quantized-cell vote counts

    @property
    def control(self) -> np.ndarray:
        """Derivative block of the voted offset."""
        half = self.force.size // 2
        return self.force[half:]


def characterize_discrete(trace: FilterTrace,
                          attack_mask: np.ndarray) -> DiscreteCharacterization:
    """Cluster shift map over attacked steps: which evidence superstate shows
    up when each superstate was predicted."""
    mask = np.asarray(attack_mask, bool)
    if not mask.any():
        raise ValueError("no attacked steps to characterize")
    pred = trace.predicted_argmax[mask]
    obs = trace.evidence_argmax[mask]
    return DiscreteCharacterization(predicted=pred, observed=obs,
                                    shift_map=Counter(zip(pred.tolist(), obs.tolist())))


def characterize_continuous(trace: FilterTrace, observations: np.ndarray,
                            vocab: Vocabulary, attack_mask: np.ndarray,
                            grid_step: float = VOTE_GRID_STEP) -> ContinuousCharacterization:
    """Voted generalized offset of the jammer over attacked steps.

    Per step the offset is the observation minus the relevant cluster mean
    (evidence cluster when discrete prediction and evidence agree, predicted
    cluster otherwise, so a consistent shift is measured against the clean
    model). Offsets are quantized to an I/Q grid; the winning cell's member
    centroid is the characterized force. Vote ties break on the lexically
    lowest cell.
    """
    mask = np.asarray(attack_mask, bool)
    if not mask.any():
        raise ValueError("no attacked steps to characterize")
    obs = np.asarray(observations, float)[mask]
    pred_s = trace.predicted_argmax[mask]
    ev_s = trace.evidence_argmax[mask]
    anchor = np.where((pred_s == ev_s)[:, None], vocab.means[ev_s], vocab.means[pred_s])
    offsets = obs - anchor
    cells = np.round(offsets / grid_step).astype(int)
    votes = Counter(map(tuple, cells.tolist()))
    top = max(votes.values())
    winner = min(cell for cell, n in votes.items() if n == top)
    members = offsets[np.all(cells == np.asarray(winner), axis=1)]
    return ContinuousCharacterization(offsets=offsets, force=members.mean(axis=0),
                                      votes=votes)


def estimate_clean_residual(clean_trace: FilterTrace) -> np.ndarray:
    """Mean evidence residual on a clean run (the noise bias term)."""
    return clean_trace.evidence_residual[1:].mean(axis=0)


def extract_jammer(trace: FilterTrace, clean_residual: np.ndarray | None = None) -> np.ndarray:
    """Per-step jammer estimate: evidence residual minus the clean-run bias."""
    est = trace.evidence_residual.copy()
    if clean_residual is not None:
        est -= np.asarray(clean_residual, float)[None, :]
    return est


def suppress(observations: np.ndarray, jammer_estimate: np.ndarray) -> np.ndarray:
    """Subtract a jammer estimate from an observation stream."""
    obs = np.asarray(observations)
    est = np.asarray(jammer_estimate)
    if obs.shape != est.shape:
        raise ValueError("observation and estimate shapes differ")
    return obs - est


def estimate_jammer_amplitude(trace: FilterTrace, attack_mask: np.ndarray,
                              d: int, noise_power: float) -> float:
    """Per-symbol jammer amplitude from the evidence-residual power in the
    attacked window, with the clean noise power removed."""
    mask = np.asarray(attack_mask, bool)
    resid = trace.evidence_residual[mask]
    z = resid[:, :d] + 1j * resid[:, d:2 * d]
    power = float(np.mean(np.abs(z) ** 2)) - noise_power
    return float(np.sqrt(max(power, 1e-12)))


def decode_jammer(grid_samples: np.ndarray, vocab: Vocabulary, scheme: str,
                  attack_mask: np.ndarray, amplitude: float) -> np.ndarray:
    """Scheme-informed per-cell jammer estimate on the attacked steps.

    Jointly picks, per step, the command cluster and per-subcarrier jammer
    constellation points (scaled by the estimated amplitude) minimizing the
    residual energy. Returns a (d, T) complex jammer estimate, zero outside
    the attacked window.
    """
    samples = np.asarray(grid_samples, complex)
    d, t_n = samples.shape
    mask = np.asarray(attack_mask, bool)
    const = amplitude * constellation(scheme)
    cands = (vocab.means[:, :d] + 1j * vocab.means[:, d:2 * d])  # (L, d)
    est = np.zeros((d, t_n), complex)
    for t in np.flatnonzero(mask):
        resid = samples[:, t][None, :] - cands  # (L, d)
        dist = np.abs(resid[:, :, None] - const[None, None, :]) ** 2
        nearest = np.argmin(dist, axis=2)
        costs = np.take_along_axis(dist, nearest[:, :, None], axis=2)[:, :, 0].sum(axis=1)
        best = int(np.argmin(costs))
        est[:, t] = const[nearest[best]]
    return est


def update_transition_matrix(pi: np.ndarray, discrete_errors: np.ndarray,
                             winners: np.ndarray) -> np.ndarray:
    """Attack-informed transition matrix.

    Each attacked step proposes adding its discrete error (evidence minus
    prediction) to the row of its winning superstate; rows touched at least
    once are replaced by the average of their proposals, clamped to be
    non-negative and renormalized. Untouched rows are kept.
    """
    pi = np.asarray(pi, float)
    errs = np.atleast_2d(np.asarray(discrete_errors, float))
    winners = np.asarray(winners, int)
    if len(errs) != len(winners):
        raise ValueError("errors and winners differ in length")
    out = pi.copy()
    for row in np.unique(winners):
        proposals = pi[row][None, :] + errs[winners == row]
        new_row = np.maximum(proposals.mean(axis=0), 0.0)
        s = new_row.sum()
        out[row] = new_row / s if s > 0 else pi[row]
    return out


@dataclass
class DynamicModelOverlay:
    """Removable jammer-force overlay on a vocabulary.

    The force augments the expected derivative of every superstate's control
    during prediction; reverting to the base vocabulary restores the original
    predictions bit-exactly.
    """

    base: Vocabulary
    force: np.ndarray

    def control_overlay(self) -> np.ndarray | None:
        if not np.any(self.force):
            return None
        return np.asarray(self.force, float)


def update_dynamic_model(vocab: Vocabulary, force: np.ndarray) -> DynamicModelOverlay:
    force = np.asarray(force, float)
    if force.shape != (vocab.dim,):
        raise ValueError("force must be one generalized vector")
    return DynamicModelOverlay(base=vocab, force=force)


def switch_models(reference_scores: np.ndarray,
                  updated_scores: np.ndarray) -> np.ndarray:
    """Per-step model choice by lower abnormality: 0 = reference, 1 = updated;
    ties keep the reference."""
    ref = np.asarray(reference_scores, float)
    upd = np.asarray(updated_scores, float)
    if ref.shape != upd.shape:
        raise ValueError("score arrays differ in shape")
    return (upd < ref).astype(int)
