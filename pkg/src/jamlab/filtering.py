"""Markov-modulated jump particle filter.

A bank of particles tracks the discrete superstate (proposed from the
dwell-conditioned transition model) and, per particle, a Kalman-filtered
continuous generalized state driven by the superstate's control. Discrete
evidence comes from inverse Bhattacharyya distances between the observation
likelihood and each superstate's Gaussian; weights are reweighted by that
evidence and resampled systematically when the effective sample size drops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .abnormality import (GeneralizedErrors, continuous_surprise,
                          generalized_errors, subcarrier_distances,
                          transition_surprise)
from .divergence import PROB_FLOOR
from .vocabulary import Vocabulary

DISTANCE_FLOOR = 1e-12


@dataclass
class MmjpfConfig:
    n_particles: int = 50
    process_noise: float = 1e-2
    resample_frac: float = 0.5
    seed: int = 0
    conditional: bool = False  # predecessor-conditioned controls and covariances
    # fraction of the proposal taken from the evidence distribution to avoid
    # particle impoverishment at superstate switches (importance-corrected)
    proposal_mix: float = 0.1

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("need at least one particle")
        if self.process_noise <= 0.0:
            raise ValueError("process noise must be > 0")


class EvidenceModel:
    """Precomputed per-superstate factors for the discrete evidence
    lambda(S): inverse Bhattacharyya distance between N(z, R) and each
    superstate Gaussian, normalized over superstates."""

    def __init__(self, vocab: Vocabulary, measurement_cov: np.ndarray):
        from scipy import linalg
        self._linalg = linalg
        r = np.asarray(measurement_cov, float)
        if r.ndim == 1:
            r = np.diag(r)
        self.r = r
        self.r_diag = np.diag(r).copy()
        self.logdet_r = float(np.linalg.slogdet(r)[1])
        self.means = vocab.means
        self._chols = []
        self._det_terms = []
        for s in vocab.superstates:
            mix = 0.5 * (s.cov + r)
            c = linalg.cho_factor(mix, lower=True)
            logdet_mix = 2.0 * float(np.sum(np.log(np.diag(c[0]))))
            logdet_s = float(np.linalg.slogdet(s.cov)[1])
            self._chols.append(c)
            self._det_terms.append(0.5 * (logdet_mix - 0.5 * (logdet_s + self.logdet_r)))

    def distances(self, z: np.ndarray) -> np.ndarray:
        out = np.empty(len(self._chols))
        for l, c in enumerate(self._chols):
            delta = z - self.means[l]
            maha = float(delta @ self._linalg.cho_solve(c, delta))
            out[l] = 0.125 * maha + self._det_terms[l]
        return np.maximum(out, DISTANCE_FLOOR)

    def evidence(self, z: np.ndarray) -> np.ndarray:
        inv = 1.0 / self.distances(z)
        return inv / inv.sum()


@dataclass
class BeliefState:
    states: np.ndarray    # (N,) int superstate per particle
    dwell: np.ndarray     # (N,) int consecutive steps in the state
    means: np.ndarray     # (N, dim) continuous state per particle
    covs: np.ndarray      # (N, dim, dim)
    weights: np.ndarray   # (N,)


@dataclass
class StepOutput:
    t: int
    winner_state: int
    winner_pred_mean: np.ndarray
    winner_pred_cov: np.ndarray
    winner_filtered_mean: np.ndarray
    predicted_probs: np.ndarray
    evidence_probs: np.ndarray
    klda: float
    cla: float
    clb: float
    dcla: np.ndarray
    ess: float
    resampled: bool
    degenerate: bool
    errors: GeneralizedErrors


@dataclass
class FilterTrace:
    """Stacked per-step filter outputs for a whole run."""

    winner_state: np.ndarray
    klda: np.ndarray
    cla: np.ndarray
    clb: np.ndarray
    dcla: np.ndarray
    ess: np.ndarray
    predicted_probs: np.ndarray
    evidence_probs: np.ndarray
    pred_means: np.ndarray
    filtered_means: np.ndarray
    evidence_residual: np.ndarray
    discrete_error: np.ndarray
    degenerate_steps: int = 0

    @property
    def evidence_argmax(self) -> np.ndarray:
        return np.argmax(self.evidence_probs, axis=1)

    @property
    def predicted_argmax(self) -> np.ndarray:
        return np.argmax(self.predicted_probs, axis=1)


class Mmjpf:
    """Stateful filter; call step() per observation or run() for a stream."""

    def __init__(self, vocab: Vocabulary, measurement_cov: np.ndarray,
                 cfg: MmjpfConfig | None = None,
                 control_overlay: np.ndarray | None = None):
        self.vocab = vocab
        self.cfg = cfg or MmjpfConfig()
        self.evidence_model = EvidenceModel(vocab, measurement_cov)
        self.rng = np.random.default_rng(self.cfg.seed)
        self.overlay = None if control_overlay is None else np.asarray(control_overlay, float)
        self.belief: BeliefState | None = None
        self._t = -1

    # -- belief initialization ------------------------------------------
    def init_belief(self, observation: np.ndarray) -> StepOutput:
        z = np.asarray(observation, float)
        n = self.cfg.n_particles
        resp = self.evidence_model.evidence(z)
        states = self._sample_rows(np.tile(resp, (n, 1)))
        dim = self.vocab.dim
        means = np.tile(z, (n, 1))
        covs = self.vocab.covs[states].copy()
        self.belief = BeliefState(states=states, dwell=np.ones(n, int), means=means,
                                  covs=covs, weights=np.full(n, 1.0 / n))
        self._t = 0
        d = self.vocab.d
        zero_err = GeneralizedErrors(*(np.zeros(dim) for _ in range(2)),
                                     np.zeros(self.vocab.n_states),
                                     *(np.zeros(dim) for _ in range(2)))
        return StepOutput(t=0, winner_state=int(np.argmax(resp)),
                          winner_pred_mean=z, winner_pred_cov=covs[0].copy(),
                          winner_filtered_mean=z.copy(),
                          predicted_probs=resp.copy(), evidence_probs=resp.copy(),
                          klda=0.0, cla=0.0, clb=0.0, dcla=np.zeros(d),
                          ess=float(n), resampled=False, degenerate=False,
                          errors=zero_err)

    def _sample_rows(self, rows: np.ndarray) -> np.ndarray:
        u = self.rng.random(len(rows))
        cdf = np.cumsum(rows, axis=1)
        cdf[:, -1] = 1.0
        return (u[:, None] > cdf).sum(axis=1).astype(int)

    # -- predict --------------------------------------------------------
    def predict(self, evidence: np.ndarray | None = None) -> None:
        b = self.belief
        v = self.vocab
        n = self.cfg.n_particles
        rows = v.pi_tau[np.minimum(b.dwell, v.tau_max) - 1, b.states]
        mix = self.cfg.proposal_mix
        if evidence is not None and mix > 0.0:
            proposal = (1.0 - mix) * rows + mix * evidence[None, :]
        else:
            proposal = rows
        new_states = self._sample_rows(proposal)
        # importance correction: weights carry prior/proposal for each draw
        ratio = rows[np.arange(n), new_states] / proposal[np.arange(n), new_states]
        b.weights = b.weights * ratio
        total = b.weights.sum()
        if total > 0.0:
            b.weights = b.weights / total
        else:
            b.weights = np.full(n, 1.0 / n)
        b.dwell = np.where(new_states == b.states, b.dwell + 1, 1)
        prev_states = b.states
        switched = new_states != prev_states
        b.states = new_states

        dim = v.dim
        half = dim // 2
        if self.cfg.conditional:
            u = np.stack([v.superstates[s].cond_mean(p)[half:]
                          for s, p in zip(new_states, prev_states)])
            cond_cov = np.stack([v.superstates[s].cond_cov(p)
                                 for s, p in zip(new_states, prev_states)])
            b.covs = cond_cov + self.cfg.process_noise * np.eye(dim)
        else:
            u = v.controls[new_states]
            propagated = np.zeros_like(b.covs)
            propagated[:, :half, :half] = b.covs[:, :half, :half]
            b.covs = propagated + self.cfg.process_noise * np.eye(dim)

        u_eff = u if self.overlay is None else u + self.overlay[None, half:]
        b.means[:, :half] += u
        b.means[:, half:] = u_eff
        if np.any(switched) and not self.cfg.conditional:
            # discrete jump: the continuous state is re-drawn from the new
            # superstate rather than propagated across the switch
            b.means[switched, :half] = v.means[new_states[switched], :half]
            b.covs[switched] = (v.covs[new_states[switched]]
                                + self.cfg.process_noise * np.eye(dim))

    # -- update ---------------------------------------------------------
    def step(self, observation: np.ndarray) -> StepOutput:
        if self.belief is None:
            return self.init_belief(observation)
        self._t += 1
        z = np.asarray(observation, float)
        b = self.belief
        v = self.vocab
        n = self.cfg.n_particles
        dim = v.dim

        dists = self.evidence_model.distances(z)
        inv = 1.0 / dists
        lam = inv / inv.sum()
        self.predict(evidence=lam)
        pred_means = b.means.copy()
        pred_covs = b.covs.copy()

        # discrete prediction: weighted occupancy of proposed superstates
        # (importance-corrected, so it estimates the prior predictive)
        pi_s = np.bincount(b.states, weights=b.weights, minlength=v.n_states)
        pi_s = pi_s / pi_s.sum()

        # reweight in the log-distance domain: the normalized inverse
        # distance is kept as the reported evidence, but it is too flat to
        # outvote a sticky dwell prior at superstate switches
        w = b.weights * np.exp(-(dists[b.states] - dists.min()))
        degenerate = False
        if not np.any(w > 0.0) or not np.all(np.isfinite(w)):
            degenerate = True
            w = np.full(n, 1.0 / n)
        else:
            w = w / w.sum()
        b.weights = w

        # winning particle: highest weight, ties to the lowest superstate id
        top = np.flatnonzero(w == w.max())
        winner = int(top[np.lexsort((top, b.states[top]))[0]])
        win_state = int(b.states[winner])
        win_mean = pred_means[winner].copy()
        win_cov = pred_covs[winner].copy()

        klda_v = transition_surprise(v.pi, pi_s, lam)
        cla_v = continuous_surprise(win_mean, win_cov, z, self.evidence_model.r)
        ws = v.superstates[win_state]
        clb_v = continuous_surprise(win_mean, win_cov, ws.mean, ws.cov)
        dcla_v = subcarrier_distances(z, win_mean, v.d)
        errs = generalized_errors(z, win_mean, lam, pi_s, v.means)

        # per-particle Kalman update against the diagonal measurement noise
        innov = z[None, :] - b.means
        s_mats = b.covs + np.diag(self.evidence_model.r_diag)[None, :, :]
        k_gain = np.transpose(np.linalg.solve(s_mats, b.covs), (0, 2, 1))
        b.means = b.means + np.einsum("nij,nj->ni", k_gain, innov)
        eye = np.eye(dim)
        b.covs = np.einsum("nij,njk->nik", eye[None, :, :] - k_gain, b.covs)
        b.covs = 0.5 * (b.covs + np.transpose(b.covs, (0, 2, 1)))
        b.covs += 1e-12 * eye

        win_filtered = b.means[winner].copy()

        ess = 1.0 / float(np.sum(b.weights ** 2))
        resampled = False
        if ess < self.cfg.resample_frac * n:
            self._systematic_resample()
            resampled = True

        return StepOutput(t=self._t, winner_state=win_state,
                          winner_pred_mean=win_mean, winner_pred_cov=win_cov,
                          winner_filtered_mean=win_filtered,
                          predicted_probs=pi_s, evidence_probs=lam, klda=klda_v,
                          cla=cla_v, clb=clb_v, dcla=dcla_v, ess=ess,
                          resampled=resampled, degenerate=degenerate, errors=errs)

    def _systematic_resample(self) -> None:
        b = self.belief
        n = self.cfg.n_particles
        positions = (np.arange(n) + self.rng.random()) / n
        cdf = np.cumsum(b.weights)
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, positions)
        b.states = b.states[idx]
        b.dwell = b.dwell[idx]
        b.means = b.means[idx]
        b.covs = b.covs[idx]
        b.weights = np.full(n, 1.0 / n)

    # -- batch ----------------------------------------------------------
    def run(self, observations: np.ndarray) -> FilterTrace:
        obs = np.atleast_2d(np.asarray(observations, float))
        t_n = len(obs)
        v = self.vocab
        trace = FilterTrace(
            winner_state=np.zeros(t_n, int), klda=np.zeros(t_n),
            cla=np.zeros(t_n), clb=np.zeros(t_n), dcla=np.zeros((t_n, v.d)),
            ess=np.zeros(t_n), predicted_probs=np.zeros((t_n, v.n_states)),
            evidence_probs=np.zeros((t_n, v.n_states)),
            pred_means=np.zeros((t_n, v.dim)),
            filtered_means=np.zeros((t_n, v.dim)),
            evidence_residual=np.zeros((t_n, v.dim)),
            discrete_error=np.zeros((t_n, v.n_states)))
        for t in range(t_n):
            out = self.step(obs[t])
            trace.winner_state[t] = out.winner_state
            trace.klda[t] = out.klda
            trace.cla[t] = out.cla
            trace.clb[t] = out.clb
            trace.dcla[t] = out.dcla
            trace.ess[t] = out.ess
            trace.predicted_probs[t] = out.predicted_probs
            trace.evidence_probs[t] = out.evidence_probs
            trace.pred_means[t] = out.winner_pred_mean
            trace.filtered_means[t] = out.winner_filtered_mean
            trace.evidence_residual[t] = out.errors.evidence_residual
            trace.discrete_error[t] = out.errors.discrete_error
            trace.degenerate_steps += int(out.degenerate)
        return trace


def run_filter(vocab: Vocabulary, observations: np.ndarray,
               measurement_cov: np.ndarray, cfg: MmjpfConfig | None = None,
               control_overlay: np.ndarray | None = None) -> FilterTrace:
    """Convenience wrapper: run a fresh filter over an observation stream."""
    return Mmjpf(vocab, measurement_cov, cfg, control_overlay).run(observations)
