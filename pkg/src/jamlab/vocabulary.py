"""Vocabulary learning: from raw observation streams to a discrete set of
superstates with Gaussian statistics and (time-varying) transition models.

The pipeline is: bootstrap a static Kalman filter over the I/Q block of the
generalized observations to produce generalized error samples
[filtered state, innovation], cluster those samples with growing neural gas,
then estimate per-cluster Gaussian statistics and dwell-conditioned
transition matrices from the label sequence.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .gng import GNGConfig, gng_train

SCHEMA_VERSION = 1
RIDGE_SCALE = 1e-6
TRANSITION_EPS = 1e-6
DEFAULT_TAU_MAX = 20


def ukf_bootstrap(observations: np.ndarray, process_noise: float = 0.1,
                  measurement_noise: float = 0.01) -> np.ndarray:
    """Generalized error samples from a static-model Kalman filter.

    observations is (T, 4d) generalized vectors; the filter runs on the
    first-half block (the per-subcarrier I/Q samples) with identity dynamics
    and isotropic noise. Each output row is [filtered state, innovation]
    where the innovation is measured against the previous posterior, zero at
    the first step. Output shape matches the input.
    """
    obs = np.asarray(observations, float)
    if obs.ndim != 2 or obs.shape[1] % 4 != 0:
        raise ValueError("observations must be (T, 4d)")
    if process_noise <= 0.0 or measurement_noise <= 0.0:
        raise ValueError("noise variances must be > 0 (singular model)")
    half = obs.shape[1] // 2
    z = obs[:, :half]
    t_n = len(z)
    errors = np.zeros((t_n, 2 * half))

    x = z[0].copy()
    p = measurement_noise  # scalar variance, same for every dimension
    errors[0, :half] = x
    for t in range(1, t_n):
        p_pred = p + process_noise
        innov = z[t] - x
        k = p_pred / (p_pred + measurement_noise)
        x = x + k * innov
        p = (1.0 - k) * p_pred
        errors[t, :half] = x
        errors[t, half:] = innov
    return errors


def steady_state_gain(process_noise: float, measurement_noise: float) -> float:
    """Fixed-point Kalman gain of the scalar static-model filter.

    The steady-state predicted variance m solves m = (1 - m/(m+r)) m + q;
    the gain is m/(m+r).
    """
    q, r = process_noise, measurement_noise
    m = 0.5 * (q + np.sqrt(q * q + 4.0 * q * r))
    return float(m / (m + r))


def assign_labels(samples: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Nearest-node label per sample, ties to the lowest node id."""
    samples = np.atleast_2d(np.asarray(samples, float))
    nodes = np.atleast_2d(np.asarray(nodes, float))
    d2 = ((samples[:, None, :] - nodes[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def _ridge(samples: np.ndarray) -> float:
    dim = samples.shape[1]
    if len(samples) > 1:
        scale = float(np.trace(np.cov(samples.T, ddof=1))) / dim if dim > 1 else \
            float(np.var(samples, ddof=1))
    else:
        scale = 0.0
    if scale <= 0.0:
        scale = 1.0
    return RIDGE_SCALE * scale


def superstate_statistics(samples: np.ndarray, labels: np.ndarray,
                          nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster mean and regularized covariance.

    Covariances are unbiased sample covariances plus a small ridge scaled to
    the overall data spread; empty or singleton clusters fall back to the
    node position and the ridge alone.
    """
    samples = np.asarray(samples, float)
    labels = np.asarray(labels, int)
    nodes = np.atleast_2d(np.asarray(nodes, float))
    n_nodes, dim = nodes.shape
    ridge = _ridge(samples)
    means = np.empty((n_nodes, dim))
    covs = np.empty((n_nodes, dim, dim))
    for m in range(n_nodes):
        sel = samples[labels == m]
        if len(sel) == 0:
            means[m] = nodes[m]
            covs[m] = ridge * np.eye(dim)
            continue
        means[m] = sel.mean(axis=0)
        if len(sel) > 1:
            covs[m] = np.cov(sel.T, ddof=1).reshape(dim, dim) + ridge * np.eye(dim)
        else:
            covs[m] = ridge * np.eye(dim)
    return means, covs


def estimate_transition_matrix(labels: np.ndarray, n_states: int,
                               eps: float = TRANSITION_EPS) -> np.ndarray:
    """Row-stochastic transition matrix with additive smoothing eps."""
    labels = np.asarray(labels, int)
    counts = np.zeros((n_states, n_states))
    np.add.at(counts, (labels[:-1], labels[1:]), 1.0)
    counts += eps
    return counts / counts.sum(axis=1, keepdims=True)


def dwell_times(labels: np.ndarray, tau_max: int = DEFAULT_TAU_MAX) -> np.ndarray:
    """Consecutive steps already spent in labels[t]'s state at time t,
    starting at 1 and capped at tau_max."""
    labels = np.asarray(labels, int)
    tau = np.ones(len(labels), dtype=int)
    for t in range(1, len(labels)):
        tau[t] = min(tau[t - 1] + 1, tau_max) if labels[t] == labels[t - 1] else 1
    return tau


def estimate_time_varying_transitions(labels: np.ndarray, n_states: int,
                                      tau_max: int = DEFAULT_TAU_MAX,
                                      eps: float = TRANSITION_EPS) -> np.ndarray:
    """Dwell-conditioned transition tensor (tau_max, n, n).

    Slice tau-1 holds transition probabilities given the chain has dwelled
    tau steps in the current state. Dwell/state combinations never observed
    fall back to the stationary matrix row.
    """
    labels = np.asarray(labels, int)
    pi = estimate_transition_matrix(labels, n_states, eps)
    tau = dwell_times(labels, tau_max)
    counts = np.zeros((tau_max, n_states, n_states))
    np.add.at(counts, (tau[:-1] - 1, labels[:-1], labels[1:]), 1.0)
    out = np.empty_like(counts)
    for k in range(tau_max):
        for i in range(n_states):
            row_n = counts[k, i].sum()
            if row_n == 0:
                out[k, i] = pi[i]
            else:
                row = counts[k, i] + eps
                out[k, i] = row / row.sum()
    return out


def conditional_statistics(samples: np.ndarray, labels: np.ndarray,
                           n_states: int) -> dict[int, dict[int, tuple[np.ndarray, np.ndarray]]]:
    """Statistics of samples in state m keyed by the predecessor state j.

    Returns {m: {j: (mean, cov)}} for every (j -> m) transition observed at
    least once (self-transitions included).
    """
    samples = np.asarray(samples, float)
    labels = np.asarray(labels, int)
    ridge = _ridge(samples)
    dim = samples.shape[1]
    out: dict[int, dict[int, tuple[np.ndarray, np.ndarray]]] = {}
    for m in range(n_states):
        per_prev: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for j in range(n_states):
            sel = samples[1:][(labels[1:] == m) & (labels[:-1] == j)]
            if len(sel) == 0:
                continue
            mean = sel.mean(axis=0)
            if len(sel) > 1:
                cov = np.cov(sel.T, ddof=1).reshape(dim, dim) + ridge * np.eye(dim)
            else:
                cov = ridge * np.eye(dim)
            per_prev[j] = (mean, cov)
        if per_prev:
            out[m] = per_prev
    return out


@dataclass
class Superstate:
    id: int
    mean: np.ndarray
    cov: np.ndarray
    cond: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    @property
    def control(self) -> np.ndarray:
        """Derivative block of the mean (expected per-step motion)."""
        half = self.mean.size // 2
        return self.mean[half:]

    def cond_mean(self, prev: int) -> np.ndarray:
        return self.cond[prev][0] if prev in self.cond else self.mean

    def cond_cov(self, prev: int) -> np.ndarray:
        return self.cond[prev][1] if prev in self.cond else self.cov


@dataclass
class Vocabulary:
    """Learned discrete vocabulary: superstates plus transition models."""

    superstates: list[Superstate]
    pi: np.ndarray
    pi_tau: np.ndarray
    d: int
    tag: str = "REFERENCE"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        n = len(self.superstates)
        self.pi = np.asarray(self.pi, float)
        self.pi_tau = np.asarray(self.pi_tau, float)
        if self.pi.shape != (n, n):
            raise ValueError("pi shape mismatch")
        if self.pi_tau.ndim != 3 or self.pi_tau.shape[1:] != (n, n):
            raise ValueError("pi_tau shape mismatch")

    @property
    def n_states(self) -> int:
        return len(self.superstates)

    @property
    def dim(self) -> int:
        return self.superstates[0].mean.size

    @property
    def means(self) -> np.ndarray:
        return np.stack([s.mean for s in self.superstates])

    @property
    def covs(self) -> np.ndarray:
        return np.stack([s.cov for s in self.superstates])

    @property
    def controls(self) -> np.ndarray:
        return np.stack([s.control for s in self.superstates])

    @property
    def tau_max(self) -> int:
        return self.pi_tau.shape[0]

    def transition_row(self, state: int, tau: int) -> np.ndarray:
        return self.pi_tau[min(tau, self.tau_max) - 1, state]

    def to_json(self, path: str | Path | None = None) -> str:
        payload = {
            "tag": self.tag,
            "d": self.d,
            "schema_version": self.schema_version,
            "nodes": [
                {
                    "id": s.id,
                    "mean": s.mean.tolist(),
                    "cov": s.cov.tolist(),
                    "cond": {
                        str(j): {"mean": mc[0].tolist(), "cov": mc[1].tolist()}
                        for j, mc in sorted(s.cond.items())
                    },
                }
                for s in self.superstates
            ],
            "pi": self.pi.tolist(),
            "pi_tau": self.pi_tau.tolist(),
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source: str | Path) -> "Vocabulary":
        if isinstance(source, Path) or (isinstance(source, str)
                                        and source.lstrip()[:1] != "{"):
            text = Path(source).read_text()
        else:
            text = str(source)
        raw = json.loads(text)
        states = [
            Superstate(
                id=node["id"],
                mean=np.asarray(node["mean"], float),
                cov=np.asarray(node["cov"], float),
                cond={
                    int(j): (np.asarray(mc["mean"], float), np.asarray(mc["cov"], float))
                    for j, mc in node.get("cond", {}).items()
                },
            )
            for node in raw["nodes"]
        ]
        return cls(superstates=states, pi=np.asarray(raw["pi"], float),
                   pi_tau=np.asarray(raw["pi_tau"], float), d=raw["d"],
                   tag=raw["tag"], schema_version=raw["schema_version"])


def learn_vocabulary(observations: np.ndarray, gng_cfg: GNGConfig,
                     tag: str = "REFERENCE", d: int | None = None,
                     process_noise: float = 0.1, measurement_noise: float = 0.01,
                     tau_max: int = DEFAULT_TAU_MAX, bootstrap: bool | None = None,
                     conditional: bool | None = None,
                     cluster_block: int | None = None) -> Vocabulary:
    """Learn a vocabulary from generalized observations (REFERENCE tag) or
    directly from generalized error samples (JAMMER tag).

    REFERENCE streams are passed through the bootstrap filter first; JAMMER
    streams are clustered as-is and get conditional statistics populated.

    cluster_block limits clustering and label assignment to the first
    cluster_block dimensions (statistics still cover all of them); symbol
    streams use it because their derivative block is an uninformative
    symbol difference that otherwise dominates the distances.
    """
    obs = np.asarray(observations, float)
    if bootstrap is None:
        bootstrap = tag == "REFERENCE"
    if conditional is None:
        conditional = tag == "JAMMER"
    samples = ukf_bootstrap(obs, process_noise, measurement_noise) if bootstrap else obs
    if d is None:
        d = samples.shape[1] // 4
    cb = samples.shape[1] if cluster_block is None else cluster_block
    nodes = gng_train(samples[:, :cb], gng_cfg)
    labels = assign_labels(samples[:, :cb], nodes)
    # keep superstate ids stable across runs: order nodes lexicographically
    order = np.lexsort(nodes.T[::-1])
    nodes = nodes[order]
    labels = assign_labels(samples[:, :cb], nodes)
    full_nodes = np.zeros((len(nodes), samples.shape[1]))
    full_nodes[:, :cb] = nodes
    means, covs = superstate_statistics(samples, labels, full_nodes)
    n = len(nodes)
    pi = estimate_transition_matrix(labels, n)
    pi_tau = estimate_time_varying_transitions(labels, n, tau_max)
    cond = conditional_statistics(samples, labels, n) if conditional else {}
    states = [Superstate(id=m, mean=means[m], cov=covs[m], cond=cond.get(m, {}))
              for m in range(n)]
    if n < gng_cfg.max_nodes:
        warnings.warn(f"vocabulary converged with {n} < {gng_cfg.max_nodes} superstates")
    return Vocabulary(superstates=states, pi=pi, pi_tau=pi_tau, d=d, tag=tag)


def measurement_covariance(vocab: Vocabulary, observations: np.ndarray,
                           floor: float = 1e-8) -> np.ndarray:
    """Diagonal measurement covariance from clean-run residuals.

    Residuals are observation minus assigned superstate mean; the diagonal
    holds their per-dimension variance, floored for numerical safety.
    """
    obs = np.asarray(observations, float)
    labels = assign_labels(obs, vocab.means)
    resid = obs - vocab.means[labels]
    var = np.maximum(resid.var(axis=0, ddof=1), floor)
    return np.diag(var)
