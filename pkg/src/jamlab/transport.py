"""Cross-modulation transport: matching, interaction, conversion, and
transport-based modulation classification.

Two symbol vocabularies (source and target constellations) are bridged by a
transport plan: a distance-based matching matrix, per-phase joint-firing
interaction matrices learned from bit-aligned streams, and per-pair forces
(centroid differences) with cross-covariances. A low-order stream is then
converted to a high-order one block by block: gamma source symbols carry the
bits of one target symbol, the interaction matrices vote for the target
cluster, and the filtered source states plus the forces land on it.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .divergence import gaussian_symmetric_kld, PROB_FLOOR
from .filtering import FilterTrace, MmjpfConfig, run_filter
from .gng import GNGConfig
from .modulation import modulate, scheme_order
from .vocabulary import (Vocabulary, assign_labels, learn_vocabulary,
                         measurement_covariance)

PLAN_SCHEMA_VERSION = 1


def generalized_symbol_stream(symbols: np.ndarray) -> np.ndarray:
    """Complex symbol stream to (T, 4) generalized samples [I, Q, dI, dQ]
    with a first-difference derivative (zero at t = 0)."""
    s = np.asarray(symbols, complex).ravel()
    out = np.zeros((s.size, 4))
    out[:, 0] = s.real
    out[:, 1] = s.imag
    out[1:, 2] = np.diff(s.real)
    out[1:, 3] = np.diff(s.imag)
    return out


def noisy_symbol_stream(bits: np.ndarray, scheme: str, snr_db: float | None,
                        rng: np.random.Generator | None = None) -> np.ndarray:
    """Modulated bit stream with optional complex AWGN at the given SNR."""
    sym = modulate(np.asarray(bits, int), scheme)
    if snr_db is not None:
        if rng is None:
            raise ValueError("noise requires an rng")
        sigma = np.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)
        sym = sym + sigma * (rng.standard_normal(sym.size)
                             + 1j * rng.standard_normal(sym.size))
    return sym


@dataclass
class VocabGraph:
    """A vocabulary viewed as a directed weighted graph (edges from the
    transition matrix, zero-weight edges pruned)."""

    vocab: Vocabulary

    def __post_init__(self):
        adj = self.vocab.pi > 0.0
        if not self._connected(adj | adj.T):
            warnings.warn("vocabulary graph is disconnected after pruning")

    @staticmethod
    def _connected(adj: np.ndarray) -> bool:
        n = len(adj)
        seen = {0}
        frontier = [0]
        while frontier:
            nxt = []
            for i in frontier:
                for j in np.flatnonzero(adj[i]):
                    if j not in seen:
                        seen.add(int(j))
                        nxt.append(int(j))
            frontier = nxt
        return len(seen) == n

    @property
    def n_vertices(self) -> int:
        return self.vocab.n_states


def matching_matrix(gs: VocabGraph, gt: VocabGraph) -> np.ndarray:
    """Pairwise symmetric KL between source and target vertex Gaussians,
    row-normalized so each source row is a distribution over targets."""
    vs, vt = gs.vocab, gt.vocab
    m = np.empty((vs.n_states, vt.n_states))
    for k in range(vs.n_states):
        for l in range(vt.n_states):
            m[k, l] = gaussian_symmetric_kld(vs.means[k], vs.covs[k],
                                             vt.means[l], vt.covs[l])
    sums = m.sum(axis=1, keepdims=True)
    if np.any(sums <= 0.0):
        # identical rows (source vertex equals every target) degenerate to uniform
        m = np.where(sums > 0.0, m, 1.0)
        sums = m.sum(axis=1, keepdims=True)
    return m / sums


def retiming_factor(n_source: int, n_target: int) -> int:
    """Integer block length: log2(target order) / log2(source order)."""
    gs, gt = np.log2(n_source), np.log2(n_target)
    gamma = gt / gs
    if gamma < 1 or abs(gamma - round(gamma)) > 1e-9:
        raise ValueError("conversion requires an integer upsizing factor")
    return int(round(gamma))


def interaction_matrices(source_labels: np.ndarray, target_labels: np.ndarray,
                         gamma: int, n_source: int, n_target: int) -> np.ndarray:
    """Per-phase joint-firing matrices (gamma, N_S, N_T).

    Phase phi pairs the phi-th source symbol of each block with the block's
    target symbol; each phase matrix is row-normalized (zero rows uniform).
    A single phase-blind matrix cannot disambiguate which member of the
    block each source label was, which the target vote needs.
    """
    src = np.asarray(source_labels, int)
    tgt = np.asarray(target_labels, int)
    if src.size != gamma * tgt.size:
        raise ValueError("source stream must hold gamma symbols per target symbol")
    j_phase = np.zeros((gamma, n_source, n_target))
    blocks = src.reshape(-1, gamma)
    for phi in range(gamma):
        np.add.at(j_phase[phi], (blocks[:, phi], tgt), 1.0)
    sums = j_phase.sum(axis=2, keepdims=True)
    j_phase = np.where(sums > 0.0, j_phase / np.maximum(sums, 1.0),
                       1.0 / n_target)
    return j_phase


@dataclass
class TransportPair:
    k: int
    l: int
    force: np.ndarray   # (4,) generalized centroid difference
    cov: np.ndarray     # (4, 4) cross-covariance of paired samples


@dataclass
class TransportPlan:
    source: str
    target: str
    gamma: int
    pairs: list[TransportPair]
    matching: np.ndarray        # (N_S, N_T) row-normalized distances
    interaction: np.ndarray     # (N_S, N_T) phase-averaged, row-stochastic
    j_phase: np.ndarray         # (gamma, N_S, N_T)
    source_means: np.ndarray = field(default=None)
    target_means: np.ndarray = field(default=None)
    schema_version: int = PLAN_SCHEMA_VERSION

    def force(self, k: int, l: int) -> np.ndarray:
        for p in self.pairs:
            if p.k == k and p.l == l:
                return p.force
        return self.target_means[l] - self.source_means[k]

    def target_for_block(self, block_labels: np.ndarray) -> int:
        """Target cluster maximizing the joint log interaction over the
        block's per-phase source labels."""
        labels = np.asarray(block_labels, int)
        if labels.size != self.gamma:
            raise ValueError("block length must equal gamma")
        logj = np.log(np.maximum(self.j_phase, PROB_FLOOR))
        return int(np.argmax(logj[np.arange(self.gamma), labels].sum(axis=0)))

    def to_json(self, path: str | Path | None = None) -> str:
        payload = {
            "schema_version": self.schema_version,
            "source": self.source,
            "target": self.target,
            "gamma": self.gamma,
            "pairs": [{"k": p.k, "l": p.l, "force": p.force.tolist(),
                       "cov": p.cov.tolist()} for p in self.pairs],
            "M": self.matching.tolist(),
            "J": self.interaction.tolist(),
            "J_phase": self.j_phase.tolist(),
            "source_means": self.source_means.tolist(),
            "target_means": self.target_means.tolist(),
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, source: str | Path) -> "TransportPlan":
        if isinstance(source, Path) or (isinstance(source, str)
                                        and source.lstrip()[:1] != "{"):
            text = Path(source).read_text()
        else:
            text = str(source)
        raw = json.loads(text)
        pairs = [TransportPair(k=int(p["k"]), l=int(p["l"]),
                               force=np.asarray(p["force"], float),
                               cov=np.asarray(p["cov"], float))
                 for p in raw["pairs"]]
        return cls(source=raw["source"], target=raw["target"],
                   gamma=int(raw["gamma"]), pairs=pairs,
                   matching=np.asarray(raw["M"], float),
                   interaction=np.asarray(raw["J"], float),
                   j_phase=np.asarray(raw["J_phase"], float),
                   source_means=np.asarray(raw["source_means"], float),
                   target_means=np.asarray(raw["target_means"], float),
                   schema_version=int(raw["schema_version"]))


def symbol_labels(observations: np.ndarray, vocab: Vocabulary) -> np.ndarray:
    """Nearest-cluster labels on the state block only (the derivative of an
    independent symbol stream carries no cluster information)."""
    obs = np.atleast_2d(np.asarray(observations, float))
    return assign_labels(obs[:, :2], vocab.means[:, :2])


def learn_symbol_vocabulary(symbols: np.ndarray, scheme: str,
                            seed: int = 0) -> Vocabulary:
    """Vocabulary of a symbol stream with one node per constellation point."""
    obs = generalized_symbol_stream(symbols)
    n_nodes = scheme_order(scheme)
    return learn_vocabulary(obs, GNGConfig(max_nodes=n_nodes, seed=seed),
                            bootstrap=False, conditional=True, d=1,
                            cluster_block=2)


def learn_transport_plan(source_vocab: Vocabulary, target_vocab: Vocabulary,
                         source_symbols: np.ndarray, target_symbols: np.ndarray,
                         source_scheme: str, target_scheme: str) -> TransportPlan:
    """Transport plan from bit-aligned source and target symbol streams
    (gamma source symbols carry the bits of one target symbol)."""
    gamma = retiming_factor(source_vocab.n_states, target_vocab.n_states)
    src_obs = generalized_symbol_stream(source_symbols)
    tgt_obs = generalized_symbol_stream(target_symbols)
    src_lab = symbol_labels(src_obs, source_vocab)
    tgt_lab = symbol_labels(tgt_obs, target_vocab)
    j_phase = interaction_matrices(src_lab, tgt_lab, gamma,
                                   source_vocab.n_states, target_vocab.n_states)
    j_mean = j_phase.mean(axis=0)
    j_mean = j_mean / j_mean.sum(axis=1, keepdims=True)
    m = matching_matrix(VocabGraph(source_vocab), VocabGraph(target_vocab))

    pairs = []
    blocks = src_lab.reshape(-1, gamma)
    src_blocks = src_obs.reshape(-1, gamma, 4)
    for k in range(source_vocab.n_states):
        for l in range(target_vocab.n_states):
            if j_mean[k, l] <= 0.0:
                continue
            sel_s, sel_t = [], []
            for phi in range(gamma):
                hit = (blocks[:, phi] == k) & (tgt_lab == l)
                sel_s.append(src_blocks[hit, phi])
                sel_t.append(tgt_obs[hit])
            xs = np.vstack(sel_s)
            xt = np.vstack(sel_t)
            force = target_vocab.means[l] - source_vocab.means[k]
            if len(xs):
                cross = (xt.T @ xs) / len(xs) - np.outer(xt.mean(axis=0),
                                                         xs.mean(axis=0))
            else:
                cross = np.zeros((4, 4))
            pairs.append(TransportPair(k=k, l=l, force=force, cov=cross))
    return TransportPlan(source=source_scheme, target=target_scheme,
                         gamma=gamma, pairs=pairs, matching=m,
                         interaction=j_mean, j_phase=j_phase,
                         source_means=source_vocab.means.copy(),
                         target_means=target_vocab.means.copy())


def convert_block(filtered_states: np.ndarray, block_labels: np.ndarray,
                  plan: TransportPlan) -> tuple[np.ndarray, int]:
    """One converted generalized state from gamma filtered source states:
    the block mean of (state + force toward the voted target cluster)."""
    states = np.atleast_2d(np.asarray(filtered_states, float))
    labels = np.asarray(block_labels, int)
    if len(states) != plan.gamma or labels.size != plan.gamma:
        raise ValueError("conversion runs on exactly gamma source steps")
    l_hat = plan.target_for_block(labels)
    moved = np.stack([states[phi] + plan.force(int(labels[phi]), l_hat)
                      for phi in range(plan.gamma)])
    return moved.mean(axis=0), l_hat


def convert_stream(source_symbols: np.ndarray, source_vocab: Vocabulary,
                   plan: TransportPlan,
                   measurement_cov: np.ndarray | None = None,
                   cfg: MmjpfConfig | None = None) -> np.ndarray:
    """Convert a source symbol stream to target symbols, one per gamma
    source steps, tracking the source with the predecessor-conditioned jump
    filter (unconditioned controls drift on repeated symbols; trailing
    partial blocks are dropped)."""
    obs = generalized_symbol_stream(source_symbols)
    if measurement_cov is None:
        measurement_cov = measurement_covariance(source_vocab, obs)
    if cfg is None:
        cfg = MmjpfConfig(conditional=True)
    trace = run_filter(source_vocab, obs, measurement_cov, cfg)
    n_blocks = len(obs) // plan.gamma
    out = np.empty(n_blocks, complex)
    for b in range(n_blocks):
        sl = slice(b * plan.gamma, (b + 1) * plan.gamma)
        state, _ = convert_block(trace.filtered_means[sl],
                                 trace.winner_state[sl], plan)
        out[b] = state[0] + 1j * state[1]
    return out


def analytical_ber(scheme: str, snr_db: float) -> float:
    """Textbook Gray-coded BER approximation for PSK/QAM at a given symbol
    SNR (unit-power constellations, complex AWGN)."""
    from scipy import stats as _st
    snr = 10.0 ** (snr_db / 10.0)
    m = scheme_order(scheme)
    k = int(np.log2(m))
    q = lambda x: float(_st.norm.sf(x))
    if scheme == "BPSK":
        return q(np.sqrt(2.0 * snr))
    if scheme in ("QPSK",):
        return q(np.sqrt(snr))
    if scheme.endswith("QAM"):
        return (4.0 / k) * (1.0 - 1.0 / np.sqrt(m)) * q(np.sqrt(3.0 * snr / (m - 1)))
    # M-PSK approximation
    return (2.0 / k) * q(np.sqrt(2.0 * snr) * np.sin(np.pi / m))


# -- transport-based modulation classification ---------------------------

@dataclass
class AmcModel:
    """One classification candidate: its symbol vocabulary and the prior
    used to weight clusters step to step (the stationary occupancy for the
    source scheme, a transported interaction row for converted ones)."""

    scheme: str
    vocab: Vocabulary
    prior: np.ndarray


def amc_bank(source_vocab: Vocabulary, source_scheme: str,
             plans: dict[str, TransportPlan],
             candidate_vocabs: dict[str, Vocabulary]) -> list[AmcModel]:
    """Candidate bank ordered ascending by modulation order."""
    models = [AmcModel(scheme=source_scheme, vocab=source_vocab,
                       prior=stationary_occupancy(source_vocab.pi))]
    for scheme, plan in plans.items():
        vocab = candidate_vocabs[scheme]
        occ = stationary_occupancy(source_vocab.pi)
        prior = occ @ plan.interaction
        prior = prior / prior.sum()
        models.append(AmcModel(scheme=scheme, vocab=vocab, prior=prior))
    models.sort(key=lambda m: m.vocab.n_states)
    return models


def stationary_occupancy(pi: np.ndarray, iters: int = 200) -> np.ndarray:
    p = np.full(len(pi), 1.0 / len(pi))
    for _ in range(iters):
        p = p @ pi
    return p / p.sum()


def amc_scores(observations: np.ndarray, models: list[AmcModel],
               measurement_cov: np.ndarray) -> np.ndarray:
    """Per-step abnormality of each candidate model: the negative log of the
    prior-weighted marginal likelihood of the observation's state block
    under the model's clusters, each widened by the measurement covariance.
    The prior weight is what lets a low-order scheme beat a high-order
    superset whose denser grid also covers every observation; the derivative
    block is skipped because a per-cluster Gaussian misrepresents the
    multimodal symbol-difference distribution and only adds noise."""
    from scipy import linalg
    obs = np.atleast_2d(np.asarray(observations, float))
    r = np.asarray(measurement_cov, float)
    if r.ndim == 1:
        r = np.diag(r)
    half = obs.shape[1] // 2
    idx = np.arange(half)
    o = obs[:, :half]
    out = np.empty((len(obs), len(models)))
    for k, model in enumerate(models):
        log_prior = np.log(np.maximum(model.prior, PROB_FLOOR))
        loglik = np.empty((len(obs), model.vocab.n_states))
        for l in range(model.vocab.n_states):
            cov = (model.vocab.covs[l] + r)[np.ix_(idx, idx)]
            c = linalg.cho_factor(cov, lower=True)
            logdet = 2.0 * float(np.sum(np.log(np.diag(c[0]))))
            delta = o - model.vocab.means[l][:half][None, :]
            maha = np.einsum("ti,ti->t", delta,
                             linalg.cho_solve(c, delta.T).T)
            loglik[:, l] = -0.5 * (maha + logdet + half * np.log(2.0 * np.pi))
        mix = loglik + log_prior[None, :]
        peak = mix.max(axis=1)
        out[:, k] = -(peak + np.log(np.exp(mix - peak[:, None]).sum(axis=1)))
    return out


def amc_classify(observations: np.ndarray, models: list[AmcModel],
                 measurement_cov: np.ndarray,
                 window: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Window decisions (argmin of summed scores per window) and the raw
    per-step score matrix; trailing partial windows are dropped."""
    scores = amc_scores(observations, models, measurement_cov)
    n_win = len(scores) // window
    if n_win == 0:
        raise ValueError("stream shorter than one decision window")
    winsum = scores[:n_win * window].reshape(n_win, window, -1).sum(axis=1)
    return np.argmin(winsum, axis=1), scores
