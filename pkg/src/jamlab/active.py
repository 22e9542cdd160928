"""Anti-jamming channel selection by active inference.

An agent picks one physical resource block (PRB) per step, senses only that
PRB, and scores the sensed signal against a reference vocabulary of the clean
link. Abnormality above a calibrated threshold is read as a collision with
the jammer; collisions drive belief updates that steer future selections away
from risky PRBs without any external reward signal. Tabular Q-learning and
random frequency hopping run in the same environment as baselines.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .filtering import Mmjpf, MmjpfConfig
from .modulation import constellation
from .transport import learn_symbol_vocabulary, noisy_symbol_stream
from .vocabulary import Vocabulary

TAU_MAX = 20
GAMMA_BASE = 0.5
TIE_TOL = 1e-12


@dataclass
class ActiveBeliefs:
    """Dwell-indexed belief stacks over N PRBs.

    p_u: agent state transitions, (tau_max, N, N) row stochastic.
    p_j: believed jammer transitions, same shape.
    pi_a: state-to-action preference table, same shape.
    visit_counts backs the count-averaged p_u update.
    """

    p_u: np.ndarray
    p_j: np.ndarray
    pi_a: np.ndarray
    visit_counts: np.ndarray

    @property
    def n_prbs(self) -> int:
        return self.p_u.shape[1]


def init_beliefs(n: int, tau_max: int = TAU_MAX) -> ActiveBeliefs:
    """Uniform beliefs: every entry of every slice is 1/N."""
    if n < 2:
        raise ValueError("need at least two PRBs")
    shape = (tau_max, n, n)
    return ActiveBeliefs(p_u=np.full(shape, 1.0 / n),
                         p_j=np.full(shape, 1.0 / n),
                         pi_a=np.full(shape, 1.0 / n),
                         visit_counts=np.zeros(shape))


def select_action(beliefs: ActiveBeliefs, state: int, tau: int,
                  rng: np.random.Generator,
                  jam_source: int | None = None) -> int:
    """Risk-aware PRB choice.

    Score per action is the preference weight times one minus the believed
    jammer occupancy of that PRB; ties (including the uniform start, which
    degenerates to random sampling) break uniformly at random. The jammer
    row is indexed by the last PRB a collision was seen on; before any
    collision the occupancy term is flat and drops out.
    """
    t_idx = min(max(tau, 1), beliefs.p_u.shape[0]) - 1
    n = beliefs.n_prbs
    if jam_source is None:
        jam_row = np.full(n, 1.0 / n)
    else:
        jam_row = beliefs.p_j[t_idx, jam_source]
    scores = beliefs.pi_a[t_idx, state] * (1.0 - jam_row)
    best = scores.max()
    cand = np.flatnonzero(scores >= best - TIE_TOL)
    return int(rng.choice(cand))


def fuse_observations(per_prb: np.ndarray, action: int) -> np.ndarray:
    """Dirac-gated fusion: the selected PRB's observation passes, the rest
    carry zero weight."""
    obs = np.atleast_2d(np.asarray(per_prb, float))
    if not 0 <= action < len(obs):
        raise ValueError("action out of range")
    return obs[action].copy()


def _penalize_rows(rows: np.ndarray, idx: int, gamma: float) -> None:
    """Move gamma mass off column idx of each row, spread over the others,
    then clamp and renormalize. Operates in place on (..., N) rows."""
    n = rows.shape[-1]
    rows[..., idx] = rows[..., idx] - gamma
    others = [k for k in range(n) if k != idx]
    rows[..., others] += gamma / (n - 1)
    np.maximum(rows, 0.0, out=rows)
    rows /= rows.sum(axis=-1, keepdims=True)


def update_beliefs(beliefs: ActiveBeliefs, state: int, action: int,
                   next_state: int, collided: bool, gamma_star: float,
                   jam_source: int | None = None) -> ActiveBeliefs:
    """One belief update after an observed transition.

    The agent transition row is always refreshed as a count average with a
    uniform prior. On a perceived collision the preference table sheds
    gamma_star mass from the taken action, the believed jammer row (from the
    previous collision PRB, or the collided PRB itself at first) gains mass
    on the collided PRB, and the transition row gets the same corrective
    shift since the observation backing it is contaminated. Collision
    information is dwell independent here, so every tau slice updates
    jointly. Without a collision only the transition counts move.
    """
    n = beliefs.n_prbs
    beliefs.visit_counts[:, state, next_state] += 1.0
    counts = beliefs.visit_counts[:, state, :]
    beliefs.p_u[:, state, :] = (counts + 1.0) / (counts.sum(axis=-1, keepdims=True) + n)
    if collided and gamma_star > 0.0:
        _penalize_rows(beliefs.pi_a[:, state, :], action, gamma_star)
        _penalize_rows(beliefs.p_u[:, state, :], next_state, gamma_star)
        src = action if jam_source is None else jam_source
        beliefs.p_j[:, src, action] += gamma_star
        beliefs.p_j[:, src, :] /= beliefs.p_j[:, src, :].sum(axis=-1, keepdims=True)
    return beliefs


@dataclass
class ActiveEnvConfig:
    n_prbs: int = 6
    jammed_fraction: float = 0.4
    snr_db: float = 15.0
    jsr_db: float = 6.0
    scheme: str = "QPSK"
    jammer_scheme: str = "QPSK"
    target_prbs: tuple[int, ...] = ()

    def jammed_set(self) -> tuple[int, ...]:
        if self.target_prbs:
            return tuple(sorted(self.target_prbs))
        k = max(1, int(round(self.jammed_fraction * self.n_prbs)))
        return tuple(range(k))


class ActiveEnv:
    """N parallel PRBs carrying independent symbol streams; a constant
    jammer occupies a fixed subset. One call to step() advances every PRB
    one symbol and returns the received complex samples."""

    def __init__(self, cfg: ActiveEnvConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.jammed = np.zeros(cfg.n_prbs, bool)
        self.jammed[list(cfg.jammed_set())] = True
        self._points = constellation(cfg.scheme)
        self._jam_points = constellation(cfg.jammer_scheme)
        self.noise_power = 10.0 ** (-cfg.snr_db / 10.0)
        self.jammer_amplitude = 10.0 ** (cfg.jsr_db / 20.0)

    def step(self) -> np.ndarray:
        n = self.cfg.n_prbs
        sym = self._points[self.rng.integers(0, len(self._points), n)]
        jam = self._jam_points[self.rng.integers(0, len(self._jam_points), n)]
        noise = np.sqrt(self.noise_power / 2.0) * (self.rng.standard_normal(n)
                                                   + 1j * self.rng.standard_normal(n))
        return sym + self.jammer_amplitude * jam * self.jammed + noise

    def sinr_db(self, action: int) -> float:
        denom = self.noise_power
        if self.jammed[action]:
            denom += self.jammer_amplitude ** 2
        return float(10.0 * np.log10(1.0 / denom))


@dataclass
class Perceiver:
    """Stateful wrapper: fused samples in, abnormalities and a collision
    flag out. Keeps the previous fused sample so the derivative part of the
    generalized observation follows the stream the agent actually sensed."""

    filt: Mmjpf
    threshold: float
    _prev: np.ndarray | None = None
    _started: bool = False

    def perceive(self, sample: complex) -> tuple[float, float, bool]:
        cur = np.array([sample.real, sample.imag])
        if self._prev is None:
            z = np.concatenate([cur, np.zeros(2)])
        else:
            z = np.concatenate([cur, cur - self._prev])
        self._prev = cur
        if not self._started:
            self.filt.init_belief(z)
            self._started = True
            return 0.0, 0.0, False
        out = self.filt.step(z)
        return float(out.klda), float(out.cla), bool(out.cla > self.threshold)


def reference_vocabulary(scheme: str = "QPSK", n_bits: int = 4000,
                         seed: int = 0) -> Vocabulary:
    """Clean-link vocabulary for the per-PRB streams, trained noiseless."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, n_bits)
    return learn_symbol_vocabulary(noisy_symbol_stream(bits, scheme, None),
                                   scheme, seed=seed)


def measurement_cov_for(noise_power: float) -> np.ndarray:
    return np.diag([noise_power / 2.0, noise_power / 2.0,
                    noise_power, noise_power])


def calibrate_collision_threshold(vocab: Vocabulary, snr_db: float,
                                  n_steps: int = 400, seed: int = 1) -> float:
    """Mean plus three standard deviations of the clean-run continuous
    abnormality on a single non-jammed PRB."""
    cfg = ActiveEnvConfig(n_prbs=2, jammed_fraction=0.0, target_prbs=(1,),
                          snr_db=snr_db)
    env = ActiveEnv(cfg, np.random.default_rng(seed))
    filt = Mmjpf(vocab, measurement_cov_for(env.noise_power),
                 MmjpfConfig(conditional=True, seed=seed))
    per = Perceiver(filt, threshold=np.inf)
    scores = []
    for _ in range(n_steps):
        _, cla, _ = per.perceive(env.step()[0])
        scores.append(cla)
    s = np.asarray(scores[1:])
    return float(s.mean() + 3.0 * s.std())


@dataclass
class EpisodeLog:
    """Per-step record of one episode."""

    action: np.ndarray
    jammed: np.ndarray       # (T, N) bool ground truth
    collision: np.ndarray    # (T,) bool ground truth on the taken action
    reward: np.ndarray       # (T,) -1 on collision else +1
    abn_s: np.ndarray
    abn_x: np.ndarray
    sinr_db: np.ndarray
    flagged: np.ndarray      # (T,) bool perceived collision

    def cumulative_reward(self) -> np.ndarray:
        return np.cumsum(self.reward)

    def cumulative_abnormality(self) -> np.ndarray:
        return np.cumsum(self.abn_x)

    def collision_rate(self, start: int = 0, stop: int | None = None) -> float:
        window = self.collision[start:stop]
        return float(window.mean()) if len(window) else 0.0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "action", "jammed_set", "reward",
                        "abn_s", "abn_x", "sinr"])
            for t in range(len(self.action)):
                jset = "|".join(str(j) for j in np.flatnonzero(self.jammed[t]))
                w.writerow([t, int(self.action[t]), jset, int(self.reward[t]),
                            f"{self.abn_s[t]:.6f}", f"{self.abn_x[t]:.6f}",
                            f"{self.sinr_db[t]:.3f}"])


@dataclass
class QlConfig:
    learning_rate: float = 0.1
    discount: float = 0.9
    explore_fraction: float = 0.5


def run_episode(env_cfg: ActiveEnvConfig, agent: str, n_steps: int,
                seed: int, vocab: Vocabulary | None = None,
                threshold: float | None = None,
                ql_cfg: QlConfig | None = None) -> EpisodeLog:
    """One full episode for an agent in {"ain", "ql", "fh"}.

    All three agents share the environment model and the perception loop
    (so abnormality columns are always populated); only action selection
    differs. Rewards are ground truth: -1 on a true collision, +1 otherwise.
    The active-inference agent acts on its perceived collisions only.
    """
    agent = agent.lower()
    if agent not in ("ain", "ql", "fh"):
        raise ValueError(f"unknown agent {agent!r}")
    if vocab is None:
        vocab = reference_vocabulary(env_cfg.scheme)
    if threshold is None:
        threshold = calibrate_collision_threshold(vocab, env_cfg.snr_db)
    env = ActiveEnv(env_cfg, np.random.default_rng(seed))
    arng = np.random.default_rng(seed + 1)
    filt = Mmjpf(vocab, measurement_cov_for(env.noise_power),
                 MmjpfConfig(conditional=True, seed=seed + 2))
    per = Perceiver(filt, threshold)
    n = env_cfg.n_prbs
    beliefs = init_beliefs(n)
    ql = ql_cfg or QlConfig()
    q = np.zeros((n, n))
    log = EpisodeLog(action=np.zeros(n_steps, int),
                     jammed=np.zeros((n_steps, n), bool),
                     collision=np.zeros(n_steps, bool),
                     reward=np.zeros(n_steps, int),
                     abn_s=np.zeros(n_steps), abn_x=np.zeros(n_steps),
                     sinr_db=np.zeros(n_steps),
                     flagged=np.zeros(n_steps, bool))
    state = int(arng.integers(0, n))
    dwell = 1
    jam_source: int | None = None
    for t in range(n_steps):
        if agent == "ain":
            action = select_action(beliefs, state, dwell, arng, jam_source)
        elif agent == "ql":
            eps = max(0.0, 1.0 - t / max(1.0, ql.explore_fraction * n_steps))
            if arng.random() < eps:
                action = int(arng.integers(0, n))
            else:
                best = q[state].max()
                action = int(arng.choice(np.flatnonzero(q[state] >= best - TIE_TOL)))
        else:
            action = int(arng.integers(0, n))
        samples = env.step()
        fused = fuse_observations(
            np.column_stack([samples.real, samples.imag]), action)
        abn_s, abn_x, flag = per.perceive(complex(fused[0], fused[1]))
        collided = bool(env.jammed[action])
        reward = -1 if collided else 1
        log.action[t] = action
        log.jammed[t] = env.jammed
        log.collision[t] = collided
        log.reward[t] = reward
        log.abn_s[t] = abn_s
        log.abn_x[t] = abn_x
        log.sinr_db[t] = env.sinr_db(action)
        log.flagged[t] = flag
        if agent == "ain":
            gamma_star = GAMMA_BASE * min(1.0, abn_x / threshold) if flag else 0.0
            update_beliefs(beliefs, state, action, action, flag, gamma_star,
                           jam_source)
            if flag:
                jam_source = action
        elif agent == "ql":
            q[state, action] += ql.learning_rate * (
                reward + ql.discount * q[action].max() - q[state, action])
        dwell = dwell + 1 if action == state else 1
        state = action
    return log
