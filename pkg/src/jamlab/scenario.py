"""Synthetic OFDM control-link scenarios.

A scenario is a time/frequency resource grid carrying a command stream: at
each time step one command symbol is replicated across the d sensed
sub-carriers, optionally hit by a jammer plus AWGN. The generalized
observation at step t stacks the per-subcarrier I and Q samples with their
first-order time differences, giving a 4d-dimensional vector.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelConfig
from .modulation import bits_per_symbol, constellation, modulate, scheme_order

PRB_COUNTS = {1.4: 6, 3.0: 15, 5.0: 25, 10.0: 50, 15.0: 75, 20.0: 100}
SUBCARRIER_SPACING_HZ = 15_000.0

JAMMER_PATTERNS = ("CONSTANT", "RANDOM", "SWEEP", "WINDOWED")


@dataclass
class JammerStrategy:
    """When and where the jammer transmits.

    pattern selects the schedule; target_prbs fixes the attacked resources
    for CONSTANT/WINDOWED; hit_rate sets the attacked fraction for
    RANDOM/SWEEP (and derives the CONSTANT set when target_prbs is empty);
    on_windows are [start, end) step ranges for WINDOWED; signal is a
    modulation scheme name or "TONE" for a constant complex signal.
    """

    pattern: str = "WINDOWED"
    target_prbs: tuple[int, ...] = ()
    hit_rate: float = 0.0
    on_windows: tuple[tuple[int, int], ...] = ()
    signal: str = "QPSK"
    seed: int = 0

    def __post_init__(self):
        if self.pattern not in JAMMER_PATTERNS:
            raise ValueError(f"unknown jammer pattern {self.pattern!r}")
        if not 0.0 <= self.hit_rate <= 1.0:
            raise ValueError("hit_rate must lie in [0, 1]")


def jammer_schedule(strategy: JammerStrategy, t: int, n_resources: int) -> frozenset[int]:
    """Set of resource indices the jammer hits at step t. Deterministic in
    (strategy.seed, t)."""
    n_hit = max(1, int(round(strategy.hit_rate * n_resources)))
    if strategy.pattern == "CONSTANT":
        if strategy.target_prbs:
            return frozenset(strategy.target_prbs)
        return frozenset(range(n_hit))
    if strategy.pattern == "SWEEP":
        k = n_hit if strategy.hit_rate > 0 else 1
        return frozenset((t + i) % n_resources for i in range(k))
    if strategy.pattern == "RANDOM":
        rng = np.random.default_rng((strategy.seed, t))
        return frozenset(int(i) for i in rng.choice(n_resources, size=n_hit, replace=False))
    # WINDOWED
    for start, end in strategy.on_windows:
        if start <= t < end:
            targets = strategy.target_prbs if strategy.target_prbs else range(n_resources)
            return frozenset(targets)
    return frozenset()


@dataclass
class ResourceGrid:
    """Complex baseband samples on a (subcarriers x time) grid."""

    samples: np.ndarray
    subcarrier_spacing_hz: float = SUBCARRIER_SPACING_HZ
    slot_duration_s: float = 1e-3

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.ndim != 2:
            raise ValueError("grid samples must be 2-D (subcarriers x time)")
        if not np.all(np.isfinite(self.samples.view(float))):
            raise ValueError("grid samples must be finite")

    @property
    def n_subcarriers(self) -> int:
        return self.samples.shape[0]

    @property
    def n_steps(self) -> int:
        return self.samples.shape[1]


@dataclass
class Scenario:
    """A synthesized run with ground truth attached."""

    grid: ResourceGrid
    clean: np.ndarray            # clean signal, (d, T) complex
    jammer: np.ndarray           # jammer contribution, (d, T) complex
    cell_jammed: np.ndarray      # (d, T) bool
    step_jammed: np.ndarray      # (T,) bool, any cell jammed
    command_bits: np.ndarray     # transmitted command bits
    command_symbols: np.ndarray  # (T,) complex command symbol per step
    command_index: np.ndarray    # (T,) int constellation word per step


def markov_command_stream(n_steps: int, scheme: str, rng: np.random.Generator,
                          stay_prob: float = 0.9) -> tuple[np.ndarray, np.ndarray]:
    """Sticky command stream: each step keeps the previous command word with
    probability stay_prob, otherwise draws a different word uniformly.
    Returns (words, bits)."""
    m = scheme_order(scheme)
    words = np.empty(n_steps, dtype=np.int64)
    words[0] = rng.integers(m)
    for t in range(1, n_steps):
        if rng.random() < stay_prob:
            words[t] = words[t - 1]
        else:
            step = 1 + rng.integers(m - 1)
            words[t] = (words[t - 1] + step) % m
    k = bits_per_symbol(scheme)
    shifts = np.arange(k - 1, -1, -1)
    bits = ((words[:, None] >> shifts) & 1).astype(np.int64).ravel()
    return words, bits


def synthesize_scenario(chan: ChannelConfig, jammer: JammerStrategy | None,
                        rng: np.random.Generator, c2_scheme: str = "QPSK",
                        d: int = 9, n_steps: int = 600,
                        stay_prob: float = 0.9,
                        replicate_jammer: bool = False) -> Scenario:
    """Build a d-subcarrier, n_steps-long control-link run.

    The command symbol is replicated across all d sub-carriers. Modulated
    jammers draw i.i.d. symbols per attacked sub-carrier per step unless
    replicate_jammer is set; a TONE jammer transmits a fixed unit-power
    complex value. Jammer amplitude follows the configured JSR, noise the
    configured SNR (unit signal amplitude).
    """
    if d < 1 or n_steps < 2:
        raise ValueError("need d >= 1 and n_steps >= 2")
    words, bits = markov_command_stream(n_steps, c2_scheme, rng, stay_prob)
    cmd_syms = constellation(c2_scheme)[words]
    clean = np.tile(cmd_syms, (d, 1))

    cell_jammed = np.zeros((d, n_steps), dtype=bool)
    jam = np.zeros((d, n_steps), dtype=complex)
    if jammer is not None:
        a_j = chan.jammer_amplitude()
        tone = (1.0 + 1.0j) / np.sqrt(2.0)
        for t in range(n_steps):
            hit = jammer_schedule(jammer, t, d)
            if not hit:
                continue
            idx = sorted(hit)
            cell_jammed[idx, t] = True
            if jammer.signal == "TONE":
                jam[idx, t] = a_j * tone
            else:
                const = constellation(jammer.signal)
                if replicate_jammer:
                    s = const[rng.integers(const.size)]
                    jam[idx, t] = a_j * s
                else:
                    jam[idx, t] = a_j * const[rng.integers(const.size, size=len(idx))]

    sigma = np.sqrt(chan.noise_power() / 2.0)
    noise = rng.normal(0.0, sigma, (d, n_steps)) + 1j * rng.normal(0.0, sigma, (d, n_steps))
    grid = ResourceGrid(clean + jam + noise)
    return Scenario(grid=grid, clean=clean, jammer=jam, cell_jammed=cell_jammed,
                    step_jammed=cell_jammed.any(axis=0), command_bits=bits,
                    command_symbols=cmd_syms, command_index=words)


def generalized_observations(grid: ResourceGrid) -> np.ndarray:
    """Stack [I_1..I_d, Q_1..Q_d, dI_1..dI_d, dQ_1..dQ_d] per step, (T, 4d).

    Derivatives are first differences in time; the first step's derivative
    block is zero.
    """
    i = grid.samples.real.T  # (T, d)
    q = grid.samples.imag.T
    di = np.zeros_like(i)
    dq = np.zeros_like(q)
    di[1:] = np.diff(i, axis=0)
    dq[1:] = np.diff(q, axis=0)
    return np.hstack([i, q, di, dq])


def states_to_symbols(states: np.ndarray, d: int) -> np.ndarray:
    """Recover per-subcarrier complex samples from the state block of
    generalized vectors, (T, 4d) or (T, 2d) -> (d, T)."""
    states = np.atleast_2d(np.asarray(states, float))
    return (states[:, :d] + 1j * states[:, d:2 * d]).T


@dataclass
class Trajectory:
    positions: np.ndarray  # (T+1, 3)
    velocities: np.ndarray  # (T, 3)


def integrate_trajectory(commands: np.ndarray, gain: float = 1.0,
                         dt: float = 0.05,
                         start: np.ndarray | None = None) -> Trajectory:
    """Forward-Euler position integration of velocity commands.

    commands is (T, 3); velocity = gain * command; all-zero commands keep the
    platform stationary.
    """
    commands = np.asarray(commands, float)
    if commands.ndim != 2 or commands.shape[1] != 3:
        raise ValueError("commands must be (T, 3)")
    vel = gain * commands
    pos = np.zeros((len(vel) + 1, 3))
    pos[0] = np.zeros(3) if start is None else np.asarray(start, float)
    pos[1:] = pos[0] + np.cumsum(vel * dt, axis=0)
    return Trajectory(positions=pos, velocities=vel)


# word -> (pitch, yaw, roll) velocity command lookup for QPSK command links
COMMAND_TABLE = np.array([
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
])


def grid_to_csv(path: str | Path, grid: ResourceGrid,
                cell_jammed: np.ndarray | None = None) -> None:
    """Write the grid as rows of (t, subcarrier, I, Q, label)."""
    d, t_n = grid.samples.shape
    labels = np.zeros((d, t_n), dtype=int) if cell_jammed is None else cell_jammed.astype(int)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "subcarrier", "i", "q", "label"])
        for t in range(t_n):
            for n in range(d):
                z = grid.samples[n, t]
                w.writerow([t, n, repr(float(z.real)), repr(float(z.imag)),
                            labels[n, t]])


def grid_from_csv(path: str | Path) -> tuple[ResourceGrid, np.ndarray]:
    """Read a grid CSV written by grid_to_csv. Returns (grid, labels)."""
    rows = []
    with open(path, newline="") as fh:
        r = csv.DictReader(fh)
        for row in r:
            rows.append((int(row["t"]), int(row["subcarrier"]),
                         float(row["i"]), float(row["q"]), int(row["label"])))
    if not rows:
        raise ValueError("empty grid CSV")
    t_n = max(r[0] for r in rows) + 1
    d = max(r[1] for r in rows) + 1
    samples = np.zeros((d, t_n), dtype=complex)
    labels = np.zeros((d, t_n), dtype=int)
    for t, n, i, q, lab in rows:
        samples[n, t] = i + 1j * q
        labels[n, t] = lab
    return ResourceGrid(samples), labels


@dataclass
class ScenarioConfig:
    """JSON-facing experiment configuration."""

    bandwidth_mhz: float = 1.4
    snr_db: float = 15.0
    jsr_db: float = 6.0
    c2_scheme: str = "QPSK"
    jammer_scheme: str = "QPSK"
    d: int = 9
    n_steps: int = 600
    stay_prob: float = 0.9
    seed: int = 0
    jammer: JammerStrategy = field(default_factory=lambda: JammerStrategy(
        pattern="WINDOWED", on_windows=((300, 600),), signal="QPSK"))

    def __post_init__(self):
        if self.bandwidth_mhz not in PRB_COUNTS:
            raise ValueError(f"bandwidth {self.bandwidth_mhz} MHz not in "
                             f"{sorted(PRB_COUNTS)}")

    @property
    def n_prbs(self) -> int:
        return PRB_COUNTS[self.bandwidth_mhz]

    def channel(self) -> ChannelConfig:
        return ChannelConfig(snr_db=self.snr_db, jsr_db=self.jsr_db)

    @classmethod
    def from_json(cls, path: str | Path) -> "ScenarioConfig":
        with open(path) as fh:
            raw = json.load(fh)
        jam_raw = raw.pop("jammer", None)
        jam_scheme = raw.get("jammer_scheme", "QPSK")
        if jam_raw is not None:
            jam_raw.setdefault("signal", jam_scheme)
            if "target_prbs" in jam_raw:
                jam_raw["target_prbs"] = tuple(jam_raw["target_prbs"])
            if "on_windows" in jam_raw:
                jam_raw["on_windows"] = tuple(tuple(w) for w in jam_raw["on_windows"])
            jammer = JammerStrategy(**jam_raw)
        else:
            jammer = JammerStrategy(pattern="WINDOWED", on_windows=((300, 600),),
                                    signal=jam_scheme)
        known = {k: v for k, v in raw.items() if k in cls.__dataclass_fields__}
        unknown = set(raw) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(jammer=jammer, **known)
