"""Experiment orchestration and artifact plumbing.

Each runner takes a configuration plus a seed, executes one experiment kind
end to end, writes delimited metrics and trace files plus rendered figures
into an output directory, and records every artifact in a manifest with
content hashes (figures are listed but not hashed; their byte content is
backend dependent). Reruns with the same configuration and seed produce
byte-identical data artifacts.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import active as act
from .abnormality import ThresholdConfig, calibrate_thresholds
from .channel import ChannelConfig
from .classifier import (classify_stream, interference_residuals,
                         residual_covariance, subcarrier_samples,
                         train_jammer_model, confusion_matrix,
                         correct_classification_probability)
from .filtering import FilterTrace, MmjpfConfig, run_filter
from .gng import GNGConfig
from .jammer_ops import (characterize_continuous, characterize_discrete,
                         decode_jammer, estimate_jammer_amplitude)
from .metrics import detection_rates, energy_scores, mse, roc_curve, spearman
from .modulation import ber, demodulate
from .scenario import (JammerStrategy, ScenarioConfig, generalized_observations,
                       grid_to_csv, synthesize_scenario)
from .transport import (amc_bank, amc_classify, analytical_ber, convert_stream,
                        generalized_symbol_stream, learn_symbol_vocabulary,
                        learn_transport_plan, noisy_symbol_stream,
                        retiming_factor)
from .vocabulary import Vocabulary, learn_vocabulary, measurement_covariance
from .modulation import bits_per_symbol

KINDS = ("CALIBRATE", "DETECT", "CHARACTERIZE", "CLASSIFY", "CONVERT", "ANTIJAM")


@dataclass
class ExperimentConfig:
    """JSON-facing experiment description.

    Sweep axes default to the single scenario value when left empty; extra
    carries kind-specific fields (schemes for CLASSIFY/CONVERT, agent and
    episode settings for ANTIJAM).
    """

    kind: str = "DETECT"
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    snr_db: tuple[float, ...] = ()
    jsr_db: tuple[float, ...] = ()
    n_states: tuple[int, ...] = ()
    bandwidth_mhz: tuple[float, ...] = ()
    seeds: tuple[int, ...] = (0,)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kind = self.kind.upper()
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if not self.seeds:
            raise ValueError("need at least one seed")

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ValueError("config root must be a JSON object")
        known = {"kind", "scenario", "snr_db", "jsr_db", "n_states",
                 "bandwidth_mhz", "seeds", "extra"}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        scen_raw = raw.pop("scenario", {})
        jam_raw = scen_raw.pop("jammer", None)
        if jam_raw is not None:
            jam_raw["on_windows"] = tuple(
                tuple(w) for w in jam_raw.get("on_windows", ()))
            jam_raw["target_prbs"] = tuple(jam_raw.get("target_prbs", ()))
            scen_raw["jammer"] = JammerStrategy(**jam_raw)
        scenario = ScenarioConfig(**scen_raw)
        for key in ("snr_db", "jsr_db", "n_states", "bandwidth_mhz", "seeds"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return cls(scenario=scenario, **raw)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: Path, seed: int, kind: str) -> Path:
    """Hash every data artifact in the directory; figures are listed
    unhashed since rendering is not byte-stable across backends."""
    out_dir = Path(out_dir)
    artifacts = {}
    for p in sorted(out_dir.iterdir()):
        if p.name == "manifest.json" or not p.is_file():
            continue
        artifacts[p.name] = None if p.suffix == ".png" else _sha256(p)
    manifest = {"kind": kind, "seed": seed, "artifacts": artifacts}
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return path


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def write_trace_csv(path: Path, trace: FilterTrace) -> None:
    d = trace.dcla.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "winner", "ess", "klda", "cla", "clb"]
                   + [f"dcla_{j + 1}" for j in range(d)])
        for t in range(len(trace.cla)):
            w.writerow([t, int(trace.winner_state[t]), f"{trace.ess[t]:.4f}",
                        f"{trace.klda[t]:.6f}", f"{trace.cla[t]:.6f}",
                        f"{trace.clb[t]:.6f}"]
                       + [f"{v:.6f}" for v in trace.dcla[t]])


def _figure(path: Path, draw) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(7, 4))
    draw(ax)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={})
    plt.close(fig)


def _train_reference(scen: ScenarioConfig, seed: int):
    """Clean-run vocabulary, measurement covariance, and thresholds."""
    chan = scen.channel()
    clean = synthesize_scenario(chan, None, np.random.default_rng(seed),
                                d=scen.d, n_steps=scen.n_steps)
    obs = generalized_observations(clean.grid)
    vocab = learn_vocabulary(obs, GNGConfig(max_nodes=4, seed=1))
    r = measurement_covariance(vocab, obs)
    cal = synthesize_scenario(chan, None, np.random.default_rng(seed + 7),
                              d=scen.d, n_steps=scen.n_steps)
    cal_trace = run_filter(vocab, generalized_observations(cal.grid), r,
                           MmjpfConfig(seed=seed + 3))
    th = calibrate_thresholds(cal_trace.cla[1:], cal_trace.dcla[1:],
                              cal_trace.clb[1:])
    return vocab, r, th, cal_trace


def run_calibrate(cfg: ExperimentConfig, out_dir: Path, seed: int) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab, r, th, cal_trace = _train_reference(cfg.scenario, seed)
    vocab.to_json(out_dir / "vocab.json")
    _write_json(out_dir / "thresholds.json", {
        "psi": th.psi, "eta": th.eta, "eta_model": th.eta_model,
        "dcla": None if th.dcla is None else th.dcla.tolist(),
        "measurement_cov_diag": np.diag(r).tolist(),
    })
    write_trace_csv(out_dir / "trace.csv", cal_trace)
    metrics = {"eta": th.eta, "psi": th.psi,
               "clean_cla_mean": float(cal_trace.cla[1:].mean()),
               "clean_cla_max": float(cal_trace.cla[1:].max())}
    _write_json(out_dir / "metrics.json", metrics)
    _figure(out_dir / "calibration.png", lambda ax: (
        ax.plot(cal_trace.cla, lw=0.8, label="score"),
        ax.axhline(th.eta, color="r", ls="--", label="threshold"),
        ax.set_xlabel("step"), ax.set_ylabel("abnormality"), ax.legend()))
    write_manifest(out_dir, seed, cfg.kind)
    return metrics


def _jammed_run(cfg: ExperimentConfig, seed: int, vocab: Vocabulary,
                r: np.ndarray):
    scen = cfg.scenario
    jam = JammerStrategy(pattern=scen.jammer.pattern,
                         target_prbs=scen.jammer.target_prbs,
                         hit_rate=scen.jammer.hit_rate,
                         on_windows=scen.jammer.on_windows,
                         signal=scen.jammer.signal, seed=seed)
    s = synthesize_scenario(scen.channel(), jam, np.random.default_rng(seed),
                            d=scen.d, n_steps=scen.n_steps)
    obs = generalized_observations(s.grid)
    trace = run_filter(vocab, obs, r, MmjpfConfig(seed=seed))
    return s, obs, trace


def run_detect(cfg: ExperimentConfig, out_dir: Path, seed: int) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    vocab, r, th, _ = _train_reference(cfg.scenario, seed=42)
    s, obs, trace = _jammed_run(cfg, seed, vocab, r)
    labels = s.step_jammed
    pd_, pfa = detection_rates(trace.cla[1:], labels[1:], th.eta)
    roc = roc_curve(trace.cla[1:], labels[1:])
    roc_ed = roc_curve(energy_scores(s.grid.samples)[1:], labels[1:])
    write_trace_csv(out_dir / "trace.csv", trace)
    grid_to_csv(out_dir / "grid.csv", s.grid, s.cell_jammed)
    vocab.to_json(out_dir / "vocab.json")
    with open(out_dir / "roc.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["pfa", "pd"])
        for x, y in zip(roc.pfa, roc.pd):
            w.writerow([f"{x:.6f}", f"{y:.6f}"])
    metrics = {"pd": pd_, "pfa": pfa, "eta": th.eta,
               "auc_cla": roc.auc, "auc_energy": roc_ed.auc}
    _write_json(out_dir / "metrics.json", metrics)
    _figure(out_dir / "detection.png", lambda ax: (
        ax.plot(trace.cla, lw=0.8, label="score"),
        ax.axhline(th.eta, color="r", ls="--", label="threshold"),
        ax.fill_between(np.arange(len(labels)), 0, trace.cla.max(),
                        where=labels, alpha=0.15, color="orange",
                        label="jammed"),
        ax.set_xlabel("step"), ax.set_ylabel("abnormality"), ax.legend()))
    write_manifest(out_dir, seed, cfg.kind)
    return metrics


def run_characterize(cfg: ExperimentConfig, out_dir: Path, seed: int) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scen = cfg.scenario
    vocab, r, th, _ = _train_reference(scen, seed=42)
    s, obs, trace = _jammed_run(cfg, seed, vocab, r)
    mask = s.step_jammed
    disc = characterize_discrete(trace, mask)
    cont = characterize_continuous(trace, obs, vocab, mask)
    chan = scen.channel()
    amp = estimate_jammer_amplitude(trace, mask, scen.d, chan.noise_power())
    est = decode_jammer(s.grid.samples, vocab, scen.jammer.signal, mask, amp)
    suppressed = s.grid.samples - est
    bits_true = demodulate(s.clean[:, mask].ravel(), scen.c2_scheme)
    ber_before = ber(demodulate(s.grid.samples[:, mask].ravel(),
                                scen.c2_scheme), bits_true)
    ber_after = ber(demodulate(suppressed[:, mask].ravel(), scen.c2_scheme),
                    bits_true)
    jam_power = float(np.mean(np.abs(s.jammer[:, mask]) ** 2))
    metrics = {
        "amplitude_estimate": amp,
        "amplitude_true": chan.jammer_amplitude(),
        "force_derivative": cont.control.tolist(),
        "shift_map": {f"{p}->{o}": n for (p, o), n in disc.shift_map.items()},
        "mse_before": mse(s.grid.samples[:, mask], s.clean[:, mask]),
        "mse_after": mse(suppressed[:, mask], s.clean[:, mask]),
        "mse_after_per_jammer_power":
            mse(suppressed[:, mask], s.clean[:, mask]) / jam_power,
        "ber_before": ber_before, "ber_after": ber_after,
    }
    _write_json(out_dir / "metrics.json", metrics)
    write_trace_csv(out_dir / "trace.csv", trace)
    grid = s.grid
    grid_to_csv(out_dir / "grid.csv", grid, s.cell_jammed)
    sup_grid = type(grid)(samples=suppressed,
                          subcarrier_spacing_hz=grid.subcarrier_spacing_hz,
                          slot_duration_s=grid.slot_duration_s)
    grid_to_csv(out_dir / "suppressed_grid.csv", sup_grid, s.cell_jammed)

    def draw(ax):
        before = s.grid.samples[:, mask].ravel()
        after = suppressed[:, mask].ravel()
        ax.plot(before.real, before.imag, ".", ms=2, alpha=0.4, label="received")
        ax.plot(after.real, after.imag, ".", ms=2, alpha=0.4, label="suppressed")
        ax.set_xlabel("I"), ax.set_ylabel("Q"), ax.legend(markerscale=4)

    _figure(out_dir / "suppression.png", draw)
    write_manifest(out_dir, seed, cfg.kind)
    return metrics


def run_classify(cfg: ExperimentConfig, out_dir: Path, seed: int) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scen = cfg.scenario
    schemes = list(cfg.extra.get("schemes",
                                 ("BPSK", "QPSK", "16QAM", "64QAM")))
    chan = scen.channel()
    clean = synthesize_scenario(chan, None, np.random.default_rng(42),
                                d=scen.d, n_steps=scen.n_steps)
    obs0 = generalized_observations(clean.grid)
    vocab = learn_vocabulary(obs0, GNGConfig(max_nodes=4, seed=1))
    r = measurement_covariance(vocab, obs0)
    scale = chan.jammer_amplitude() ** 2 + chan.noise_power()
    clean_res = subcarrier_samples(
        interference_residuals(obs0, vocab, chan.noise_power())[1:], scen.d)
    shared_cov = residual_covariance(clean_res)

    models = []
    for i, scheme in enumerate(schemes):
        parts = []
        for tr_seed in (20 + i, 60 + i):
            jam = JammerStrategy(pattern="WINDOWED", signal=scheme,
                                 on_windows=((50, 550),), seed=tr_seed)
            s = synthesize_scenario(chan, jam, np.random.default_rng(tr_seed),
                                    d=scen.d, n_steps=scen.n_steps)
            o = generalized_observations(s.grid)
            res = interference_residuals(o, vocab, scale)[50:550]
            parts.append(subcarrier_samples(res, scen.d))
        models.append(train_jammer_model(np.vstack(parts), scheme, seed=3))

    true_idx, pred_idx = [], []
    for i, scheme in enumerate(schemes):
        jam = JammerStrategy(pattern="WINDOWED", signal=scheme,
                             on_windows=((100, 200),), seed=seed)
        s = synthesize_scenario(chan, jam, np.random.default_rng(seed + i),
                                d=scen.d, n_steps=scen.n_steps)
        o = generalized_observations(s.grid)
        res = subcarrier_samples(
            interference_residuals(o, vocab, scale)[100:200], scen.d)
        result = classify_stream(res, models, windows=[(0, len(res))],
                                 cfg=MmjpfConfig(seed=7),
                                 shared_cov=shared_cov)
        true_idx.append(i)
        pred_idx.append(int(result.per_window[0]))
    cm = confusion_matrix(np.array(true_idx), np.array(pred_idx), len(schemes))
    p_cc = correct_classification_probability(cm)
    with open(out_dir / "confusion.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["true\\pred"] + schemes)
        for i, scheme in enumerate(schemes):
            w.writerow([scheme] + cm[i].tolist())
    metrics = {"p_cc": p_cc, "schemes": schemes,
               "confusion": cm.tolist()}
    _write_json(out_dir / "metrics.json", metrics)

    def draw(ax):
        im = ax.imshow(cm, cmap="Blues")
        ax.set_xticks(range(len(schemes)), schemes)
        ax.set_yticks(range(len(schemes)), schemes)
        ax.set_xlabel("decided"), ax.set_ylabel("true")
        for i in range(len(schemes)):
            for j in range(len(schemes)):
                ax.text(j, i, cm[i, j], ha="center", va="center")
        ax.figure.colorbar(im, ax=ax)

    _figure(out_dir / "confusion.png", draw)
    write_manifest(out_dir, seed, cfg.kind)
    return metrics


def run_convert(cfg: ExperimentConfig, out_dir: Path, seed: int) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    source = cfg.extra.get("source_scheme", "BPSK")
    target = cfg.extra.get("target_scheme", "QPSK")
    n_bits = int(cfg.extra.get("n_bits", 12000))
    snrs = list(cfg.snr_db) or [cfg.scenario.snr_db]
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, n_bits)
    k = bits_per_symbol(target)
    usable = bits[:len(bits) // k * k]
    src_clean = noisy_symbol_stream(bits, source, None)
    tgt_clean = noisy_symbol_stream(usable, target, None)
    vs = learn_symbol_vocabulary(src_clean, source, seed=2)
    vt = learn_symbol_vocabulary(tgt_clean, target, seed=2)
    plan = learn_transport_plan(vs, vt, src_clean[:len(usable)], tgt_clean,
                                source, target)
    plan.to_json(out_dir / "plan.json")
    gamma = retiming_factor(len(vs.means), len(vt.means))
    rows = []
    for snr in snrs:
        test_bits = np.random.default_rng(seed + 11).integers(0, 2, n_bits)
        tu = test_bits[:len(test_bits) // k * k]
        noisy = noisy_symbol_stream(tu, source, float(snr),
                                    np.random.default_rng(seed + 13))
        converted = convert_stream(noisy, vs, plan)
        got = demodulate(converted, target)
        b = ber(got[:len(tu)], tu)
        rows.append({"snr_db": float(snr), "ber": b,
                     "analytical_ber": analytical_ber(target, float(snr))})
    with open(out_dir / "ber.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["snr_db", "ber", "analytical_ber"])
        for row in rows:
            w.writerow([row["snr_db"], f"{row['ber']:.6f}",
                        f"{row['analytical_ber']:.6f}"])
    metrics = {"source": source, "target": target, "gamma": gamma,
               "ber": rows}
    _write_json(out_dir / "metrics.json", metrics)

    def draw(ax):
        x = [r["snr_db"] for r in rows]
        ax.semilogy(x, [max(r["ber"], 1e-6) for r in rows], "o-",
                    label="converted")
        ax.semilogy(x, [max(r["analytical_ber"], 1e-6) for r in rows], "s--",
                    label="analytical")
        ax.set_xlabel("SNR (dB)"), ax.set_ylabel("BER"), ax.legend()

    _figure(out_dir / "ber.png", draw)
    write_manifest(out_dir, seed, cfg.kind)
    return metrics


def run_antijam(cfg: ExperimentConfig, out_dir: Path, seed: int) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    extra = cfg.extra
    env_cfg = act.ActiveEnvConfig(
        n_prbs=int(extra.get("n_prbs", 6)),
        jammed_fraction=float(extra.get("jammed_fraction", 0.4)),
        snr_db=cfg.scenario.snr_db, jsr_db=cfg.scenario.jsr_db)
    n_steps = int(extra.get("n_steps", 2000))
    agents = list(extra.get("agents", ("ain", "ql", "fh")))
    vocab = act.reference_vocabulary()
    threshold = act.calibrate_collision_threshold(vocab, env_cfg.snr_db)
    metrics: dict = {"threshold": threshold, "agents": {}}
    logs = {}
    for agent in agents:
        log = act.run_episode(env_cfg, agent, n_steps, seed, vocab=vocab,
                              threshold=threshold)
        log.to_csv(out_dir / f"episode_{agent}.csv")
        logs[agent] = log
        cum = log.cumulative_reward()
        t = np.arange(1, n_steps + 1)
        metrics["agents"][agent] = {
            "final_cumulative_reward": int(cum[-1]),
            "collision_rate_last_quarter": log.collision_rate(3 * n_steps // 4),
            "reward_abnormality_spearman":
                spearman(cum / t, log.cumulative_abnormality() / t),
        }
    _write_json(out_dir / "metrics.json", metrics)

    def draw(ax):
        for agent, log in logs.items():
            ax.plot(log.cumulative_reward(), label=agent.upper())
        ax.set_xlabel("step"), ax.set_ylabel("cumulative reward"), ax.legend()

    _figure(out_dir / "rewards.png", draw)
    write_manifest(out_dir, seed, cfg.kind)
    return metrics


RUNNERS = {
    "CALIBRATE": run_calibrate,
    "DETECT": run_detect,
    "CHARACTERIZE": run_characterize,
    "CLASSIFY": run_classify,
    "CONVERT": run_convert,
    "ANTIJAM": run_antijam,
}


def run(cfg: ExperimentConfig, out_dir: str | Path,
        seed: int | None = None) -> dict:
    """Execute one experiment kind; one subdirectory per seed."""
    out_dir = Path(out_dir)
    seeds = (seed,) if seed is not None else cfg.seeds
    runner = RUNNERS[cfg.kind]
    results = {}
    for s in seeds:
        sub = out_dir / f"seed_{s}" if len(seeds) > 1 else out_dir
        results[int(s)] = runner(cfg, sub, int(s))
    return results
