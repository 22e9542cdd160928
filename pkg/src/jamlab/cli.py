"""Command-line surface.

Each subcommand runs one experiment kind from a JSON config, writes CSV and
JSON artifacts plus rendered figures into the output directory, and prints
the metrics path. Exit codes: 0 success, 2 configuration error, 3 numerical
failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .harness import KINDS, RUNNERS, ExperimentConfig, run

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_config(config_path: str | None, kind: str) -> ExperimentConfig:
    if config_path is None:
        return ExperimentConfig(kind=kind)
    cfg = ExperimentConfig.from_json(config_path)
    if cfg.kind != kind:
        raise ValueError(f"config kind {cfg.kind} does not match "
                         f"subcommand {kind}")
    return cfg


def _execute(kind: str, config: str | None, seed: int | None, out: str) -> None:
    try:
        cfg = _load_config(config, kind)
    except (ValueError, TypeError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        results = run(cfg, Path(out), seed)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        click.echo(f"numerical failure: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    except OSError as exc:
        click.echo(f"io error: {exc.filename}: {exc}", err=True)
        sys.exit(EXIT_NUMERICAL)
    for s, metrics in results.items():
        click.echo(f"seed {s}: " + json.dumps(metrics, sort_keys=True,
                                              default=str))
    click.echo(f"artifacts written to {out}")


@click.group()
def main() -> None:
    """Jamming detection, classification, conversion, and anti-jamming
    experiments on a simulated OFDM command link."""


def _add_command(kind: str, help_text: str) -> None:
    @main.command(name=kind.lower(), help=help_text)
    @click.option("--config", type=click.Path(exists=False), default=None,
                  help="JSON experiment config; defaults are used if omitted.")
    @click.option("--seed", type=int, default=None,
                  help="Override the config seeds with a single seed.")
    @click.option("--out", type=click.Path(), default="out",
                  help="Output directory for artifacts.")
    def _cmd(config: str | None, seed: int | None, out: str,
             _kind: str = kind) -> None:
        _execute(_kind, config, seed, out)


_add_command("CALIBRATE", "Learn a clean-link vocabulary and thresholds.")
_add_command("DETECT", "Run jamming detection against a clean reference.")
_add_command("CHARACTERIZE", "Characterize, extract, and suppress a jammer.")
_add_command("CLASSIFY", "Classify the jammer modulation scheme.")
_add_command("CONVERT", "Convert a modulated stream to another scheme.")
_add_command("ANTIJAM", "Run the anti-jamming channel-selection agents.")


if __name__ == "__main__":
    main()
