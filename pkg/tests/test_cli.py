import json

import pytest
from click.testing import CliRunner

from jamlab.cli import main
from jamlab.harness import KINDS, ExperimentConfig

SMALL_SCENARIO = {"bandwidth_mhz": 1.4, "snr_db": 15.0, "jsr_db": 6.0,
                  "d": 4, "n_steps": 120,
                  "jammer": {"pattern": "WINDOWED", "on_windows": [[40, 80]],
                             "signal": "QPSK"}}


def write_config(path, **kwargs):
    with open(path, "w") as fh:
        json.dump(kwargs, fh)
    return str(path)


def test_config_round_trip_and_validation(tmp_path):
    p = write_config(tmp_path / "c.json", kind="DETECT",
                     scenario=SMALL_SCENARIO, jsr_db=[0.0, 6.0], seeds=[1, 2])
    cfg = ExperimentConfig.from_json(p)
    assert cfg.kind == "DETECT"
    assert cfg.jsr_db == (0.0, 6.0)
    assert cfg.seeds == (1, 2)
    assert cfg.scenario.n_steps == 120
    assert cfg.scenario.jammer.on_windows == ((40, 80),)

    bad = write_config(tmp_path / "bad.json", kind="DETECT", bogus_field=1)
    with pytest.raises(ValueError, match="unknown config fields"):
        ExperimentConfig.from_json(bad)
    with pytest.raises(ValueError, match="unknown experiment kind"):
        ExperimentConfig(kind="FROBNICATE")
    with pytest.raises(ValueError, match="seed"):
        ExperimentConfig(kind="DETECT", seeds=())


def test_all_kinds_have_subcommands():
    assert set(main.commands) == {k.lower() for k in KINDS}
    for cmd in main.commands.values():
        opts = {p.name for p in cmd.params}
        assert {"config", "seed", "out"} <= opts


def test_cli_rejects_bad_configs(tmp_path):
    runner = CliRunner()
    missing = runner.invoke(main, ["detect", "--config",
                                   str(tmp_path / "nope.json")])
    assert missing.exit_code == 2

    bad = write_config(tmp_path / "bad.json", kind="DETECT", bogus=1)
    res = runner.invoke(main, ["detect", "--config", bad])
    assert res.exit_code == 2
    assert "config error" in res.output

    mismatch = write_config(tmp_path / "m.json", kind="CONVERT")
    res = runner.invoke(main, ["detect", "--config", mismatch])
    assert res.exit_code == 2

    garbage = tmp_path / "g.json"
    garbage.write_text("{not json")
    res = runner.invoke(main, ["detect", "--config", str(garbage)])
    assert res.exit_code == 2


def test_cli_calibrate_writes_artifacts(tmp_path):
    cfg = write_config(tmp_path / "cal.json", kind="CALIBRATE",
                       scenario=SMALL_SCENARIO)
    out = tmp_path / "out"
    res = CliRunner().invoke(main, ["calibrate", "--config", cfg,
                                    "--seed", "0", "--out", str(out)])
    assert res.exit_code == 0, res.output
    for name in ("vocab.json", "thresholds.json", "trace.csv",
                 "metrics.json", "calibration.png", "manifest.json"):
        assert (out / name).exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["kind"] == "CALIBRATE"
    assert manifest["artifacts"]["calibration.png"] is None
    assert isinstance(manifest["artifacts"]["trace.csv"], str)
    with open(out / "metrics.json") as fh:
        metrics = json.load(fh)
    assert metrics["eta"] > 0.0
