import csv
import json

import pytest

from kgsoliton import cli
from kgsoliton.cli import (ConfigError, dump_config, list_presets, load_preset, main,
                           parse_config, parse_config_text, run_experiment, spec_from_dict)
from kgsoliton.evolve import BlowUpError
from kgsoliton.fields import read_snapshot

SMALL = """
command = "simulate"
seed = 3

[grid]
N = 16
L = 8.0

[soliton]
v = [0.3, 0.0, 0.0]

[perturbation]
kind = "compact_random"
relative_size = 0.05
radius = 3.0

[run]
T = 0.5
snapshots = [0.5]
"""


def test_minimal_file_gets_defaults(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('command = "soliton"\n')
    spec = parse_config(p)
    assert (spec.m, spec.beta, spec.grid.N, spec.grid.L) == (1.0, 2.0, 64, 16.0)
    assert spec.profile.kind == "wendland"


@pytest.mark.parametrize("text,match", [
    ('command = "soliton"\n[soliton]\nv = [1.2, 0, 0]\n', "superluminal"),
    ('command = "soliton"\n[grid]\nN = "big"\n', "grid.N"),
    ('command = "soliton"\n[grid]\nM = 3\n', "unknown field grid.M"),
    ('command = "fly"\n', "command"),
    ('command = "simulate"\n[run]\norder = 3\n', "run.order"),
])
def test_validation_names_field(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config_text(text)


def test_parse_error_has_line():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config_text('command = "soliton"\n[grid\n')


def test_round_trip():
    spec = parse_config_text(SMALL)
    assert parse_config_text(dump_config(spec)) == spec


def test_all_presets_parse():
    names = list_presets()
    for c in range(1, 10):
        assert any(n.startswith(f"c{c}_") for n in names)
    for n in names:
        load_preset(n)
    with pytest.raises(ConfigError, match="unknown preset"):
        load_preset("nope")


def test_wiener_check(tmp_path):
    assert main(["--preset", "wiener_check", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "wiener.json").read_text())
    assert rep["passed"] and rep["min_abs_rho_hat"] > 0
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["status"] == 0 and "wiener.json" in man["files"]


def run_small(tmp_path, name):
    p = tmp_path / "small.toml"
    p.write_text(SMALL)
    out = tmp_path / name
    assert main(["--config", str(p), "--out", str(out)]) == 0
    return out


def test_simulate_outputs(tmp_path):
    out = run_small(tmp_path, "a")
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.DictReader(fh))
    t = [float(r["t"]) for r in rows]
    assert all(b > a for a, b in zip(t, t[1:]))
    assert max(abs(float(r["rel_energy_drift"])) for r in rows) <= 1e-6
    man = json.loads((out / "manifest.json").read_text())
    for f in man["files"]:
        assert (out / f).is_file()
    snaps = [f for f in man["files"] if f.endswith(".kgs")]
    Y, time = read_snapshot(out / snaps[0])
    assert time == pytest.approx(0.5) and Y.grid.N == 16
    assert man["wraparound_bound"] > 0 and man["versions"]["kgsoliton"]


def test_determinism_and_manifest_rerun(tmp_path):
    a, b = run_small(tmp_path, "a"), run_small(tmp_path, "b")
    man = json.loads((a / "manifest.json").read_text())
    spec = spec_from_dict(man["config"])
    assert run_experiment(spec, tmp_path / "c") == 0
    for f in man["files"]:
        assert (a / f).read_bytes() == (b / f).read_bytes() == (tmp_path / "c" / f).read_bytes()


def test_seed_changes_perturbation(tmp_path):
    a = run_small(tmp_path, "a")
    p = tmp_path / "small.toml"
    assert main(["--config", str(p), "--out", str(tmp_path / "s"), "--seed", "4"]) == 0
    assert (a / "trajectory.csv").read_bytes() != (tmp_path / "s" / "trajectory.csv").read_bytes()


def test_exit_codes(tmp_path, monkeypatch, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('command = "soliton"\n[soliton]\nv = [1.2, 0, 0]\n')
    assert main(["--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    assert "superluminal" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.toml")]) == 1
    assert main(["--preset", "wiener_check", "--seed", str(2**64)]) == 1

    def boom(spec, out):
        raise BlowUpError("blow-up detected")

    monkeypatch.setitem(cli._DISPATCH, "wiener-check", boom)
    assert main(["--preset", "wiener_check", "--out", str(tmp_path / "y")]) == 2
    man = json.loads((tmp_path / "y" / "manifest.json").read_text())
    assert man["status"] == 2 and "BlowUpError" in man["error"]


def test_wraparound_is_a_validation_failure(tmp_path):
    p = tmp_path / "w.toml"
    p.write_text(SMALL.replace("T = 0.5", "T = 30.0").replace("snapshots = [0.5]", ""))
    assert main(["--config", str(p), "--out", str(tmp_path / "w")]) == 1


def test_list_presets(capsys):
    assert main(["--list-presets"]) == 0
    assert "c7_scatter" in capsys.readouterr().out
