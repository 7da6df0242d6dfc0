import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from ldseds import cli, objectives

CONFIG = """
n_particles = 6
horizon = 12
dim = 3
runs_per_cell = 2
tolerances = [0.5, 0.05]
master_seed = 3

[[functions]]
id = "f01_zakharov_sr"

[[functions]]
id = "f07_levy_sr"

[[algorithms]]
id = "Rand"

[[algorithms]]
id = "SS"
construction = "combined"
generator = "sobol"

[[algorithms]]
id = "CL"
engine = "clpso"
construction = "direct"
generator = "hua_wang"
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text(CONFIG)
    return path


def curve_bytes(root):
    return {p.relative_to(root): p.read_bytes() for p in sorted(root.glob("curves/**/*.csv"))}


def test_run_rank_report(tmp_path, config_file, capsys):
    out = tmp_path / "res"
    assert cli.main(["run", "--config", str(config_file), "--out", str(out)]) == 0
    assert len(curve_bytes(out)) == 12
    capsys.readouterr()
    assert cli.main(["rank", str(out), "--tol", "0.5", "--out", str(tmp_path / "rep")]) == 0
    text = capsys.readouterr().out
    assert "eps_tol = 0.5" in text and "AvgR" in text and "tau_F" in text
    assert (tmp_path / "rep" / "rank_tol0.5.csv").exists()
    assert cli.main(["report", str(out), "--format", "json", "--tol", "0.5", "--alpha", "0.1"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["alpha"] == 0.1 and payload["algorithms"] == ["Rand", "SS", "CL"]


def test_run_twice_and_jobs_identical(tmp_path, config_file):
    for name, jobs in (("a", "1"), ("b", "1"), ("c", "8")):
        assert cli.main(["run", "--config", str(config_file), "--out", str(tmp_path / name), "--jobs", jobs]) == 0
    a, b, c = (curve_bytes(tmp_path / n) for n in "abc")
    assert a == b == c


def test_seed_override_changes_curves(tmp_path, config_file):
    cli.main(["run", "--config", str(config_file), "--out", str(tmp_path / "a")])
    cli.main(["run", "--config", str(config_file), "--out", str(tmp_path / "b"), "--seed", "4"])
    a, b = curve_bytes(tmp_path / "a"), curve_bytes(tmp_path / "b")
    assert a.keys() == b.keys() and a != b
    manifest = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert manifest["config"]["master_seed"] == 4


def test_invalid_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(CONFIG.replace("f07_levy_sr", "f99"))
    assert cli.main(["run", "--config", str(bad)]) == 1
    assert "unknown function" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "missing.toml")]) == 1


def test_bad_arguments_exit_code():
    with pytest.raises(SystemExit) as info:
        cli.main(["run"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        cli.main(["rank", "x", "--tol", "a,b"])
    assert info.value.code == 1


def test_runtime_failure_keeps_partial_results(tmp_path, config_file, monkeypatch, capsys):
    real = objectives.make_registered

    def broken(fid, d, shift_seed=1, rot_seed=2):
        spec = real(fid, d, shift_seed, rot_seed)
        if fid == "f07_levy_sr":
            return lambda x: np.full(len(x), np.inf)
        return spec

    monkeypatch.setattr(objectives, "make_registered", broken)
    out = tmp_path / "res"
    assert cli.main(["run", "--config", str(config_file), "--out", str(out)]) == 2
    assert "failed: f07_levy_sr" in capsys.readouterr().err
    assert len(curve_bytes(out)) == 6
    manifest = json.loads((out / "manifest.json").read_text())
    assert sum(r["status"] == "failed" for r in manifest["runs"]) == 6


def test_rank_missing_results(tmp_path):
    assert cli.main(["rank", str(tmp_path / "nothing")]) == 1


def test_sample_point_set(capsys):
    assert cli.main(["sample", "--generator", "halton", "-n", "3", "-d", "2"]) == 0
    rows = [list(map(float, line.split())) for line in capsys.readouterr().out.splitlines()]
    np.testing.assert_allclose(rows, [[0.5, 1 / 3], [0.25, 2 / 3], [0.75, 1 / 9]])


def test_sample_stream(tmp_path):
    out = tmp_path / "s.txt"
    assert cli.main(["sample", "--generator", "scrambled_halton", "-n", "4", "-d", "2",
                     "--construction", "combined", "--horizon", "3", "--out", str(out)]) == 0
    from ldseds import lds

    assert lds.load_point_set(out).points.shape == (4, 16)


def test_sample_over_limit_is_clean(capsys):
    assert cli.main(["sample", "--generator", "sobol", "-n", "2", "-d", "10",
                     "--construction", "direct", "--horizon", "100"]) == 1
    assert "1024" in capsys.readouterr().err


def test_dispersion_command(tmp_path, capsys):
    out = tmp_path / "d.json"
    assert cli.main(["dispersion", "-n", "64", "-d", "2", "--probes", "5000", "--seed", "0,1",
                     "--sampler", "U:random", "--sampler", "H:direct:halton", "--out", str(out)]) == 0
    rows = json.loads(out.read_text())
    assert [r["sampler"] for r in rows] == ["U", "U", "H", "H"]
    assert cli.main(["dispersion", "-n", "4", "-d", "2", "--sampler", "broken"]) == 1


@pytest.mark.skipif(shutil.which("ldseds") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["ldseds", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "ldseds" in res.stdout


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "ldseds.cli", "sample", "-n", "1", "-d", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0.5"
