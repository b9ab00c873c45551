import csv
import hashlib
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from bjjcavity import cli
from bjjcavity.fixedpoints import Branch, Kind, StationaryPoint

FIG1 = {"r": 3.0, "A_tilde": 0.02, "B": -0.65, "C": 0.07}


def fig1_physical():
    """A laboratory set whose reduction is r=3, A~=0.02, B=-0.65, C=0.07."""
    omega, N, U0, J1, J2 = 2 * math.pi * 50, 1000, 2 * math.pi * 2.0, 0.6, 0.48
    u = (J1 - J2) * U0 * N / 2
    s = (J1 - J2) * U0 / (2 * omega)
    return {"omega": omega, "V": 3.0 * 2 * omega / N, "N": N, "J1": J1, "J2": J2,
            "omega_c": 2 * math.pi * 1e6,
            "omega_p": 2 * math.pi * 1e6 + (J1 + J2) * N * U0 / 2 - 0.65 * u,
            "kappa": 0.07 * u, "eta": math.sqrt(0.02 / s) * u, "U0": U0}


def write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(*args):
    result = CliRunner().invoke(cli.main, list(args))
    return result


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestReduce:
    def test_fig1_echo(self, tmp_path):
        out = tmp_path / "o"
        res = run("reduce", "--config", write(tmp_path, {"physical": fig1_physical()}), "--out", str(out))
        assert res.exit_code == 0, res.output
        rep = json.loads((out / "reduced.json").read_text())["report"]
        for key, value in FIG1.items():
            assert rep[key] == pytest.approx(value, rel=1e-9)
        for key in ("A", "Delta", "delta", "s"):
            assert key in rep
        assert json.loads((out / "reduced.json").read_text())["warnings"] == []

    def test_degenerate_exit(self, tmp_path):
        doc = {"physical": dict(fig1_physical(), J2=0.6)}
        res = run("reduce", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o"))
        assert res.exit_code == 2
        assert "delta" in res.output

    def test_warning_branch(self, tmp_path):
        phys = fig1_physical()
        u = (0.6 - 0.48) * phys["U0"] * 1000 / 2
        phys["kappa"] = 1.5 * u
        res = run("reduce", "--config", write(tmp_path, {"physical": phys}), "--out", str(tmp_path / "o"))
        assert res.exit_code == 0
        assert "C = 1.5" in res.output

    def test_needs_physical(self, tmp_path):
        res = run("reduce", "--config", write(tmp_path, {"reduced": FIG1}), "--out", str(tmp_path / "o"))
        assert res.exit_code == 2

    def test_round_trip(self, tmp_path):
        phys = {"physical": fig1_physical(), "trajectory": {"z0": -0.75, "t_end": 5.0}}
        assert run("reduce", "--config", write(tmp_path, phys, "p.json"), "--out", str(tmp_path / "r")).exit_code == 0
        doc = json.loads((tmp_path / "r" / "reduced.json").read_text())
        doc["trajectory"] = phys["trajectory"]
        for name, cfg in (("a", write(tmp_path, phys, "p.json")), ("b", write(tmp_path, doc, "q.json"))):
            assert run("trajectory", "--config", cfg, "--out", str(tmp_path / name)).exit_code == 0
            assert run("fixed-points", "--config", cfg, "--out", str(tmp_path / (name + "f"))).exit_code == 0
        assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()
        assert (tmp_path / "af" / "fixed_points.csv").read_bytes() == (tmp_path / "bf" / "fixed_points.csv").read_bytes()


class TestFixedPoints:
    @pytest.mark.parametrize("red,n", [
        ({"r": 0.5, "A_tilde": 0.0, "B": 0.0, "C": 1.0}, 2),
        ({"r": 3.0, "A_tilde": 0.0, "B": 0.0, "C": 1.0}, 4),
        (FIG1, 8),
    ])
    def test_rows(self, tmp_path, red, n):
        out = tmp_path / "o"
        res = run("fixed-points", "--config", write(tmp_path, {"reduced": red}), "--out", str(out))
        assert res.exit_code == 0, res.output
        table = rows(out / "fixed_points.csv")
        assert table[0] == ["z", "branch", "kind", "energy", "f_derivative"]
        assert len(table) == n + 1
        order = [(r[1] != "zero", float(r[0])) for r in table[1:]]
        assert order == sorted(order)
        morse = json.loads((out / "morse.json").read_text())
        assert morse["euler"] == 2 and morse["euler_ok"]

    def test_degenerate_flag(self, tmp_path):
        out = tmp_path / "o"
        res = run("fixed-points", "--config", write(tmp_path, {"reduced": {"r": 1.0, "A_tilde": 0, "B": 0, "C": 1}}),
                  "--out", str(out))
        assert res.exit_code == 0
        assert json.loads((out / "morse.json").read_text())["degenerate"] is True

    def test_euler_violation_exit(self, tmp_path, monkeypatch):
        lonely = [StationaryPoint(0.0, Branch.ZERO, Kind.MINIMUM, -1.0, 1.0)]
        monkeypatch.setattr(cli, "find_stationary_points", lambda *a, **k: lonely)
        res = run("fixed-points", "--config", write(tmp_path, {"reduced": FIG1}), "--out", str(tmp_path / "o"))
        assert res.exit_code == 3

    def test_grid_flag(self, tmp_path):
        out = tmp_path / "o"
        assert run("fixed-points", "--config", write(tmp_path, {"reduced": FIG1}), "--out", str(out),
                   "--grid-n", "4000").exit_code == 0
        assert json.loads((out / "morse.json").read_text())["grid_n"] == 4000


class TestTrajectory:
    def test_fig2(self, tmp_path):
        for z0, mode in ((-0.75, "self_trapped_zero_phase"), (-0.8, "zero_phase_oscillation")):
            out = tmp_path / str(z0)
            doc = {"reduced": FIG1, "trajectory": {"z0": z0, "phi0": 0.0, "t_end": 100.0}}
            assert run("trajectory", "--config", write(tmp_path, doc), "--out", str(out)).exit_code == 0
            table = rows(out / "trajectory.csv")
            assert table[0] == ["t", "z", "phi_unwrapped", "H_c", "photon"]
            assert len(table) == 2002
            summary = json.loads((out / "summary.json").read_text())
            assert summary["mode"] == mode
            assert summary["energy_drift"] < 1e-8
            assert summary["period"] > 0

    def test_fixed_point_constant(self, tmp_path):
        out = tmp_path / "o"
        doc = {"reduced": FIG1, "trajectory": {"z0": -0.012142715615401728, "t_end": 10.0}}
        assert run("trajectory", "--config", write(tmp_path, doc), "--out", str(out)).exit_code == 0
        data = np.loadtxt(out / "trajectory.csv", delimiter=",", skiprows=1)
        assert np.ptp(data[:, 1]) < 1e-9 and np.ptp(data[:, 3]) < 1e-12
        assert json.loads((out / "summary.json").read_text())["period"] is None

    def test_linearized_period(self, tmp_path):
        out = tmp_path / "o"
        doc = {"reduced": {"r": 3.0, "A_tilde": 0.0, "B": 0.0, "C": 1.0},
               "trajectory": {"z0": 1e-3, "t_end": 50.0, "samples": 5000}}
        assert run("trajectory", "--config", write(tmp_path, doc), "--out", str(out)).exit_code == 0
        assert json.loads((out / "summary.json").read_text())["period"] == pytest.approx(math.pi, rel=1e-4)

    def test_pole_exit(self, tmp_path):
        out = tmp_path / "o"
        doc = {"reduced": {"r": 0.0, "A_tilde": 0.0, "B": 0.0, "C": 1.0},
               "trajectory": {"z0": 0.0, "phi0": math.pi / 2, "t_end": 10.0}}
        res = run("trajectory", "--config", write(tmp_path, doc), "--out", str(out))
        assert res.exit_code == 4
        summary = json.loads((out / "summary.json").read_text())
        assert summary["partial"] is True and summary["status"] == "pole_approach"
        assert len(rows(out / "trajectory.csv")) > 2

    def test_missing_ic(self, tmp_path):
        res = run("trajectory", "--config", write(tmp_path, {"reduced": FIG1}), "--out", str(tmp_path / "o"))
        assert res.exit_code == 2


class TestPortraitAndSweep:
    def test_portrait(self, tmp_path):
        out = tmp_path / "o"
        doc = {"reduced": FIG1, "portrait": {"n_z": 64, "n_phi": 48}}
        assert run("portrait", "--config", write(tmp_path, doc), "--out", str(out)).exit_code == 0
        grid = rows(out / "grid.csv")
        assert grid[0] == ["z", "phi", "H_c"] and len(grid) == 64 * 48 + 1
        sep = json.loads((out / "separatrix.json").read_text())
        assert len(sep["levels"]) == 3 and len(sep["stationary_points"]) == 8
        contours = json.loads((out / "contours.json").read_text())
        assert all(lvl["n_components"] >= 1 for lvl in contours["levels"])

    def test_sweep(self, tmp_path):
        out = tmp_path / "o"
        doc = {"reduced": {"r": 0.5, "A_tilde": 0.0, "B": 0.0, "C": 1.0},
               "sweep": {"vary": "r", "start": 0.5, "stop": 1.5, "steps": 11}}
        assert run("sweep", "--config", write(tmp_path, doc), "--out", str(out)).exit_code == 0
        table = rows(out / "sweep.csv")
        assert table[0] == ["value", "m0", "m1", "m2", "euler_ok", "flag", "points"]
        counts = [int(r[1]) + int(r[2]) + int(r[3]) for r in table[1:]]
        assert counts[0] == 2 and counts[-1] == 4
        assert table[6][5] == "degenerate"

    def test_sweep_bad_param(self, tmp_path):
        doc = {"reduced": FIG1, "sweep": {"vary": "N", "start": 0, "stop": 1}}
        assert run("sweep", "--config", write(tmp_path, doc), "--out", str(tmp_path / "o")).exit_code == 2


class TestFormats:
    def test_reproducible(self, tmp_path):
        doc = {"reduced": FIG1, "trajectory": {"z0": -0.8, "t_end": 20.0},
               "portrait": {"n_z": 32, "n_phi": 32}}
        cfg = write(tmp_path, doc)
        for cmd in ("fixed-points", "trajectory", "portrait"):
            for name in ("a", "b"):
                assert run(cmd, "--config", cfg, "--out", str(tmp_path / cmd / name), "--seed", "11").exit_code == 0
            files = sorted(p.name for p in (tmp_path / cmd / "a").iterdir())
            for f in files:
                if f == "provenance.json":
                    continue
                assert (tmp_path / cmd / "a" / f).read_bytes() == (tmp_path / cmd / "b" / f).read_bytes()

    def test_provenance(self, tmp_path):
        out = tmp_path / "o"
        run("fixed-points", "--config", write(tmp_path, {"reduced": FIG1}), "--out", str(out), "--seed", "5")
        prov = json.loads((out / "provenance.json").read_text())
        assert prov["seed"] == 5 and prov["version"] and prov["backend"] in ("python", "cython")
        digest = hashlib.sha256((out / "fixed_points.csv").read_bytes()).hexdigest()
        assert prov["artifacts_sha256"]["fixed_points.csv"] == digest
        assert json.loads((out / "config.json").read_text())["seed"] == 5

    def test_csv_format(self, tmp_path):
        out = tmp_path / "o"
        run("fixed-points", "--config", write(tmp_path, {"reduced": FIG1}), "--out", str(out))
        raw = (out / "fixed_points.csv").read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")
        for line in raw.decode().splitlines():
            assert not line.endswith(",")
        value = rows(out / "fixed_points.csv")[1][0]
        assert float(value) == -0.6912325693213796
        assert repr(float(value)) == "-0.6912325693213796"

    def test_json_helpers(self, tmp_path):
        cli.write_json(tmp_path / "x.json", {"b": float("nan"), "a": np.float64(1.5), "c": np.arange(2)})
        text = (tmp_path / "x.json").read_text()
        assert json.loads(text) == {"a": 1.5, "b": None, "c": [0, 1]}
        assert text.index('"a"') < text.index('"b"')
        assert cli.fmt(0.1) == "0.10000000000000001"

    def test_missing_config(self, tmp_path):
        res = run("portrait", "--config", str(tmp_path / "none.toml"), "--out", str(tmp_path / "o"))
        assert res.exit_code == 2
