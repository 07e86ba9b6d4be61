import json
import math

import numpy as np
import pytest

from gcdsim import cli
from gcdsim.experiments import ConfigError, DECISIONS, decision_hash, validate_config
from gcdsim.records import GridRecord, RunRecord, fmt, parse_cell


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestValidate:
    def test_defaults_filled_and_flagged(self):
        cfg = validate_config("experiment: stabilize\n")
        echo = cfg.echo()["parameters"]
        assert f"{echo['epsilon']['value']:.7f}" == "0.0707107"
        assert echo["epsilon"]["default"] is True
        assert echo["cutoff"]["value"] == 100
        cat = validate_config("experiment: cat-state\n")
        assert cat.parameters["d"] == 4

    def test_given_value_not_flagged(self):
        cfg = validate_config("experiment: stabilize\nparameters:\n  rounds: 3\n")
        assert cfg.echo()["parameters"]["rounds"] == {"value": 3, "default": False}

    def test_negative_rate(self):
        with pytest.raises(ConfigError, match="kappa >= 0"):
            validate_config("experiment: stabilize\nparameters:\n  kappa: -0.1\n")

    def test_unknown_key_suggestion(self):
        with pytest.raises(ConfigError, match="did you mean 'epsilon'"):
            validate_config("experiment: stabilize\nparameters:\n  epslon: 0.1\n")
        with pytest.raises(ConfigError, match="did you mean 'parameters'"):
            validate_config("experiment: stabilize\nparamters: {}\n")

    def test_parse_error_reports_line(self):
        with pytest.raises(ConfigError, match="line 3, column 12"):
            validate_config("experiment: stabilize\nparameters:\n  rounds: 1: 2\n")

    def test_bad_experiment_and_types(self):
        with pytest.raises(ConfigError, match="unknown experiment"):
            validate_config("experiment: stabilise\n")
        with pytest.raises(ConfigError, match="expected int"):
            validate_config("experiment: stabilize\nparameters:\n  rounds: 2.5\n")
        with pytest.raises(ConfigError, match="one of"):
            validate_config("experiment: stabilize\nparameters:\n  protocol: qutrit\n")
        with pytest.raises(ConfigError, match="protocols"):
            validate_config("experiment: noise-sweep\nparameters:\n  protocols: [bsb]\n")

    def test_yaml_exponent_strings(self):
        cfg = validate_config("experiment: stabilize\nparameters:\n  kappa: 1e-4\n")
        assert cfg.parameters["kappa"] == 1e-4
        cfg = validate_config("experiment: cat-state\nparameters:\n  alpha: 1+2i\n")
        assert cfg.parameters["alpha"] == 1 + 2j

    def test_sweep_points(self):
        cfg = validate_config("experiment: stabilize\nsweep:\n  rounds: [1, 2]\n  epsilon: [0.1, 0.2]\n")
        assert len(cfg.points()) == 4
        with pytest.raises(ConfigError, match="sweep"):
            validate_config("experiment: stabilize\nsweep:\n  rounds: []\n")


class TestRecords:
    def test_fmt_round_trip(self):
        for v in (0.1, 1 / 3, 1e-300, -2.5e17, 3, True):
            assert parse_cell(fmt(v)) == v

    def test_csv_round_trip(self, tmp_path):
        rec = RunRecord(rows=[{"a": 1, "b": math.pi, "c": "x"}, {"a": 2, "b": -1e-9, "c": "y"}])
        path = rec.write_csv(tmp_path / "r.csv")
        assert RunRecord.read_csv(path) == rec.rows

    def test_grid_round_trip(self, tmp_path):
        g = GridRecord(np.linspace(-1, 1, 3), np.linspace(0, 2, 4), np.random.default_rng(0).normal(size=(4, 3)))
        back = GridRecord.read_csv(g.write_csv(tmp_path / "g.csv"))
        assert np.array_equal(back.values, g.values)
        assert np.array_equal(back.q, g.q) and np.array_equal(back.p, g.p)


class TestRun:
    def test_cat_state(self, tmp_path):
        cfg = write(tmp_path, "experiment: cat-state\nparameters:\n  d: 4\n  alpha: 2\n")
        assert cli.main(["run", cfg, "--out", str(tmp_path / "o")]) == 0
        rows = RunRecord.read_csv(tmp_path / "o" / "cat-state.csv")
        assert [r["m"] for r in rows] == [0, 1, 2, 3]
        assert all(r["fidelity"] > 1 - 1e-8 for r in rows)
        for m in range(4):
            grid = GridRecord.read_csv(tmp_path / "o" / f"cat-state_wigner_m{m}.csv")
            assert grid.values.shape == (41, 41)

    def test_stabilize_rows_and_sidecar(self, tmp_path):
        cfg = write(tmp_path, "experiment: stabilize\nparameters:\n  protocol: qudit4\n  rounds: 10\n")
        assert cli.main(["run", cfg, "--out", str(tmp_path / "o")]) == 0
        rows = RunRecord.read_csv(tmp_path / "o" / "stabilize.csv")
        assert [r["cd_count"] for r in rows] == list(range(21))
        assert {"cd_count", "re_sx", "re_sz", "mean_photons"} <= set(rows[0])
        meta = json.loads((tmp_path / "o" / "stabilize.json").read_text())
        assert meta["rows"] == rows
        assert meta["decisions"] == json.loads(json.dumps(DECISIONS))
        assert meta["decision_hash"] == decision_hash()
        assert meta["decisions"]["qudit_sharpen_pairing"] == [2, 3, 0, 1]
        assert meta["config"]["parameters"]["epsilon"]["default"] is True

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write(tmp_path, "experiment: stabilize\nparameters:\n  protocol: qubit\n  rounds: 2\n")
        cli.main(["run", cfg, "--out", str(tmp_path / "a")])
        cli.main(["run", cfg, "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "stabilize.csv").read_bytes() == (tmp_path / "b" / "stabilize.csv").read_bytes()

    def test_trajectory_seeded(self, tmp_path):
        cfg = write(tmp_path, "experiment: stabilize\nparameters:\n  mode: trajectory\n  rounds: 3\n  cutoff: 60\n")
        for d in "abc":
            cli.main(["run", cfg, "--out", str(tmp_path / d), "--seed", "11" if d != "c" else "12"])
        a, b, c = ((tmp_path / d / "stabilize.csv").read_bytes() for d in "abc")
        assert a == b
        assert a != c

    def test_sweep_merged(self, tmp_path):
        cfg = write(tmp_path, "experiment: stabilize\nparameters:\n  rounds: 1\n  cutoff: 60\n"
                              "sweep:\n  protocol: [qudit4, qubit]\n")
        assert cli.main(["run", cfg, "--out", str(tmp_path / "o"), "--threads", "2"]) == 0
        rows = RunRecord.read_csv(tmp_path / "o" / "stabilize.csv")
        assert sorted({r["point_id"] for r in rows}) == [0, 1]
        assert len(rows) == 3 + 5

    def test_config_error_exit(self, tmp_path, capsys):
        cfg = write(tmp_path, "experiment: stabilize\nparameters:\n  kappa: -1\n")
        assert cli.main(["run", cfg, "--out", str(tmp_path / "o")]) == 2
        assert "kappa" in capsys.readouterr().err
        assert cli.main(["validate", str(tmp_path / "missing.yaml")]) == 2

    def test_runtime_abort_removes_outputs(self, tmp_path, capsys):
        cfg = write(tmp_path, "experiment: stabilize\nparameters:\n  rounds: 3\n  abort_population: 1e-30\n")
        out = tmp_path / "o"
        assert cli.main(["run", cfg, "--out", str(out)]) == 3
        assert "after CD" in capsys.readouterr().err
        assert list(out.iterdir()) == []

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
        cfg = write(tmp_path, "experiment: wigner\nparameters:\n  cutoff: 10\n  wigner_points: 5\n")
        assert cli.main(["run", cfg]) == 0
        grid = GridRecord.read_csv(tmp_path / "env" / "wigner.csv")
        assert grid.values[2, 2] == pytest.approx(1 / math.pi)

    def test_validate_and_list(self, tmp_path, capsys):
        cfg = write(tmp_path, "experiment: stabilize\n")
        assert cli.main(["validate", cfg]) == 0
        assert json.loads(capsys.readouterr().out)["experiment"] == "stabilize"
        assert cli.main(["list-experiments"]) == 0
        names = [line.split()[0] for line in capsys.readouterr().out.splitlines()]
        assert names == ["cat-state", "stabilize", "noise-sweep", "encoding-fidelity", "wigner"]
