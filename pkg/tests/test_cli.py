"""CLI driver: config parsing, artifact files, exit codes, determinism."""

import json

import numpy as np
import pytest

from monge1d.cli import load_run_config, main, parse_run_config
from monge1d.errors import ConfigError
from monge1d.oracles import GridDensity, OracleRun, save_fixture

TENT_DOC = {
    "problem": {
        "assumption": "I",
        "source": {"interval": [6, 8], "density": {"kind": "uniform"}},
        "target": [0, 5],
        "alpha": 1.0,
    },
    "epsilons": [0.01],
}

MIRROR_DOC = {
    "problem": {
        "assumption": "II",
        "source": {"interval": [-8, -6], "density": {"kind": "uniform"}},
        "target": [-5, 0],
        "alpha": 1.0,
    },
    "epsilons": [0.01],
}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def tent_config(tmp_path, **extra):
    doc = json.loads(json.dumps(TENT_DOC))
    doc.update(extra)
    return write_config(tmp_path, doc)


def read_csv(path):
    lines = path.read_text().splitlines()
    data = np.array([[float(c) if c else np.nan for c in line.split(",")[:10]]
                     for line in lines[1:]])
    return lines[0].split(","), data


class TestConfigParsing:
    def test_defaults(self, tmp_path):
        config = load_run_config(tent_config(tmp_path))
        assert config.grid_n == 2001
        assert config.root_tol == 1e-12
        assert config.quad_tol == 1e-10
        assert str(config.out_dir) == "out"
        assert config.epsilons == (0.01,)

    def test_explicit_fields(self, tmp_path):
        path = tent_config(tmp_path, grid_n=501,
                           tolerances={"root": 1e-10, "quad": 1e-8},
                           out="elsewhere")
        config = load_run_config(path)
        assert config.grid_n == 501
        assert config.root_tol == 1e-10
        assert config.quad_tol == 1e-8
        assert str(config.out_dir) == "elsewhere"

    def test_flags_beat_file(self, tmp_path):
        path = tent_config(tmp_path, grid_n=501, out="from_file")
        config = load_run_config(path, overrides={
            "epsilons": (0.1,), "grid_n": 701, "out": "from_flag"})
        assert config.epsilons == (0.1,)
        assert config.grid_n == 701
        assert str(config.out_dir) == "from_flag"

    def test_unknown_key_rejected(self):
        doc = json.loads(json.dumps(TENT_DOC))
        doc["extra"] = 1
        with pytest.raises(ConfigError, match="unknown keys.*extra"):
            parse_run_config(doc)

    def test_unknown_tolerance_rejected(self):
        doc = json.loads(json.dumps(TENT_DOC))
        doc["tolerances"] = {"root": 1e-12, "newton": 1e-3}
        with pytest.raises(ConfigError, match="newton"):
            parse_run_config(doc)

    def test_missing_required_keys(self):
        with pytest.raises(ConfigError, match="missing key 'epsilons'"):
            parse_run_config({"problem": TENT_DOC["problem"]})
        with pytest.raises(ConfigError, match="missing key 'problem'"):
            parse_run_config({"epsilons": [0.01]})

    def test_empty_epsilons(self):
        doc = json.loads(json.dumps(TENT_DOC))
        doc["epsilons"] = []
        with pytest.raises(ConfigError, match="nonempty"):
            parse_run_config(doc)

    def test_bad_grid(self):
        doc = json.loads(json.dumps(TENT_DOC))
        doc["grid_n"] = 8
        with pytest.raises(ConfigError, match="at least 33"):
            parse_run_config(doc)
        doc["grid_n"] = True
        with pytest.raises(ConfigError, match="integer"):
            parse_run_config(doc)

    def test_malformed_json_names_position(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"problem": {\n  ???')
        assert main(["validate", "--config", str(path)]) == 2
        err = capsys.readouterr().err
        assert "config:2:" in err

    def test_unreadable_config(self, tmp_path, capsys):
        assert main(["validate", "--config", str(tmp_path / "nope.json")]) == 2
        assert "cannot read" in capsys.readouterr().err

    def test_missing_alpha(self, tmp_path, capsys):
        doc = json.loads(json.dumps(TENT_DOC))
        del doc["problem"]["alpha"]
        assert main(["validate", "--config",
                     write_config(tmp_path, doc)]) == 2
        assert "alpha" in capsys.readouterr().err


class TestValidate:
    def test_tent_ok(self, tmp_path, capsys):
        assert main(["validate", "--config", tent_config(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "spec: ok" in out and "capacity: ok" in out

    def test_quiet_silences_success(self, tmp_path, capsys):
        code = main(["validate", "--config", tent_config(tmp_path),
                     "--quiet"])
        assert code == 0
        assert capsys.readouterr().out == ""

    def test_capacity_failure_names_width(self, tmp_path, capsys):
        doc = json.loads(json.dumps(TENT_DOC))
        doc["problem"]["target"] = [0, 1]
        assert main(["validate", "--config",
                     write_config(tmp_path, doc)]) == 3
        err = capsys.readouterr().err
        assert "2/sqrt(alpha) = 2.0" in err

    def test_semantic_failure(self, tmp_path, capsys):
        doc = json.loads(json.dumps(TENT_DOC))
        doc["problem"]["target"] = [0, 7]  # overlaps the source
        assert main(["validate", "--config",
                     write_config(tmp_path, doc)]) == 2
        assert "target_right < source_left" in capsys.readouterr().err


@pytest.fixture(scope="module")
def solve_artifacts(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("solve")
    out = tmp / "art"
    code = main(["solve", "--config", tent_config(tmp), "--quiet",
                 "--out", str(out), "--grid", "801"])
    return code, out / "eps_0.01"


class TestSolve:
    def test_exit_and_files(self, solve_artifacts):
        code, target = solve_artifacts
        assert code == 0
        assert (target / "density.csv").exists()
        assert (target / "energy.json").exists()
        assert not list(target.glob("*.tmp"))

    def test_density_boundary_rows(self, solve_artifacts):
        _, target = solve_artifacts
        header, data = read_csv(target / "density.csv")
        assert header == ["y", "u", "theta", "log_lambda", "slope"]
        doc = json.loads((target / "energy.json").read_text())
        endpoint = doc["support_endpoint"]
        y, u = data[:, 0], data[:, 1]
        assert u[np.isclose(y, endpoint)] == 0.0
        assert u[y == 5.0] == 0.0
        assert np.all(u[y < endpoint] == 0.0)

    def test_energy_gap_field(self, solve_artifacts):
        _, target = solve_artifacts
        doc = json.loads((target / "energy.json").read_text())
        assert abs(doc["gap"]) <= 1e-6
        assert doc["epsilon"] == 0.01
        assert doc["constraint_residuals"]["mass_error"] <= 1e-8

    def test_deterministic_bytes(self, solve_artifacts, tmp_path):
        _, target = solve_artifacts
        out2 = tmp_path / "again"
        assert main(["solve", "--config", tent_config(tmp_path), "--quiet",
                     "--out", str(out2), "--grid", "801"]) == 0
        first = (target / "density.csv").read_bytes()
        second = (out2 / "eps_0.01" / "density.csv").read_bytes()
        assert first == second

    def test_mirror_equal(self, solve_artifacts, tmp_path):
        _, target = solve_artifacts
        out2 = tmp_path / "mirror"
        assert main(["solve", "--config",
                     write_config(tmp_path, MIRROR_DOC), "--quiet",
                     "--out", str(out2), "--grid", "801"]) == 0
        _, straight = read_csv(target / "density.csv")
        _, mirrored = read_csv(out2 / "eps_0.01" / "density.csv")
        assert np.max(np.abs(mirrored[::-1, 0] + straight[:, 0])) <= 1e-10
        assert np.max(np.abs(mirrored[::-1, 1] - straight[:, 1])) <= 1e-10

    def test_subfloor_epsilon_is_config_error(self, tmp_path, capsys):
        assert main(["solve", "--config", tent_config(tmp_path),
                     "--epsilon", "1e-8"]) == 2
        assert "floor" in capsys.readouterr().err


@pytest.fixture(scope="module")
def map_artifacts(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("map")
    out = tmp / "art"
    code = main(["map", "--config", tent_config(tmp), "--quiet",
                 "--out", str(out), "--epsilon", "0.001",
                 "--grid", "801"])
    return code, out / "eps_0.001"


class TestMap:
    def test_exit_and_files(self, map_artifacts):
        code, target = map_artifacts
        assert code == 0
        assert (target / "map.csv").exists()
        assert (target / "cost.json").exists()

    def test_endpoint_rows(self, map_artifacts):
        _, target = map_artifacts
        header, data = read_csv(target / "map.csv")
        assert header == ["x", "s_increasing", "s_decreasing"]
        first, last = data[0], data[-1]
        endpoint = first[1]
        assert first[0] == 6.0 and last[0] == 8.0
        assert endpoint == pytest.approx(3.0, abs=0.05)
        assert first[2] == 5.0
        assert last[1] == 5.0
        assert last[2] == endpoint

    def test_cost_document(self, map_artifacts):
        _, target = map_artifacts
        doc = json.loads((target / "cost.json").read_text())
        assert abs(doc["cost_increasing"] - doc["cost_decreasing"]) <= 1e-8
        assert doc["cost_increasing"] == pytest.approx(3.0, abs=0.05)
        assert doc["residual_increasing"] <= 1e-6
        assert doc["residual_decreasing"] <= 1e-6


@pytest.fixture(scope="module")
def sweep_artifacts(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sweep")
    out = tmp / "art"
    code = main(["sweep", "--config", tent_config(tmp), "--quiet",
                 "--out", str(out), "--epsilon", "0.1",
                 "--epsilon", "0.01", "--epsilon", "0.001",
                 "--grid", "1001"])
    return code, out


class TestSweep:
    def test_exit_and_files(self, sweep_artifacts):
        code, out = sweep_artifacts
        assert code == 0
        assert (out / "sweep.csv").exists()
        assert (out / "report.json").exists()

    def test_rows_and_distance_trend(self, sweep_artifacts):
        _, out = sweep_artifacts
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 4
        dist = [float(line.split(",")[9]) for line in lines[1:]]
        assert dist[0] > dist[1] > dist[2]

    def test_report_contents(self, sweep_artifacts):
        _, out = sweep_artifacts
        doc = json.loads((out / "report.json").read_text())
        assert doc["n_success"] == 3
        assert doc["distance_order"] > 0.0
        assert doc["largest_gap"] <= 1e-6

    def test_empty_epsilons_config_error(self, tmp_path, capsys):
        assert main(["sweep", "--config",
                     tent_config(tmp_path, epsilons=[])]) == 2
        assert "nonempty" in capsys.readouterr().err

    def test_subfloor_row_flagged(self, tmp_path, capsys):
        out = tmp_path / "art"
        code = main(["sweep", "--config", tent_config(tmp_path), "--quiet",
                     "--out", str(out), "--epsilon", "0.01",
                     "--epsilon", "0.001", "--epsilon", "1e-8",
                     "--grid", "801"])
        assert code == 4
        assert "floor" in capsys.readouterr().err
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 4
        assert lines[3].startswith("1e-08,,")
        assert "floor" in lines[3]
        doc = json.loads((out / "report.json").read_text())
        assert doc["n_success"] == 2

    def test_insufficient_rows_reported(self, tmp_path):
        out = tmp_path / "art"
        code = main(["sweep", "--config", tent_config(tmp_path), "--quiet",
                     "--out", str(out), "--epsilon", "0.01",
                     "--epsilon", "1e-8", "--grid", "801"])
        assert code == 4
        doc = json.loads((out / "report.json").read_text())
        assert "InsufficientRows" in doc["error"]


class TestVerify:
    def test_tent_defaults_fail_slope_bound(self, tmp_path, capsys):
        # at this width the solved scale factor runs above 1 and the
        # density slope exceeds alpha by O(epsilon); the battery reports
        # that honestly instead of clipping it away
        assert main(["verify", "--config", tent_config(tmp_path),
                     "--grid", "801"]) == 5
        captured = capsys.readouterr()
        assert "verify: failed slope bound" in captured.err
        assert "fail" in captured.out

    def test_steep_regime_passes(self, tmp_path, capsys):
        doc = json.loads(json.dumps(TENT_DOC))
        doc["problem"]["alpha"] = 4.0
        assert main(["verify", "--config", write_config(tmp_path, doc),
                     "--grid", "801"]) == 0
        out = capsys.readouterr().out
        assert "all" in out and "fail" not in out
        assert "skipped  oracle fixtures" in out

    def test_remainder_window_skip(self, tmp_path, capsys):
        doc = json.loads(json.dumps(TENT_DOC))
        doc["problem"]["alpha"] = 4.0
        doc["epsilons"] = [9.0]  # above alpha^2/2, outside the expansion
        main(["verify", "--config", write_config(tmp_path, doc),
              "--grid", "801"])
        assert "skipped  remainder bound" in capsys.readouterr().out

    def test_good_fixture_passes(self, tmp_path, capsys):
        from monge1d.oracles import discrete_expectation_optimizer
        from monge1d.problem import uniform_spec

        doc = json.loads(json.dumps(TENT_DOC))
        doc["problem"]["alpha"] = 4.0
        spec = uniform_spec((6.0, 8.0), (0.0, 5.0), "I", 4.0)
        run = discrete_expectation_optimizer(spec, 501)
        out = tmp_path / "art"
        out.mkdir()
        save_fixture(run, out / "oracle_lp.csv")
        code = main(["verify", "--config", write_config(tmp_path, doc),
                     "--out", str(out), "--grid", "801"])
        assert code == 0
        assert "pass     oracle oracle_lp.csv" in capsys.readouterr().out

    def test_injected_slope_violation(self, tmp_path, capsys):
        doc = json.loads(json.dumps(TENT_DOC))
        doc["problem"]["alpha"] = 4.0
        # trapezoid rising at 1.5*alpha: feasible mass and endpoints,
        # infeasible slope
        nodes = np.linspace(0.0, 5.0, 501)
        rate = 1.5 * 4.0
        values = np.minimum(np.minimum(rate * nodes, rate * (5.0 - nodes)),
                            0.2)
        values = values / np.trapezoid(values, nodes)
        density = GridDensity(nodes=nodes, values=values,
                              step=float(nodes[1] - nodes[0]), alpha=4.0)
        assert density.violations()
        out = tmp_path / "art"
        out.mkdir()
        save_fixture(OracleRun(density=density, objective=0.0, iterations=1),
                     out / "oracle_bad.csv")
        code = main(["verify", "--config", write_config(tmp_path, doc),
                     "--out", str(out), "--grid", "801"])
        assert code == 5
        captured = capsys.readouterr()
        assert "slope" in captured.out
        assert "oracle oracle_bad.csv" in captured.err
