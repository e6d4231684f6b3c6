import json
import subprocess
import sys

import pytest

from saft import cli

GROUPS = {
    "groups": [
        {"attributes": {"sex": "F", "race": "a"}, "size": 300, "rate": 0.35, "label_rate": 0.5},
        {"attributes": {"sex": "M", "race": "a"}, "size": 500, "rate": 0.5, "label_rate": 0.5},
        {"attributes": {"sex": "F", "race": "b"}, "size": 25, "rate": 0.5, "label_rate": 0.5},
        {"attributes": {"sex": "M", "race": "b"}, "size": 400, "rate": 0.55, "label_rate": 0.5},
    ],
    "seed": 1,
}


@pytest.fixture
def workspace(tmp_path):
    (tmp_path / "spec.json").write_text(json.dumps(GROUPS))
    assert cli.main(["simulate", "--spec", str(tmp_path / "spec.json"), "--out", str(tmp_path / "d.csv")]) == 0
    config = {
        "schema": {"prediction_column": "prediction", "protected_columns": ["sex", "race"]},
        "audit": {"max_depth": 2, "seed": 5},
        "output": {"report": str(tmp_path / "report.json")},
    }
    (tmp_path / "cfg.json").write_text(json.dumps(config))
    return tmp_path


def run(*argv):
    return cli.main([str(a) for a in argv])


class TestAudit:
    def test_writes_report(self, workspace):
        assert run("audit", "--config", workspace / "cfg.json", "--data", workspace / "d.csv") == 0
        doc = json.loads((workspace / "report.json").read_text())
        assert len(doc["records"]) == 8 and doc["config"]["seed"] == 5

    def test_deterministic_across_jobs(self, workspace):
        a, b = workspace / "a.csv", workspace / "b.csv"
        assert run("audit", "--config", workspace / "cfg.json", "--data", workspace / "d.csv",
                   "--out", a, "--jobs", 1) == 0
        assert run("audit", "--config", workspace / "cfg.json", "--data", workspace / "d.csv",
                   "--out", b, "--jobs", 4) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_plot_outputs(self, workspace):
        assert run("audit", "--config", workspace / "cfg.json", "--data", workspace / "d.csv",
                   "--plot-gamma", workspace / "g.csv", "--plot-intervals", workspace / "i.csv", "--bh") == 0
        assert (workspace / "g.csv").exists() and (workspace / "i.csv").exists()
        doc = json.loads((workspace / "report.json").read_text())
        assert all(r["adjusted_p"] is not None for r in doc["records"])

    def test_unknown_config_key(self, workspace):
        cfg = json.loads((workspace / "cfg.json").read_text())
        cfg["audit"]["alhpa"] = 0.1
        (workspace / "bad.json").write_text(json.dumps(cfg))
        assert run("audit", "--config", workspace / "bad.json", "--data", workspace / "d.csv") == 2

    def test_eo_without_labels(self, workspace, capsys):
        assert run("audit", "--config", workspace / "cfg.json", "--data", workspace / "d.csv",
                   "--metric", "eo") == 2
        assert "MissingLabels" in capsys.readouterr().err

    def test_eo_with_labels(self, workspace):
        cfg = json.loads((workspace / "cfg.json").read_text())
        cfg["schema"]["label_column"] = "label"
        (workspace / "eo.json").write_text(json.dumps(cfg))
        assert run("audit", "--config", workspace / "eo.json", "--data", workspace / "d.csv",
                   "--metric", "eo") == 0
        doc = json.loads((workspace / "report.json").read_text())
        assert doc["config"]["metric"] == "eo"

    def test_missing_data_file(self, workspace):
        assert run("audit", "--config", workspace / "cfg.json", "--data", workspace / "nope.csv") == 2

    def test_bad_alpha(self, workspace):
        assert run("audit", "--config", workspace / "cfg.json", "--data", workspace / "d.csv",
                   "--alpha", 1.5) == 2

    def test_runtime_failure_exit_code(self, workspace, monkeypatch):
        import saft.engine as engine
        from saft.errors import DegenerateSigma

        def broken(*a, **k):
            raise DegenerateSigma("forced")

        monkeypatch.setattr(engine, "saft_test", broken)
        assert run("audit", "--config", workspace / "cfg.json", "--data", workspace / "d.csv") == 3


class TestResolution:
    def test_table(self, workspace):
        out = workspace / "res.csv"
        assert run("resolution", "--rates", "0.3,0.5", "--n", "10:12", "--mc-draws", 20000, "--out", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "rate,n_S,direction,min_fraction,regime,min_count"
        assert len(lines) == 1 + 6
        assert lines[1].startswith("0.3,10,disadvantaged,0.6,bayes,6")

    def test_both_directions(self, workspace):
        out = workspace / "res.csv"
        assert run("resolution", "--rates", "0.5", "--n", "10:10", "--direction", "both",
                   "--mc-draws", 20000, "--out", out) == 0
        rows = out.read_text().splitlines()[1:]
        assert [r.split(",")[2] for r in rows] == ["disadvantaged", "advantaged"]

    @pytest.mark.parametrize("rates", ["1.0", "0", "abc"])
    def test_bad_rate(self, workspace, rates):
        assert run("resolution", "--rates", rates, "--n", "10:10", "--out", workspace / "r.csv") == 2

    def test_bad_range(self, workspace):
        assert run("resolution", "--rates", "0.5", "--n", "10-20", "--out", workspace / "r.csv") == 2


class TestSimulate:
    def test_same_seed_same_bytes(self, workspace):
        spec = workspace / "spec.json"
        run("simulate", "--spec", spec, "--out", workspace / "x.csv", "--seed", 9)
        run("simulate", "--spec", spec, "--out", workspace / "y.csv", "--seed", 9)
        run("simulate", "--spec", spec, "--out", workspace / "z.csv", "--seed", 10)
        assert (workspace / "x.csv").read_bytes() == (workspace / "y.csv").read_bytes()
        assert (workspace / "x.csv").read_bytes() != (workspace / "z.csv").read_bytes()

    def test_bad_spec(self, workspace):
        (workspace / "bad.json").write_text('{"groups": [{"size": 3}]}')
        assert run("simulate", "--spec", workspace / "bad.json", "--out", workspace / "x.csv") == 2


class TestValidate:
    def test_pass(self, capsys):
        assert run("validate", "clt", "--n", 2000, "--trials", 2000) == 0
        assert "clt: PASS" in capsys.readouterr().out

    def test_band_failure_exit_code(self, capsys):
        # balanced cells give a Bayesian interval narrower than Wald at n = 10
        assert run("validate", "convergence", "--n-list", "10,100", "--mc-draws", 20000,
                   "--p", "0.25,0.25,0.25,0.25") == 1
        assert "convergence: FAIL" in capsys.readouterr().out

    def test_type1_needs_null(self):
        assert run("validate", "type1", "--n", 2000, "--trials", 200, "--p", "0.1,0.3,0.3,0.3") == 2

    def test_unknown_experiment(self):
        assert run("validate", "power") == 2

    def test_writes_csv(self, tmp_path):
        assert run("validate", "type1", "--n", 1000, "--trials", 300, "--out", tmp_path / "t.csv") in (0, 1)
        assert (tmp_path / "t.csv").read_text().startswith("n,trials,alpha")


def test_no_command():
    assert cli.main([]) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "saft", "validate", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2 and "unknown experiment" in proc.stderr


def test_default_jobs(monkeypatch):
    monkeypatch.setenv("SAFT_JOBS", "3")
    assert cli.default_jobs() == 3
