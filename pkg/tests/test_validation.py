import csv

import pytest

from saft.core import AuditConfig
from saft.errors import NotNull
from saft.validation import (
    CONVERGENCE_PROPORTIONS, allocate_counts, experiment_baselines, experiment_clt,
    experiment_convergence, experiment_coverage, experiment_type1,
)

NULL_P = (0.05, 0.05, 0.45, 0.45)


class TestType1:
    def test_small_run_reports_regimes(self):
        res = experiment_type1(NULL_P, n=2000, trials=400, seed=1)
        (row,) = res.rows
        assert row["regime_wald"] + row["regime_bayes"] + row["regime_no_data"] == 400
        assert res.band == pytest.approx((0.05 - 3 * (0.0475 / 400) ** 0.5, 0.05 + 3 * (0.0475 / 400) ** 0.5))

    def test_rejects_non_null(self):
        with pytest.raises(NotNull):
            experiment_type1((0.1, 0.3, 0.3, 0.3), n=100, trials=10)

    def test_alpha_band(self):
        res = experiment_type1(NULL_P, n=10_000, trials=10_000, alpha=0.01, seed=3)
        lo, hi = res.band
        assert lo == pytest.approx(0.007, abs=5e-5) and hi == pytest.approx(0.013, abs=5e-5)

    @pytest.mark.slow
    def test_alpha_001_in_band(self):
        res = experiment_type1((0.3, 0.3, 0.2, 0.2), n=10_000, trials=10_000, alpha=0.01, seed=5)
        assert res.passed, res.rows


class TestCoverage:
    def test_small_n_is_not_gated(self):
        res = experiment_coverage((0.1, 0.3, 0.3, 0.3), n=50, trials=50, seed=2,
                                  config=AuditConfig(mc_draws=500))
        assert not res.gated and res.passed

    @pytest.mark.slow
    def test_bayes_at_n50(self):
        res = experiment_coverage((0.1, 0.3, 0.3, 0.3), n=50, trials=2000, seed=4,
                                  config=AuditConfig(mc_draws=2000), band=(0.92, 0.98))
        assert 0.92 <= res.value <= 0.98, res.rows

    def test_write_csv(self, tmp_path):
        res = experiment_coverage((0.1, 0.3, 0.3, 0.3), n=1000, trials=200, seed=2)
        res.write_csv(tmp_path / "c.csv")
        with open(tmp_path / "c.csv", newline="") as fh:
            (row,) = list(csv.DictReader(fh))
        assert int(row["trials"]) == 200 and row["gated"] == "true"


def test_allocate_counts():
    assert allocate_counts(10, CONVERGENCE_PROPORTIONS) == (0, 2, 4, 4)
    assert sum(allocate_counts(997, (0.1, 0.2, 0.3, 0.4))) == 997


def test_convergence_passes():
    res = experiment_convergence(K=100_000, seed=0)
    assert res.passed, res.rows
    assert res.notes == {"monotone": True, "wider_at_10": True, "converged": True}


def test_clt_small_n_not_gated():
    res = experiment_clt((0.1, 0.3, 0.3, 0.3), n=30, trials=2000)
    assert not res.gated and res.passed
    assert [r["level"] for r in res.rows] == [0.025, 0.25, 0.5, 0.75, 0.975]


def test_baselines_disagree(tmp_path):
    _, checks = experiment_baselines(gamma_csv=tmp_path / "g.csv")
    assert all(checks.values()), checks
    assert (tmp_path / "g.csv").exists()
