import numpy as np
import pytest

from saft.core import SubgroupSpec
from saft.data import (
    DatasetSchema, SyntheticGroup, SyntheticSpec, generate_synthetic, load_csv, write_csv,
)
from saft.engine import enumerate_subgroups, tabulate
from saft.errors import BadPredictionValue, EmptyFile, MissingColumn, ValidationError

SCHEMA = DatasetSchema("pred", ("sex", "race"))


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoadCsv:
    def test_well_formed(self, tmp_path):
        d = load_csv(write(tmp_path, "sex,race,pred\nF,a,1\nM,a,0\nF,b,0\nM,b,1\n"), SCHEMA)
        assert d.n_rows == 4
        assert d.cardinalities() == {"sex": 2, "race": 2}

    def test_missing_column(self, tmp_path):
        with pytest.raises(MissingColumn):
            load_csv(write(tmp_path, "sex,race\nF,a\n"), SCHEMA)

    def test_bad_prediction_row_number(self, tmp_path):
        rows = ["F,a,1"] * 6 + ["M,b,2"]
        with pytest.raises(BadPredictionValue) as exc:
            load_csv(write(tmp_path, "sex,race,pred\n" + "\n".join(rows) + "\n"), SCHEMA)
        assert exc.value.row == 7

    @pytest.mark.parametrize("value", ["true", "yes", "1.0", ""])
    def test_no_coercion(self, tmp_path, value):
        with pytest.raises(BadPredictionValue):
            load_csv(write(tmp_path, f"sex,race,pred\nF,a,{value}\n"), SCHEMA)

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyFile):
            load_csv(write(tmp_path, ""), SCHEMA)

    def test_missing_protected_value_dropped(self, tmp_path):
        d = load_csv(write(tmp_path, "sex,race,pred\nF,a,1\n,a,0\nM,,1\nM,b,0\n"), SCHEMA)
        assert d.n_rows == 2 and d.dropped_missing == 2

    def test_labels(self, tmp_path):
        schema = DatasetSchema("pred", ("sex",), label_column="y")
        d = load_csv(write(tmp_path, "sex,pred,y\nF,1,1\nM,0,0\n"), schema)
        assert d.labels.tolist() == [1, 0]
        with pytest.raises(BadPredictionValue):
            load_csv(write(tmp_path, "sex,pred,y\nF,1,x\n", "bad.csv"), schema)

    def test_declared_domain(self, tmp_path):
        schema = DatasetSchema("pred", ("sex",), value_domains={"sex": ["F", "M"]})
        with pytest.raises(ValidationError):
            load_csv(write(tmp_path, "sex,pred\nX,1\n"), schema)


class TestSynthetic:
    def test_rate_converges(self):
        d = generate_synthetic(SyntheticSpec([SyntheticGroup({"g": "a"}, 1_000_000, 0.5)], seed=1))
        assert abs(d.predictions.mean() - 0.5) < 0.002

    def test_empty(self):
        d = generate_synthetic(SyntheticSpec([SyntheticGroup({"g": "a"}, 0, 0.5)]))
        assert d.n_rows == 0

    def test_same_seed_same_bytes(self, tmp_path):
        spec = SyntheticSpec([SyntheticGroup({"g": "a"}, 100, 0.3), SyntheticGroup({"g": "b"}, 50, 0.6)], seed=4)
        write_csv(generate_synthetic(spec), tmp_path / "a.csv")
        write_csv(generate_synthetic(spec), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_exact_mode(self):
        d = generate_synthetic(SyntheticSpec([SyntheticGroup({"g": "a"}, 40, 0.375)], exact=True))
        assert d.predictions.sum() == 15

    def test_negative_size(self):
        with pytest.raises(ValidationError):
            SyntheticSpec([SyntheticGroup({"g": "a"}, -1, 0.5)])

    def test_round_trip(self, tmp_path):
        spec = SyntheticSpec([
            SyntheticGroup({"sex": "F", "race": "a"}, 120, 0.3, label_rate=0.6),
            SyntheticGroup({"sex": "M", "race": "b"}, 80, 0.7, label_rate=0.4),
            SyntheticGroup({"sex": "F", "race": "b"}, 50, 0.5, label_rate=0.5),
        ], seed=2)
        d = generate_synthetic(spec)
        write_csv(d, tmp_path / "s.csv")
        back = load_csv(tmp_path / "s.csv", DatasetSchema("prediction", ("race", "sex"), label_column="label"))
        for s in enumerate_subgroups(d.value_domains(), 2):
            assert tabulate(d, s) == tabulate(back, s)
            assert tabulate(d, s, "positives_only") == tabulate(back, s, "positives_only")

    def test_row_order_independence(self):
        d = generate_synthetic(SyntheticSpec([SyntheticGroup({"g": "a"}, 70, 0.3),
                                              SyntheticGroup({"g": "b"}, 90, 0.6)], seed=5))
        shuffled = d.take(np.random.default_rng(0).permutation(d.n_rows))
        spec = SubgroupSpec.of(g="a")
        assert tabulate(d, spec) == tabulate(shuffled, spec)

    def test_from_dict_rejects_unknown(self):
        with pytest.raises(ValidationError):
            SyntheticSpec.from_dict({"groups": [], "bogus": 1})
