from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polymm.metrics import (
    DegenerateRange,
    EmptyInput,
    LengthMismatch,
    Unparseable,
    UnknownProperty,
    ZeroGroundTruth,
    evaluate,
    mae,
    mape,
    parse_answer,
    property_weights,
    read_predictions,
    wmae,
    write_predictions,
)


class TestMae:
    def test_examples(self):
        assert mae([300, 350], [310, 340]) == 10.0
        assert mae([1.5, 2.5], [1.5, 2.5]) == 0.0
        assert mae([1], [4]) == 3.0

    def test_errors(self):
        with pytest.raises(EmptyInput):
            mae([], [])
        with pytest.raises(LengthMismatch):
            mae([1, 2], [1])


class TestMape:
    def test_examples(self):
        assert mape([110], [100]) == pytest.approx(10.0, abs=1e-12)
        assert mape([3.0, 4.0], [3.0, 4.0]) == 0.0

    def test_zero_truth(self):
        with pytest.raises(ZeroGroundTruth) as exc:
            mape([1, 2], [1, 0])
        assert exc.value.index == 1


floats = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(floats, floats.filter(lambda x: abs(x) > 1e-3)), min_size=1, max_size=30))
def test_folds_match_brute_force(pairs):
    preds = [p for p, _ in pairs]
    truths = [t for _, t in pairs]
    total_abs = 0.0
    total_pct = 0.0
    for p, t in pairs:
        total_abs += abs(p - t)
        total_pct += abs(p - t) / abs(t)
    assert abs(mae(preds, truths) - total_abs / len(pairs)) <= 1e-12 * max(1.0, total_abs / len(pairs))
    brute_pct = 100.0 * total_pct / len(pairs)
    assert abs(mape(preds, truths) - brute_pct) <= 1e-12 * max(1.0, brute_pct)


class TestWmae:
    def test_single_property_is_mae_over_range(self):
        result = wmae([{"Tg": 1.0}, {"Tg": 9.0}], [{"Tg": 0.0}, {"Tg": 10.0}])
        assert abs(result.wmae - 0.1) <= 1e-12
        assert abs(result.wmae - mae([1, 9], [0, 10]) / 10) <= 1e-12

    def test_two_property_weights(self):
        w = property_weights({"A": 10.0, "B": 2.0}, {"A": 4, "B": 1})
        assert abs(w["A"] - 1 / 15) <= 1e-12 and abs(w["B"] - 2 / 3) <= 1e-12

    def test_two_property_weights_from_data(self):
        truths = [{"Tg": 0.0}, {"Tg": 10.0}, {"Tg": 5.0}, {"Tg": 5.0, "FFV": 1.0}, {"FFV": 3.0}]
        preds = [{p: v + 1.0 for p, v in t.items()} for t in truths]
        result = wmae(preds, truths)
        n_tg, n_ffv = 4, 2
        norm = math.sqrt(1 / n_tg) + math.sqrt(1 / n_ffv)
        w_tg = (1 / 10) * 2 * math.sqrt(1 / n_tg) / norm
        w_ffv = (1 / 2) * 2 * math.sqrt(1 / n_ffv) / norm
        assert result.weights == pytest.approx({"Tg": w_tg, "FFV": w_ffv}, abs=1e-15)
        assert result.wmae == pytest.approx((4 * w_tg + 2 * w_ffv) / 5, abs=1e-15)

    def test_equal_counts_unit_ranges(self):
        truths = [{"A": 0.0, "B": 0.0}, {"A": 1.0, "B": 1.0}]
        preds = [{"A": 0.5, "B": 0.25}, {"A": 1.0, "B": 0.5}]
        result = wmae(preds, truths)
        assert result.weights == {"A": 1.0, "B": 1.0}
        assert result.wmae == pytest.approx((0.5 + 0.25 + 0.0 + 0.5) / 2, abs=1e-15)

    def test_linearity_in_one_property(self):
        truths = [{"A": 0.0, "B": 1.0}, {"A": 2.0}, {"B": 4.0}]
        base = [{"A": 0.5, "B": 1.5}, {"A": 1.0}, {"B": 3.0}]
        scaled = [{k: t[k] + 3 * (v - t[k]) if k == "A" else v for k, v in p.items()} for p, t in zip(base, truths)]
        r0, r1 = wmae(base, truths), wmae(scaled, truths)
        a0 = r0.weights["A"] * (0.5 + 1.0) / 3
        assert r1.wmae - r0.wmae == pytest.approx(2 * a0, abs=1e-12)

    def test_degenerate_range(self):
        with pytest.raises(DegenerateRange):
            wmae([{"Tg": 1.0}, {"Tg": 2.0}], [{"Tg": 5.0}, {"Tg": 5.0}])

    def test_polymers_without_truth_excluded(self):
        result = wmae([{"Tg": 1.0}, {}, {"Tg": 9.0}], [{"Tg": 0.0}, {}, {"Tg": 10.0}])
        assert result.n_polymers == 2 and result.wmae == pytest.approx(0.1, abs=1e-12)


class TestParseAnswer:
    def test_examples(self):
        assert parse_answer("Tg:123.4 C") == ("Tg", 123.4)
        assert parse_answer("FFV:0.3651") == ("FFV", 0.3651)
        assert parse_answer("Answer: Density:0.9431 g/cm^3") == ("Density", 0.9431)

    def test_unparseable(self):
        with pytest.raises(Unparseable):
            parse_answer("The density is high")

    def test_unknown_property(self):
        with pytest.raises(UnknownProperty):
            parse_answer("Mw:12000")

    def test_wrong_unit(self):
        with pytest.raises(Unparseable):
            parse_answer("Tg:123.4 g/cm^3")

    def test_trailing_prose_is_not_a_unit(self):
        assert parse_answer("Rg:12.5 approximately") == ("Rg", 12.5)


def test_evaluate_report_shape():
    truths = [{"Tg": 0.0, "FFV": 0.3}, {"Tg": 10.0}, {"FFV": 0.4, "Rg": 10.0}, {"Rg": 20.0}]
    preds = [{p: v * 1.1 + 0.1 for p, v in t.items()} for t in truths]
    d = evaluate(preds, truths, "toy").to_dict()
    assert d["columns"] == ["Tg", "FFV", "Rg", "wMAE"]
    assert d["MAPE"]["Tg"] is None and d["notes"]
    assert d["n"] == {"Tg": 2, "FFV": 2, "Rg": 2}
    assert all(w > 0 for w in d["weights"].values()) and all(r > 0 for r in d["ranges"].values())


def test_perfect_predictions():
    truths = [{"Tg": 1.0}, {"Tg": 3.0, "Tc": 0.2}, {"Tc": 0.3}]
    report = evaluate(truths, truths)
    assert report.wmae == 0.0 and all(v["MAE"] == 0.0 for v in report.per_property.values())


def test_predictions_round_trip(tmp_path):
    preds = {"*CC*": {"Tg": 1 / 3, "Rg": 2.0}, "*CC(*)C": {"FFV": 0.1 + 0.2}}
    write_predictions(preds, tmp_path / "p.csv")
    assert read_predictions(tmp_path / "p.csv") == preds
    (tmp_path / "bad.csv").write_text("key,property,value\n*CC*,Mw,1\n")
    with pytest.raises(UnknownProperty):
        read_predictions(tmp_path / "bad.csv")



def test_accepts_numpy_arrays():
    import numpy as np

    assert mae(np.array([1.0, 3.0]), np.array([2.0, 2.0])) == 1.0
    assert mape(np.array([1.5]), np.array([1.0])) == pytest.approx(50.0, abs=1e-12)
