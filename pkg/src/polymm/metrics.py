"""MAE, MAPE, the range- and frequency-weighted MAE, and answer parsing."""

from __future__ import annotations

import csv
import math
import os
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from polymm.properties import DEFAULT_FORMATS, PROPERTIES, PropertyFormat


class MetricError(ValueError):
    code = "MetricError"


class EmptyInput(MetricError):
    code = "EmptyInput"


class LengthMismatch(MetricError):
    code = "LengthMismatch"


class ZeroGroundTruth(MetricError):
    code = "ZeroGroundTruth"

    def __init__(self, index: int):
        super().__init__(f"ground truth at index {index} is zero")
        self.index = index


class DegenerateRange(MetricError):
    code = "DegenerateRange"

    def __init__(self, prop: str):
        super().__init__(f"property {prop!r} has a zero value range in the test truths")
        self.property = prop


class Unparseable(MetricError):
    code = "Unparseable"


class UnknownProperty(MetricError):
    code = "UnknownProperty"


def _check(preds: Sequence[float], truths: Sequence[float]) -> None:
    if len(preds) != len(truths):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truths)} truths")
    if len(preds) == 0:
        raise EmptyInput("no prediction/truth pairs")


def mae(preds: Sequence[float], truths: Sequence[float]) -> float:
    """Mean absolute error.

    >>> mae([300, 350], [310, 340])
    10.0
    """
    _check(preds, truths)
    return math.fsum(abs(p - t) for p, t in zip(preds, truths)) / len(preds)


def mape(preds: Sequence[float], truths: Sequence[float]) -> float:
    """Mean absolute percentage error, in percent."""
    _check(preds, truths)
    for i, t in enumerate(truths):
        if t == 0:
            raise ZeroGroundTruth(i)
    return 100.0 * math.fsum(abs(p - t) / abs(t) for p, t in zip(preds, truths)) / len(preds)


@dataclass(frozen=True)
class WeightedResult:
    wmae: float
    weights: dict[str, float]
    ranges: dict[str, float]
    counts: dict[str, int]
    n_polymers: int


def property_weights(ranges: Mapping[str, float], counts: Mapping[str, int]) -> dict[str, float]:
    """w_k = (1/r_k) * K * sqrt(1/n_k) / sum_j sqrt(1/n_j)."""
    k = len(counts)
    norm = math.fsum(math.sqrt(1.0 / n) for n in counts.values())
    return {p: (1.0 / ranges[p]) * (k * math.sqrt(1.0 / counts[p]) / norm) for p in counts}


def wmae(
    preds: Sequence[Mapping[str, float]],
    truths: Sequence[Mapping[str, float]],
) -> WeightedResult:
    """Weighted MAE over polymers with sparse property truths.

    ``preds[i]`` and ``truths[i]`` belong to polymer ``i``; only properties
    present in ``truths[i]`` are scored and each must have a prediction.
    Ranges come from the truths given here (the test set).  Polymers with
    no truth value are left out of ``n``.

    Raises:
        DegenerateRange: a property whose truths span a zero range.
    """
    if len(preds) != len(truths):
        raise LengthMismatch(f"{len(preds)} prediction rows vs {len(truths)} truth rows")
    values: dict[str, list[float]] = {}
    for t in truths:
        for p, v in t.items():
            values.setdefault(p, []).append(v)
    if not values:
        raise EmptyInput("no truth values")
    ranges = {p: max(v) - min(v) for p, v in values.items()}
    for p, r in ranges.items():
        if r == 0:
            raise DegenerateRange(p)
    counts = {p: len(v) for p, v in values.items()}
    weights = property_weights(ranges, counts)
    total = []
    n_polymers = 0
    for i, (pr, t) in enumerate(zip(preds, truths)):
        if not t:
            continue
        n_polymers += 1
        for p, v in t.items():
            if p not in pr:
                raise MetricError(f"polymer {i} lacks a {p} prediction")
            total.append(weights[p] * abs(pr[p] - v))
    return WeightedResult(math.fsum(total) / n_polymers, weights, ranges, counts, n_polymers)


_ANSWER_RE = re.compile(r"([A-Za-z][A-Za-z0-9_]*)\s*:\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)")


def parse_answer(text: str, formats: Mapping[str, PropertyFormat] = DEFAULT_FORMATS) -> tuple[str, float]:
    """First ``<name>:<decimal>`` occurrence naming a known property.

    When the token after the value is a unit known to any property, it must
    be one accepted by the named property; a missing unit is accepted.

    Raises:
        Unparseable: no ``name:value`` occurrence at all, or a wrong unit.
        UnknownProperty: occurrences exist but none names a known property.
    """
    known_units = {u for f in formats.values() for u in (f.unit, *f.aliases) if u}
    seen_any = False
    for m in _ANSWER_RE.finditer(text):
        seen_any = True
        name = m.group(1)
        if name not in formats:
            continue
        value = float(m.group(2))
        rest = text[m.end():].strip()
        unit = rest.split()[0].rstrip(".,;") if rest else ""
        fmt = formats[name]
        if unit in known_units and not fmt.accepts(unit):
            raise Unparseable(f"unit {unit!r} does not match {name} ({fmt.unit or 'unitless'})")
        return name, value
    if seen_any:
        raise UnknownProperty(f"no known property in {text!r}")
    raise Unparseable(f"no '<name>:<value>' in {text!r}")


@dataclass(frozen=True)
class EvalReport:
    """Per-property MAE/MAPE/n plus the overall weighted MAE."""

    per_property: dict[str, dict[str, float]]
    wmae: float
    weights: dict[str, float]
    ranges: dict[str, float]
    label: str = ""
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, object]:
        return {
            "model": self.label,
            "columns": [*[p for p in PROPERTIES if p in self.per_property], "wMAE"],
            "MAE": {p: v["MAE"] for p, v in self.per_property.items()},
            "MAPE": {p: None if math.isnan(v["MAPE"]) else v["MAPE"] for p, v in self.per_property.items()},
            "n": {p: int(v["n"]) for p, v in self.per_property.items()},
            "wMAE": self.wmae,
            "weights": self.weights,
            "ranges": self.ranges,
            "notes": self.notes,
        }


def evaluate(
    preds: Sequence[Mapping[str, float]],
    truths: Sequence[Mapping[str, float]],
    label: str = "",
) -> EvalReport:
    """Full report for aligned per-polymer predictions and sparse truths."""
    w = wmae(preds, truths)
    per: dict[str, dict[str, float]] = {}
    for prop in PROPERTIES:
        pairs = [(p[prop], t[prop]) for p, t in zip(preds, truths) if prop in t]
        if not pairs:
            continue
        ps, ts = [a for a, _ in pairs], [b for _, b in pairs]
        notes_mape = math.nan
        try:
            notes_mape = mape(ps, ts)
        except ZeroGroundTruth:
            pass
        per[prop] = {"MAE": mae(ps, ts), "MAPE": notes_mape, "n": len(pairs)}
    notes = [f"MAPE undefined for {p}: zero ground truth" for p, v in per.items() if math.isnan(v["MAPE"])]
    return EvalReport(per, w.wmae, w.weights, w.ranges, label, notes)


def read_predictions(path: str | os.PathLike) -> dict[str, dict[str, float]]:
    """Predictions CSV with columns ``key,property,value``."""
    out: dict[str, dict[str, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if set(reader.fieldnames or ()) < {"key", "property", "value"}:
            raise MetricError(f"{path}: expected columns key, property, value")
        for row in reader:
            if row["property"] not in PROPERTIES:
                raise UnknownProperty(f"unknown property {row['property']!r}")
            out.setdefault(row["key"], {})[row["property"]] = float(row["value"])
    return out


def write_predictions(preds: Mapping[str, Mapping[str, float]], path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("key", "property", "value"))
        for key, row in preds.items():
            for prop in PROPERTIES:
                if prop in row:
                    w.writerow((key, prop, repr(float(row[prop]))))
