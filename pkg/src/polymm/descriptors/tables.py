"""Loading of the shipped parameter tables.

Each table is a tab-separated file under ``data/``.  ``data/CHECKSUMS``
lists a SHA-256 digest per file; a mismatch raises on first load, so an
edited table never silently changes descriptor values.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from polymm.chem.smarts import Pattern, compile_smarts
from polymm.descriptors.errors import TableChecksumMismatch

TABLE_FILES = ("crippen.tsv", "hall_kier.tsv", "tpsa.tsv", "vsa.tsv")
TABLE_VERSION = "1"


def _read_bytes(name: str) -> bytes:
    return resources.files("polymm.descriptors").joinpath(f"data/{name}").read_bytes()


def table_digests() -> dict[str, str]:
    return {name: hashlib.sha256(_read_bytes(name)).hexdigest() for name in TABLE_FILES}


@lru_cache(maxsize=1)
def _expected_digests() -> dict[str, str]:
    out = {}
    for line in _read_bytes("CHECKSUMS").decode().splitlines():
        if line.strip() and not line.startswith("#"):
            digest, name = line.split()
            out[name] = digest
    return out


def _rows(name: str) -> list[list[str]]:
    raw = _read_bytes(name)
    expected = _expected_digests().get(name)
    actual = hashlib.sha256(raw).hexdigest()
    if expected != actual:
        raise TableChecksumMismatch(f"{name}: expected sha256 {expected}, found {actual}")
    rows = []
    for line in raw.decode("utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            rows.append(line.split("\t"))
    return rows


@dataclass(frozen=True)
class CrippenType:
    label: str
    pattern: Pattern
    logp: float


@lru_cache(maxsize=1)
def crippen_types() -> tuple[CrippenType, ...]:
    return tuple(CrippenType(label, compile_smarts(smarts), float(logp)) for label, smarts, logp in _rows("crippen.tsv"))


@lru_cache(maxsize=1)
def hall_kier_table() -> dict[str, tuple[float | None, float | None, float]]:
    out = {}
    for sym, sp, sp2, sp3 in _rows("hall_kier.tsv"):
        out[sym] = (None if sp == "-" else float(sp), None if sp2 == "-" else float(sp2), float(sp3))
    return out


@dataclass(frozen=True)
class TpsaRule:
    element: str
    neighbours: int
    hydrogens: int
    charge: int
    single: int | None
    double: int | None
    triple: int | None
    aromatic: int | None
    ring3: bool | None
    value: float

    def matches(self, key: tuple[str, int, int, int, int, int, int, int, bool]) -> bool:
        el, nb, hs, chg, s, d, t, a, r3 = key
        if (el, nb, hs, chg) != (self.element, self.neighbours, self.hydrogens, self.charge):
            return False
        for want, have in ((self.single, s), (self.double, d), (self.triple, t), (self.aromatic, a)):
            if want is not None and want != have:
                return False
        return self.ring3 is None or self.ring3 == r3


@lru_cache(maxsize=1)
def tpsa_rules() -> tuple[TpsaRule, ...]:
    def opt(v: str) -> int | None:
        return None if v == "*" else int(v)

    rules = []
    for el, nb, hs, chg, s, d, t, a, r3, value in _rows("tpsa.tsv"):
        ring3 = None if r3 == "*" else r3 == "y"
        rules.append(TpsaRule(el, int(nb), int(hs), int(chg), opt(s), opt(d), opt(t), opt(a), ring3, float(value)))
    return tuple(rules)


@lru_cache(maxsize=1)
def vsa_parameters() -> dict[str, float]:
    return {key: float(value) for key, value in _rows("vsa.tsv")}
