"""Bundled Calabi-Yau invariants, BPS tables and the curve-counting consistency identities."""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .data import load_json

INVARIANTS_FILE = "invariants.json"
BPS_FILES = {"grpf": "bps_grpf.json", "reye": "bps_reye.json"}


def euler_from_hodge(h11: int, h21: int) -> int:
    return 2 * (h11 - h21)


def bps_contribution(dim_moduli: int, euler_moduli: int, multiplicity: int = 1) -> int:
    """Contribution of a smooth family of curves parametrized by a compact moduli space."""
    return (-1) ** dim_moduli * euler_moduli * multiplicity


@dataclass(frozen=True)
class CYInvariants:
    name: str
    H3: int | None
    c2H: int | None
    h11: int
    h21: int
    euler: int
    hodge_trusted: bool = True
    notes: tuple[str, ...] = ()
    h21_alternatives: Mapping[str, int] = field(default_factory=dict)

    @property
    def warnings(self) -> list[str]:
        """Mismatches between the stored Euler number and 2(h11 - h21); they are reported, not repaired."""
        implied = euler_from_hodge(self.h11, self.h21)
        out = []
        if implied != self.euler:
            out.append(f"{self.name}: 2(h11 - h21) = {implied} but stored euler = {self.euler}")
        for label, h21 in self.h21_alternatives.items():
            if h21 != self.h21:
                out.append(f"{self.name}: {label} h21 = {h21} differs from recorded h21 = {self.h21}")
        return out

    def to_json(self) -> dict:
        return {"name": self.name, "H3": self.H3, "c2H": self.c2H, "h11": self.h11, "h21": self.h21,
                "euler": self.euler, "hodge_trusted": self.hodge_trusted, "notes": list(self.notes),
                "h21_alternatives": dict(self.h21_alternatives), "warnings": self.warnings}


@dataclass(frozen=True)
class BPSTable:
    name: str
    entries: Mapping[tuple[int, int], int]
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def n(self, g: int, d: int) -> int:
        try:
            return self.entries[(g, d)]
        except KeyError:
            raise KeyError(f"n_{g}({d}) is not stored in {self.name}") from None


def load_invariants() -> dict[str, CYInvariants]:
    doc = load_json(INVARIANTS_FILE, checksum_field="records")
    out = {}
    for rec in doc["records"]:
        out[rec["name"]] = CYInvariants(
            name=rec["name"], H3=rec["H3"], c2H=rec["c2H"], h11=rec["h11"], h21=rec["h21"],
            euler=rec["euler"], hodge_trusted=rec["hodge_trusted"], notes=tuple(rec["notes"]),
            h21_alternatives=MappingProxyType(rec.get("h21_alternatives", {})))
    for inv in out.values():
        if inv.hodge_trusted and inv.warnings:
            raise ValueError(f"trusted record is inconsistent: {inv.warnings}")
    return out


def load_bps(key: str) -> BPSTable:
    if key not in BPS_FILES:
        raise KeyError(f"unknown BPS table {key!r}; bundled: {', '.join(BPS_FILES)}")
    doc = load_json(BPS_FILES[key], checksum_field="entries")
    return BPSTable(doc["name"], {(e["g"], e["d"]): e["n"] for e in doc["entries"]}, tuple(doc["notes"]))


def consistency_warnings() -> list[str]:
    return [w for inv in load_invariants().values() for w in inv.warnings]


def bps_checks() -> list[dict]:
    """The two curve-family identities: P^6 family of genus-8 curves, and a genus-3 family over the Reye X counted twice."""
    inv = load_invariants()
    grpf, reye = load_bps("grpf"), load_bps("reye")
    # e(P^6) = 7
    p6 = bps_contribution(6, 7, 1)
    # free Z/2 quotient halves the Euler number of the double cover
    e_x = inv["reye_Xtilde"].euler // 2
    reye_val = bps_contribution(3, e_x, 2)
    return [
        {"check": "n_8(14) = (-1)^6 e(P^6)", "computed": p6, "table": grpf.n(8, 14), "pass": p6 == grpf.n(8, 14)},
        {"check": "e(Reye X) = e(X~)/2", "computed": e_x, "stored": inv["reye_X"].euler,
         "pass": e_x == inv["reye_X"].euler},
        {"check": "n_3(5) = 2 (-1)^3 e(X)", "computed": reye_val, "table": reye.n(3, 5),
         "pass": reye_val == reye.n(3, 5)},
    ]
