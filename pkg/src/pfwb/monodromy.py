"""Integer recognition of continued matrices and checks against reference tables."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import gmpy2

from .data import load_json

IntMatrix = tuple[tuple[int, ...], ...]


class NonIntegralError(ArithmeticError):
    def __init__(self, message: str, offending: list[dict]):
        super().__init__(message)
        self.offending = offending


class UnknownTableError(KeyError):
    pass


class MissingMatrixError(KeyError):
    pass


@dataclass(frozen=True)
class RecognizedMatrix:
    entries: IntMatrix
    max_residual: float
    source: str = ""

    def to_json(self) -> dict:
        return {"entries": [list(r) for r in self.entries], "max_residual": self.max_residual, "source": self.source}


def recognize_integral(m, tol: float, source: str = "") -> RecognizedMatrix:
    """Round every entry to the nearest integer; fail if any residual reaches ``tol``."""
    if tol >= 1e-5:
        raise ValueError("recognition tolerance must be below 1e-5")
    rows, offending, worst = [], [], 0.0
    for i, row in enumerate(m):
        out = []
        for j, v in enumerate(row):
            if isinstance(v, int):
                out.append(v)
                continue
            if isinstance(v, Fraction):
                re_part, im_part = v, 0
            else:
                c = gmpy2.mpc(v)
                re_part, im_part = c.real, c.imag
            n = int(gmpy2.rint(re_part)) if not isinstance(re_part, Fraction) else round(re_part)
            res = float(max(abs(re_part - n), abs(im_part)))
            worst = max(worst, res)
            if res >= tol:
                offending.append({"row": i, "col": j, "value": repr(complex(v)), "residual": res})
            out.append(n)
        rows.append(tuple(out))
    if offending:
        raise NonIntegralError(f"non-integral matrix ({len(offending)} entries with residual >= {tol:.1e})", offending)
    return RecognizedMatrix(tuple(rows), worst, source)


# ---------------------------------------------------------------------------
# exact integer matrix algebra


def as_int_matrix(m) -> IntMatrix:
    if isinstance(m, RecognizedMatrix):
        m = m.entries
    return tuple(tuple(int(v) for v in row) for row in m)


def imul(a, b) -> IntMatrix:
    a, b = as_int_matrix(a), as_int_matrix(b)
    if len(a[0]) != len(b):
        raise ValueError("shape mismatch")
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))) for i in range(len(a)))


def itranspose(a) -> IntMatrix:
    return tuple(zip(*as_int_matrix(a)))


def ieye(n: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def rational_inverse(a) -> list[list[Fraction]]:
    n = len(a)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((i for i in range(col, n) if aug[i][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [u - f * v for u, v in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]


def iinverse(a) -> IntMatrix:
    """Inverse of a unimodular integer matrix (raises if not unimodular)."""
    inv = rational_inverse(as_int_matrix(a))
    if any(v.denominator != 1 for row in inv for v in row):
        raise ValueError("matrix is not unimodular")
    return tuple(tuple(int(v) for v in row) for row in inv)


def idet(a) -> int:
    """Determinant by fraction-free (Bareiss) elimination."""
    m = [list(r) for r in as_int_matrix(a)]
    n, sign, prev = len(m), 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def verify_form(M, G) -> bool:
    """True iff M^T G M = G exactly."""
    M, G = as_int_matrix(M), as_int_matrix(G)
    if len(M) != len(G) or any(len(r) != len(G) for r in M):
        raise ValueError("shape mismatch between matrix and form")
    return imul(imul(itranspose(M), G), M) == G


# ---------------------------------------------------------------------------
# relations

_NAME = re.compile(r"-?[A-Za-z][A-Za-z0-9_]*")


@dataclass(frozen=True)
class RelationResult:
    relation: str
    passed: bool
    residual: IntMatrix | None = None

    def to_json(self) -> dict:
        out = {"relation": self.relation, "pass": self.passed}
        if self.residual is not None:
            out["residual"] = [list(r) for r in self.residual]
        return out


def _evaluate_product(expr: str, mats: Mapping[str, IntMatrix], n: int) -> IntMatrix:
    result = ieye(n)
    for token in expr.split("*"):
        token = token.strip()
        if not _NAME.fullmatch(token):
            raise ValueError(f"bad relation token {token!r}")
        neg = token.startswith("-")
        name = token.lstrip("-")
        if name == "I":
            factor = ieye(n)
        elif name in mats:
            factor = mats[name]
        else:
            raise MissingMatrixError(name)
        if neg:
            factor = tuple(tuple(-v for v in row) for row in factor)
        result = imul(result, factor)
    return result


def check_relation(relation: str, mats: Mapping[str, Sequence]) -> RelationResult:
    """Check ``lhs=rhs`` where both sides are ``*``-products of matrix names (``I`` = identity)."""
    lhs, sep, rhs = relation.partition("=")
    if not sep:
        raise ValueError(f"relation {relation!r} has no '='")
    ints = {k: as_int_matrix(v) for k, v in mats.items()}
    n = len(next(iter(ints.values())))
    left = _evaluate_product(lhs, ints, n)
    right = _evaluate_product(rhs, ints, n)
    if left == right:
        return RelationResult(relation, True)
    diff = tuple(tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(left, right))
    return RelationResult(relation, False, diff)


def verify_relations(mats: Mapping[str, Sequence], relations: Sequence[str]) -> list[RelationResult]:
    return [check_relation(rel, mats) for rel in relations]


# ---------------------------------------------------------------------------
# reference tables

BUNDLED_TABLES = ("k3_deg12", "rodland")


@dataclass(frozen=True)
class ReferenceTable:
    id: str
    matrices: Mapping[str, IntMatrix]
    relations: tuple[str, ...]
    pairing: IntMatrix
    pairing_name: str
    form_preserving: tuple[str, ...] = ()
    description: str = ""
    checksum: str = field(default="", repr=False)

    def validate(self) -> list[str]:
        """Problems with the stored data (empty when self-consistent)."""
        problems = [f"relation fails: {r.relation}" for r in verify_relations(self.matrices, self.relations) if not r.passed]
        for name in self.form_preserving:
            if not verify_form(self.matrices[name], self.pairing):
                problems.append(f"{name} does not preserve {self.pairing_name}")
        return problems


def load_reference_table(table_id: str, validate: bool = True) -> ReferenceTable:
    """Load a bundled table; with ``validate`` an inconsistent table raises instead of loading."""
    if table_id not in BUNDLED_TABLES:
        raise UnknownTableError(f"unknown table id {table_id!r}; bundled: {', '.join(BUNDLED_TABLES)}")
    doc = load_json(f"tables/{table_id}.json", checksum_field="matrices")
    table = ReferenceTable(
        id=doc["id"],
        matrices={k: as_int_matrix(v) for k, v in doc["matrices"].items()},
        relations=tuple(doc["relations"]),
        pairing=as_int_matrix(doc["pairing"]),
        pairing_name=doc["pairing_name"],
        form_preserving=tuple(doc.get("form_preserving", ())),
        description=doc.get("description", ""),
        checksum=doc["checksum"],
    )
    problems = table.validate() if validate else []
    if problems:
        raise ValueError(f"bundled table {table_id} is inconsistent: {problems}")
    return table


def compare_reference(computed: Mapping[str, object], table_id: str) -> list[dict]:
    """Entrywise differences between computed matrices and a bundled table.

    Matrices missing on either side are reported as records without row/col.
    """
    table = load_reference_table(table_id)
    diffs = []
    for name, expected in table.matrices.items():
        if name not in computed:
            diffs.append({"matrix": name, "missing": "computed"})
            continue
        got = as_int_matrix(computed[name])
        for i, (er, gr) in enumerate(zip(expected, got)):
            for j, (e, g) in enumerate(zip(er, gr)):
                if e != g:
                    diffs.append({"matrix": name, "row": i, "col": j, "expected": e, "got": g})
    return diffs
