"""Fuchsian operators in x-graded theta form.

An operator is stored as ``sum_j x**j * P_j(theta)`` with ``theta = x d/dx`` and
each ``P_j`` a :class:`~pfwb.exact.RatPoly` in theta.  This module parses the
textual form, computes the Riemann scheme, and builds Frobenius bases with
logarithms at points of maximally unipotent monodromy.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Sequence

import gmpy2
import mpmath
import sympy

from .exact import QuadExt, RatPoly, sqrt_in_qext, stirling2, to_fraction


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class NotMUMError(ValueError):
    pass


class ResonanceError(ArithmeticError):
    pass


class TruncationError(ArithmeticError):
    pass


class OutsideDiskError(ValueError):
    pass


@dataclass(frozen=True)
class ThetaOperator:
    terms: Mapping[int, RatPoly]
    name: str = ""
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {int(j): RatPoly.coerce(p) for j, p in self.terms.items() if not RatPoly.coerce(p).is_zero()}
        if not cleaned:
            raise ValueError("operator has no terms")
        if min(cleaned) < 0:
            raise ValueError("negative powers of x are not allowed")
        object.__setattr__(self, "terms", MappingProxyType(dict(sorted(cleaned.items()))))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    @property
    def order(self) -> int:
        return max(p.degree for p in self.terms.values())

    @property
    def x_degree(self) -> int:
        return max(self.terms)

    def P(self, j: int) -> RatPoly:
        return self.terms.get(j, RatPoly())

    def symbol(self) -> RatPoly:
        """Coefficient of theta**r as a polynomial in x."""
        r = self.order
        return RatPoly(self.P(j).coeff(r) for j in range(self.x_degree + 1))

    def z_chart(self) -> "ThetaOperator":
        """Same operator written in z = 1/x (theta_z = -theta_x), cleared of negative powers."""
        J = self.x_degree
        terms = {J - j: p.compose_neg() for j, p in self.terms.items()}
        return ThetaOperator(terms, name=f"{self.name}[z]" if self.name else "z-chart", metadata=self.metadata)

    def d_form(self) -> list[RatPoly]:
        """Polynomials a_i(x) with op = sum_i a_i(x) (d/dx)**i."""
        r = self.order
        out = [RatPoly() for _ in range(r + 1)]
        for j, p in self.terms.items():
            for k, c in enumerate(p.coeffs):
                if c == 0:
                    continue
                for i in range(k + 1):
                    s = stirling2(k, i)
                    if s:
                        out[i] = out[i] + RatPoly.monomial(i + j, c * s)
        return out

    def apply_log_series(self, series: Mapping[int, Sequence[Fraction]], rho: Fraction) -> dict[int, list[Fraction]]:
        """Apply the operator to sum_a log(x)**a * x**rho * sum_n s_a[n] x**n (exact)."""
        n_max = max(len(v) for v in series.values())
        out: dict[int, list[Fraction]] = {}
        for j, p in self.terms.items():
            acc = {a: [Fraction(0)] * n_max for a in series}
            # Horner in theta: acc = (...((c_d) theta + c_{d-1}) theta ...)
            for c in reversed(p.coeffs):
                acc = _theta_apply(acc, rho)
                for a, s in series.items():
                    row = acc[a]
                    for n, v in enumerate(s):
                        row[n] += c * v
            for a, row in acc.items():
                tgt = out.setdefault(a, [Fraction(0)] * (n_max + self.x_degree))
                for n, v in enumerate(row):
                    tgt[n + j] += v
        return out

    def pretty(self) -> str:
        parts = []
        for j, p in self.terms.items():
            xs = "" if j == 0 else ("x*" if j == 1 else f"x^{j}*")
            parts.append(f"{xs}({p.pretty('theta')})")
        return " + ".join(parts)


def _theta_apply(series: dict[int, list[Fraction]], rho: Fraction) -> dict[int, list[Fraction]]:
    out = {a: [Fraction(0)] * len(s) for a, s in series.items()}
    for a, s in series.items():
        for n, v in enumerate(s):
            if v == 0:
                continue
            out[a][n] += (rho + n) * v
            if a > 0:
                out.setdefault(a - 1, [Fraction(0)] * len(s))[n] += a * v
    return out


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|(theta_x|theta|θ_x|θ|x)|(\*\*|[-+*^()−]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            while text[pos].isspace():
                pos += 1
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        if m.group(1):
            out.append(("num", m.group(1), start))
        elif m.group(2):
            out.append(("x" if m.group(2) == "x" else "theta", m.group(2), start))
        else:
            op = m.group(3)
            out.append(("op", {"−": "-", "**": "^"}.get(op, op), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Graded:
    """Intermediate parse value: dict x-power -> theta polynomial."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[int, RatPoly]):
        self.terms = {j: p for j, p in terms.items() if not p.is_zero()}

    def has_theta(self) -> bool:
        return any(p.degree > 0 for p in self.terms.values())

    def has_x(self) -> bool:
        return any(j > 0 for j in self.terms)

    def add(self, other: "_Graded", sign: int = 1) -> "_Graded":
        out = dict(self.terms)
        for j, p in other.terms.items():
            out[j] = out.get(j, RatPoly()) + (p if sign > 0 else -p)
        return _Graded(out)

    def mul(self, other: "_Graded", pos: int) -> "_Graded":
        if self.has_theta() and other.has_x():
            raise ParseError("mixed x-theta monomial not in x^j*P(theta) shape", pos)
        out: dict[int, RatPoly] = {}
        for j, p in self.terms.items():
            for k, q in other.terms.items():
                out[j + k] = out.get(j + k, RatPoly()) + p * q
        return _Graded(out)


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val or 'end of input'!r}", pos)

    def parse(self) -> _Graded:
        value = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return value

    def expr(self) -> _Graded:
        value = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                value = value.add(self.term(), 1 if val == "+" else -1)
            else:
                return value

    def term(self) -> _Graded:
        value = self.unary()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val == "*":
                self.take()
                value = value.mul(self.unary(), pos)
            else:
                return value

    def unary(self) -> _Graded:
        kind, val, pos = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            inner = self.unary()
            return inner if val == "+" else _Graded({}).add(inner, -1)
        return self.power()

    def power(self) -> _Graded:
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, num, npos = self.take()
            if kind != "num":
                raise ParseError("exponent must be a non-negative integer", npos)
            result = _Graded({0: RatPoly.const(1)})
            for _ in range(int(num)):
                result = result.mul(base, pos)
            return result
        return base

    def atom(self) -> _Graded:
        kind, val, pos = self.take()
        if kind == "num":
            return _Graded({0: RatPoly.const(int(val))})
        if kind == "x":
            return _Graded({1: RatPoly.const(1)})
        if kind == "theta":
            return _Graded({0: RatPoly([0, 1])})
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ParseError(f"unexpected token {val or 'end of input'!r}", pos)


def parse_operator(text: str, name: str = "", metadata: Mapping[str, str] | None = None) -> ThetaOperator:
    """Parse e.g. ``theta^3 - x*(2*theta+1)*(17*theta^2+17*theta+5) + x^2*(theta+1)^3``."""
    graded = _Parser(text).parse()
    if not graded.terms:
        raise ParseError("operator is identically zero", 0)
    return ThetaOperator(graded.terms, name=name, metadata=metadata or {})


def load_operator(path: str | Path) -> ThetaOperator:
    """Read an operator file: optional ``#`` comment lines, then one expression."""
    path = Path(path)
    meta: dict[str, str] = {}
    body = []
    for line in path.read_text(encoding="utf-8").splitlines():
        stripped = line.strip()
        if stripped.startswith("#"):
            content = stripped[1:].strip()
            key, sep, value = content.partition("=")
            if sep and re.fullmatch(r"[A-Za-z_][\w-]*", key.strip()):
                meta[key.strip()] = value.strip()
            continue
        if stripped:
            body.append(stripped)
    if not body:
        raise ParseError("operator file has no expression", 0)
    return parse_operator(" ".join(body), name=meta.get("name", path.stem), metadata=meta)


# ---------------------------------------------------------------------------
# singular points


@dataclass(frozen=True)
class SingularityRecord:
    location: object
    numeric: complex
    exponents: tuple
    kind: str
    symbol_multiplicity: int = 0
    interval: tuple[Fraction, Fraction] | None = None
    fuchsian: bool = True
    note: str = ""

    @property
    def is_infinity(self) -> bool:
        return isinstance(self.location, str) and self.location == "inf"

    def label(self) -> str:
        if self.is_infinity:
            return "inf"
        if isinstance(self.location, (Fraction, QuadExt)):
            return str(self.location)
        return f"{self.numeric.real:.12g}" + ("" if abs(self.numeric.imag) < 1e-30 else f"{self.numeric.imag:+.12g}i")

    def to_json(self) -> dict:
        def ex(e):
            return str(e) if isinstance(e, Fraction) else repr(complex(e))

        out = {
            "location": self.label(),
            "approx": [self.numeric.real, self.numeric.imag] if not self.is_infinity else None,
            "exponents": [ex(e) for e in self.exponents],
            "kind": self.kind,
            "fuchsian": self.fuchsian,
        }
        if self.interval is not None:
            out["isolating_interval"] = [str(self.interval[0]), str(self.interval[1])]
        if self.note:
            out["note"] = self.note
        return out


def _sturm_sequence(p: RatPoly) -> list[RatPoly]:
    seq = [p, p.derivative()]
    while not seq[-1].is_zero():
        rem = seq[-2].divmod(seq[-1])[1]
        seq.append(-rem)
    return seq[:-1]


def _sign_changes(seq: list[RatPoly], x: Fraction) -> int:
    signs = [s for s in (q(x) for q in seq) if s != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def isolate_real_roots(p: RatPoly, width: Fraction = Fraction(1, 2**40)) -> list[tuple[Fraction, Fraction]]:
    """Disjoint intervals (lo, hi], each holding exactly one real root of the square-free ``p``."""
    seq = _sturm_sequence(p)
    bound = 1 + max(abs(c / p.leading) for c in p.coeffs[:-1]) if p.degree > 0 else Fraction(1)
    stack = [(-bound, bound)]
    out = []
    while stack:
        lo, hi = stack.pop()
        n = _sign_changes(seq, lo) - _sign_changes(seq, hi)
        if n == 0:
            continue
        if n == 1 and hi - lo <= width:
            out.append((lo, hi))
            continue
        mid = (lo + hi) / 2
        stack.extend([(lo, mid), (mid, hi)])
    return sorted(out)


_NUMERIC_DPS = 120


def _polish_root(p: RatPoly, z: complex):
    """Root of p near z, to _NUMERIC_DPS digits (Newton)."""
    with mpmath.workdps(_NUMERIC_DPS):
        dp = p.derivative()
        w = mpmath.mpc(z)
        for _ in range(200):
            step = _mp_eval(p, w) / _mp_eval(dp, w)
            w -= step
            if abs(step) < mpmath.mpf(10) ** (-_NUMERIC_DPS + 5) * max(1, abs(w)):
                break
        return w if abs(mpmath.im(w)) > 0 else mpmath.re(w)


def _numeric_roots(p: RatPoly, digits: int = 60) -> list[complex]:
    coeffs = [mpmath.mpf(c.numerator) / c.denominator for c in reversed(p.coeffs)]
    with mpmath.workdps(digits):
        return [complex(z) for z in mpmath.polyroots(coeffs, maxsteps=200, extraprec=4 * digits)]


def _factor_over_q(p: RatPoly) -> list[tuple[RatPoly, int]]:
    x = sympy.Symbol("x")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * x**k for k, c in enumerate(p.coeffs))
    _, factors = sympy.factor_list(expr, x)
    out = []
    for f, mult in factors:
        coeffs = sympy.Poly(f, x).all_coeffs()[::-1]
        out.append((RatPoly(Fraction(int(c.p), int(c.q)) for c in coeffs), int(mult)))
    return out


def symbol_roots(op: ThetaOperator) -> list[dict]:
    """Finite nonzero roots of the theta**r symbol, exact when possible."""
    sigma = op.symbol()
    roots = []
    for factor, mult in _factor_over_q(sigma):
        if factor.degree < 1:
            continue
        if factor.degree == 1:
            r = -factor.coeffs[0] / factor.coeffs[1]
            if r != 0:
                roots.append({"exact": r, "numeric": complex(float(r)), "mult": mult, "interval": None})
            continue
        if factor.degree == 2:
            c, b, a = factor.coeffs
            disc = b * b - 4 * a * c
            s = sqrt_in_qext(disc)
            if s is not None:
                for sign in (-1, 1):
                    r = (QuadExt(-b) + s * sign) * QuadExt(1 / (2 * a))
                    roots.append({"exact": r, "numeric": complex(float(r)), "mult": mult, "interval": None})
                continue
        intervals = isolate_real_roots(factor)
        numeric = _numeric_roots(factor)
        for lo, hi in intervals:
            mid = float((lo + hi) / 2)
            z = min(numeric, key=lambda w: abs(w - mid))
            roots.append({"exact": None, "numeric": complex(z.real, 0.0), "mult": mult, "interval": (lo, hi), "factor": factor})
        for z in numeric:
            if abs(z.imag) > 1e-30 * max(1.0, abs(z)):
                roots.append({"exact": None, "numeric": z, "mult": mult, "interval": None, "factor": factor})
    roots.sort(key=lambda d: (d["numeric"].real, d["numeric"].imag))
    return roots


def _roots_of_indicial(coeffs: list, exact: bool) -> list:
    """Roots (with multiplicity) of sum_k coeffs[k] s**k."""
    if exact:
        lead = coeffs[-1]
        monic = [c / lead for c in coeffs]
        if all(QuadExt.coerce(c).is_rational() for c in monic):
            p = RatPoly(QuadExt.coerce(c).a for c in monic)
            out = []
            for r in p.rational_roots():
                out.extend([r] * p.multiplicity(r))
            rest = p
            for r in set(out):
                for _ in range(p.multiplicity(r)):
                    rest = rest.divmod(RatPoly([-r, 1]))[0]
            if rest.degree > 0:
                out.extend(_numeric_roots(rest))
            return sorted(out, key=lambda v: (complex(v).real, complex(v).imag))
        coeffs = [mpmath.mpf(float(QuadExt.coerce(c))) for c in coeffs]
    with mpmath.workdps(_NUMERIC_DPS):
        roots = mpmath.polyroots([mpmath.mpmathify(c) for c in reversed(coeffs)], maxsteps=800, extraprec=4 * _NUMERIC_DPS)
        tol = mpmath.mpf(10) ** (-_NUMERIC_DPS // 4)
        out = []
        for z in roots:
            q = Fraction(float(mpmath.re(z))).limit_denominator(24)
            if abs(mpmath.im(z)) < tol and abs(mpmath.re(z) - mpmath.mpf(q.numerator) / q.denominator) < tol:
                out.append(q)
            else:
                out.append(complex(z))
    return sorted(out, key=lambda v: (complex(v).real, complex(v).imag))


def _mp_eval(p: RatPoly, z):
    acc = mpmath.mpf(0)
    for c in reversed(p.coeffs):
        acc = acc * z + mpmath.mpf(c.numerator) / c.denominator
    return acc


def _falling(s_poly_degree: int) -> list[RatPoly]:
    out = [RatPoly.const(1)]
    for i in range(s_poly_degree):
        out.append(out[-1] * RatPoly([-i, 1]))
    return out


def local_indicial(op: ThetaOperator, point) -> tuple[list, bool, int]:
    """Indicial polynomial coefficients at a finite point, Fuchsian flag, symbol multiplicity.

    ``point`` is a Fraction, QuadExt or a float/complex approximation.
    """
    with mpmath.workdps(_NUMERIC_DPS):
        return _local_indicial(op, point)


def _local_indicial(op: ThetaOperator, point):
    a = op.d_form()
    r = op.order
    exact = isinstance(point, (Fraction, QuadExt, int))
    if exact:
        taylors = [ai.taylor_at(point) if not ai.is_zero() else [] for ai in a]
        is_zero = lambda v: QuadExt.coerce(v).is_zero()  # noqa: E731
    else:
        with mpmath.workdps(_NUMERIC_DPS):
            z = mpmath.mpmathify(point)
            taylors = []
            for ai in a:
                coeffs = []
                p = ai
                fact = 1
                for k in range(len(ai.coeffs)):
                    coeffs.append(_mp_eval(p, z) / fact if not p.is_zero() else mpmath.mpf(0))
                    p = p.derivative()
                    fact *= k + 1
                taylors.append(coeffs)
            scale = max(abs(c) for t in taylors for c in t) or 1
            eps = mpmath.mpf(10) ** (-_NUMERIC_DPS // 2)
        is_zero = lambda v: abs(v) < eps * scale  # noqa: E731
    ords = []
    for t in taylors:
        k = 0
        while k < len(t) and is_zero(t[k]):
            k += 1
        ords.append(k if k < len(t) else math.inf)
    m = ords[r]
    fuchsian = all(ords[i] >= m - r + i for i in range(r + 1))
    falling = _falling(r)
    ind = [Fraction(0)] * (r + 1) if exact else [mpmath.mpf(0)] * (r + 1)
    for i in range(r + 1):
        k = m - r + i
        if k < 0 or k >= len(taylors[i]):
            continue
        lead = taylors[i][k]
        for d, c in enumerate(falling[i].coeffs):
            ind[d] = ind[d] + lead * c if exact else ind[d] + lead * mpmath.mpf(c.numerator) / c.denominator
    return ind, fuchsian, m


def _apparent_at_rational(op: ThetaOperator, c: Fraction, exponents: Sequence[Fraction]) -> bool:
    """True iff all local solutions at the rational point c are holomorphic (exact check)."""
    if not all(isinstance(e, Fraction) and e.denominator == 1 and e >= 0 for e in exponents):
        return False
    if len(set(exponents)) != len(exponents):
        return False
    r = op.order
    taylors = [ai.shift(c).coeffs for ai in op.d_form()]
    m = next(k for k, v in enumerate(taylors[r]) if v != 0)
    N = int(max(exponents)) + r + 4
    # equation for t**q: sum_{i,k} T_i[k] falling(n, i) c_n with n = q + i - k
    rows = []
    for q in range(m - r, N - r + m):
        row = [Fraction(0)] * (N + 1)
        for i, t in enumerate(taylors):
            for k, v in enumerate(t):
                n = q + i - k
                if v == 0 or n < 0 or n > N:
                    continue
                f = 1
                for s in range(i):
                    f *= n - s
                row[n] += v * f
        rows.append(row)
    nullity = (N + 1) - _rank_fraction(rows)
    return nullity >= r


def _rank_fraction(rows: list[list[Fraction]]) -> int:
    rows = [list(r) for r in rows]
    rank, ncols = 0, len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col] / p[col]
                rows[i] = [u - f * v for u, v in zip(rows[i], p)]
        rank += 1
    return rank


def _classify(exponents) -> str:
    if len(set(exponents)) == 1:
        return "MUM"
    return "regular-singular"


def singular_data(op: ThetaOperator) -> list[SingularityRecord]:
    """Riemann scheme: singular points with local exponents, 0 first and infinity last."""
    r = op.order
    records = []
    P0 = op.P(0)
    if P0.degree == r:
        ex0 = tuple(_roots_of_indicial(list(P0.coeffs), exact=True))
        records.append(SingularityRecord(Fraction(0), 0j, ex0, _classify(ex0)))
    else:
        records.append(SingularityRecord(Fraction(0), 0j, (), "regular-singular", fuchsian=False,
                                         note=f"indicial degree drop: deg P0 = {P0.degree} < {r}"))
    for root in symbol_roots(op):
        loc = root["exact"]
        point = loc if loc is not None else _polish_root(root["factor"], root["numeric"])
        ind, fuchsian, m = local_indicial(op, point)
        note = ""
        if not fuchsian:
            exps, kind, note = (), "irregular", "operator is not Fuchsian here"
        else:
            exps = tuple(_roots_of_indicial(ind, exact=loc is not None))
            kind = _classify(exps)
            if isinstance(loc, Fraction) and _apparent_at_rational(op, loc, exps):
                kind = "apparent"
        records.append(SingularityRecord(
            loc if loc is not None else point, root["numeric"], exps, kind,
            symbol_multiplicity=root["mult"], interval=root["interval"], fuchsian=fuchsian, note=note,
        ))
    J = op.x_degree
    PJ = op.P(J)
    if PJ.degree == r:
        exinf = tuple(_roots_of_indicial(list(PJ.compose_neg().coeffs), exact=True))
        records.append(SingularityRecord("inf", complex("inf"), exinf, _classify(exinf)))
    else:
        records.append(SingularityRecord("inf", complex("inf"), (), "regular-singular", fuchsian=False,
                                         note=f"indicial degree drop at infinity: deg P_{J} = {PJ.degree} < {r}"))
    return records


def fuchs_relation(op: ThetaOperator, records: Sequence[SingularityRecord] | None = None) -> tuple[object, Fraction]:
    """(sum of all exponents, expected value r(r-1)/2 * (#singular points - 2))."""
    records = records if records is not None else singular_data(op)
    total = 0
    for rec in records:
        for e in rec.exponents:
            total = total + e
    r = op.order
    expected = Fraction(r * (r - 1), 2) * (len(records) - 2)
    return total, expected


def convergence_radius(op: ThetaOperator) -> float:
    roots = symbol_roots(op)
    return min(abs(d["numeric"]) for d in roots) if roots else math.inf


# ---------------------------------------------------------------------------
# Frobenius bases


@dataclass(frozen=True)
class FrobeniusBasis:
    """Log-graded solutions at a MUM point.

    ``solutions[k][a][n]`` is the coefficient of ``log(t)**a * t**(rho+n)`` in
    w_k, where t is x (chart 'x') or z = 1/x (chart 'z').  The w_k are the
    rho-derivatives d^k/drho^k of the Frobenius series with c_0 = 1.
    """

    operator: ThetaOperator
    chart: str
    exponent: Fraction
    truncation: int
    solutions: tuple
    radius: float
    flags: Mapping[str, bool]
    raw: tuple = field(repr=False, default=())

    @property
    def order(self) -> int:
        return len(self.solutions)

    def regular_part(self, k: int) -> list[Fraction]:
        return list(self.solutions[k].get(0, []))


def _series_mul(a: Sequence[Fraction], b: Sequence[Fraction], r: int) -> list[Fraction]:
    out = [Fraction(0)] * r
    for i, u in enumerate(a[:r]):
        if u == 0:
            continue
        for j in range(r - i):
            if j < len(b) and b[j]:
                out[i + j] += u * b[j]
    return out


def _series_div(a: Sequence[Fraction], b: Sequence[Fraction], r: int) -> list[Fraction]:
    out = [Fraction(0)] * r
    inv0 = 1 / b[0]
    for k in range(r):
        s = a[k] - sum((out[i] * b[k - i] for i in range(k) if k - i < len(b)), Fraction(0))
        out[k] = s * inv0
    return out


def frobenius_mum_basis(op: ThetaOperator, chart: str = "x", truncation: int = 64) -> FrobeniusBasis:
    """Frobenius basis (w_0, ..., w_{r-1}) at x = 0 (chart 'x') or z = 0 (chart 'z')."""
    if chart not in ("x", "z"):
        raise ValueError("chart must be 'x' or 'z'")
    local = op if chart == "x" else op.z_chart()
    r = local.order
    if truncation < 2 * r:
        raise ValueError(f"truncation must be at least {2 * r}")
    P0 = local.P(0)
    if P0.degree != r:
        raise NotMUMError(f"indicial polynomial at the {chart}-origin has degree {P0.degree} < {r}")
    roots = P0.rational_roots()
    if len(roots) != 1 or P0.multiplicity(roots[0]) != r:
        raise NotMUMError(f"exponents at the {chart}-origin are not all equal")
    rho = roots[0]
    raw = _frobenius_raw(local, rho, r, truncation, [])
    return _assemble(op, local, chart, rho, r, truncation, raw)


def extend_basis(basis: FrobeniusBasis, truncation: int) -> FrobeniusBasis:
    if truncation <= basis.truncation:
        return basis
    local = basis.operator if basis.chart == "x" else basis.operator.z_chart()
    r = basis.order
    raw = _frobenius_raw(local, basis.exponent, r, truncation, list(basis.raw))
    return _assemble(basis.operator, local, basis.chart, basis.exponent, r, truncation, raw)


def _frobenius_raw(local: ThetaOperator, rho: Fraction, r: int, truncation: int, raw: list) -> list:
    J = local.x_degree
    if not raw:
        raw.append([Fraction(1)] + [Fraction(0)] * (r - 1))
    for n in range(len(raw), truncation):
        rhs = [Fraction(0)] * r
        for j in range(1, J + 1):
            if n - j < 0:
                break
            Pj = local.P(j)
            if Pj.is_zero():
                continue
            prod = _series_mul(Pj.taylor_at(rho + n - j), raw[n - j], r)
            rhs = [u - v for u, v in zip(rhs, prod)]
        denom = local.P(0).taylor_at(rho + n)
        if denom[0] == 0:
            raise ResonanceError(f"P_0(rho + {n}) = 0 beyond the logarithmic structure")
        raw.append(_series_div(rhs, denom, r))
    return raw


def _assemble(op, local, chart, rho, r, truncation, raw) -> FrobeniusBasis:
    sols = []
    for m in range(r):
        sol = {}
        for i in range(m + 1):
            a = m - i
            scale = Fraction(math.factorial(m), math.factorial(a))
            sol[a] = tuple(scale * c[i] for c in raw)
        sols.append(MappingProxyType(sol))
    flags = {}
    for k in range(1, r):
        reg = sols[k][0]
        flags[f"w{k}_reg_vanishes_to_order_{k}"] = all(reg[n] == 0 for n in range(min(k, len(reg))))
    return FrobeniusBasis(op, chart, rho, truncation, tuple(sols), convergence_radius(local),
                          MappingProxyType(flags), tuple(raw))


def frobenius_residual(basis: FrobeniusBasis, k: int) -> dict[int, list[Fraction]]:
    """Exact image of the truncated w_k under the (chart) operator."""
    local = basis.operator if basis.chart == "x" else basis.operator.z_chart()
    return local.apply_log_series(basis.solutions[k], basis.exponent)


def eval_basis(basis: FrobeniusBasis, point, precision: int, tolerance: float | None = None):
    """Matrix V[m][k] = (theta^m w_k)(point) in the basis chart, with a tail estimate.

    ``point`` is the chart coordinate (x or z).  The principal branch of the
    logarithm is used.  Raises if the point is outside the disk of
    convergence or the tail exceeds ``tolerance``.
    """
    r = basis.order
    with gmpy2.context(precision=precision + 32):
        p = gmpy2.mpc(point) if not isinstance(point, Fraction) else gmpy2.mpc(gmpy2.mpq(point.numerator, point.denominator))
        if abs(complex(p)) >= basis.radius:
            raise OutsideDiskError(f"|{complex(p)}| is outside the convergence radius {basis.radius:.6g}")
        N = basis.truncation
        rho = basis.exponent
        powers = [gmpy2.mpc(1)]
        for _ in range(1, N):
            powers.append(powers[-1] * p)
        logp = gmpy2.log(p)
        prho = gmpy2.mpc(1) if rho == 0 else gmpy2.exp(gmpy2.mpq(rho.numerator, rho.denominator) * logp)
        weights = [gmpy2.mpq(rho + n) for n in range(N)]
        tail = gmpy2.mpfr(0)
        # theta^q F_a for each solution k and log power a
        values = []
        for k in range(r):
            per_a = {}
            for a, coeffs in basis.solutions[k].items():
                terms = [gmpy2.mpq(c.numerator, c.denominator) * powers[n] if c else gmpy2.mpc(0) for n, c in enumerate(coeffs)]
                sums = []
                for q in range(r):
                    sums.append(prho * sum(terms))
                    for n in range(max(0, N - 8), N):
                        tail = max(tail, abs(terms[n]))
                    terms = [t * w for t, w in zip(terms, weights)]
                per_a[a] = sums
            values.append(per_a)
        out = [[gmpy2.mpc(0)] * r for _ in range(r)]
        for k in range(r):
            for m in range(r):
                acc = gmpy2.mpc(0)
                for a, sums in values[k].items():
                    for l in range(min(a, m) + 1):
                        coef = math.comb(m, l) * math.perm(a, l)
                        acc += coef * logp ** (a - l) * sums[m - l]
                out[m][k] = acc
        tail_est = float(tail) * 8 * (1 + abs(complex(logp))) ** max(r - 1, 0) * (N ** (r - 1))
    if tolerance is not None and tail_est > tolerance:
        raise TruncationError(f"tail estimate {tail_est:.3g} exceeds tolerance {tolerance:.3g} at N={basis.truncation}")
    with gmpy2.context(precision=precision):
        out = [[+v for v in row] for row in out]
    return out, tail_est


def adaptive_eval(basis: FrobeniusBasis, point, precision: int, digits: int, max_truncation: int = 1 << 14):
    """Evaluate with N doubled until the tail is below 10**-(digits+15)."""
    tol = 10.0 ** -(digits + 15)
    while True:
        try:
            values, tail = eval_basis(basis, point, precision, tol)
            return basis, values, tail
        except TruncationError:
            if basis.truncation * 2 > max_truncation:
                raise
            basis = extend_basis(basis, basis.truncation * 2)
