"""Exact number types and univariate rational polynomials.

Rationals are :class:`fractions.Fraction`.  Elements of Q(sqrt2, sqrt3) are
:class:`QuadExt`.  High-precision complex values are ``gmpy2.mpc`` objects;
every routine that produces them takes an explicit precision in bits and works
inside its own gmpy2 context, so nothing here touches global state.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Sequence

import gmpy2

Rational = Fraction
PrecComplex = gmpy2.mpc

DEFAULT_PRECISION = 384


def bits_for_digits(digits: int) -> int:
    return max(64, math.ceil(digits * 3.33))


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, QuadExt):
        if not value.is_rational():
            raise ValueError(f"{value} is not rational")
        return value.a
    if isinstance(value, type(gmpy2.mpq())):
        return Fraction(int(value.numerator), int(value.denominator))
    raise TypeError(f"cannot convert {type(value).__name__} to Fraction")


def as_mpc(value, precision: int) -> gmpy2.mpc:
    """Promote an exact or floating value to an mpc at ``precision`` bits."""
    with gmpy2.context(precision=precision):
        if isinstance(value, Fraction):
            return gmpy2.mpc(gmpy2.mpq(value.numerator, value.denominator))
        if isinstance(value, QuadExt):
            return value.evaluate(precision)
        if isinstance(value, complex):
            return gmpy2.mpc(value)
        return gmpy2.mpc(value)


# ---------------------------------------------------------------------------
# Q(sqrt2, sqrt3)


class QuadExt:
    """a + b*sqrt2 + c*sqrt3 + d*sqrt6 with rational a, b, c, d."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a=0, b=0, c=0, d=0):
        object.__setattr__(self, "a", to_fraction(a))
        object.__setattr__(self, "b", to_fraction(b))
        object.__setattr__(self, "c", to_fraction(c))
        object.__setattr__(self, "d", to_fraction(d))

    def __setattr__(self, name, value):
        raise AttributeError("QuadExt is immutable")

    @classmethod
    def coerce(cls, value) -> "QuadExt":
        if isinstance(value, QuadExt):
            return value
        return cls(to_fraction(value))

    @property
    def coords(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.a, self.b, self.c, self.d)

    def is_rational(self) -> bool:
        return self.b == 0 and self.c == 0 and self.d == 0

    def is_zero(self) -> bool:
        return self.a == 0 and self.is_rational()

    def __add__(self, other):
        try:
            o = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return QuadExt(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(-self.a, -self.b, -self.c, -self.d)

    def __sub__(self, other):
        try:
            o = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return QuadExt.coerce(other) - self

    def __mul__(self, other):
        try:
            o = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return qext_mul(self, o)

    __rmul__ = __mul__

    def inverse(self) -> "QuadExt":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero in Q(sqrt2, sqrt3)")
        # columns: self * basis element, expressed in the basis
        basis = [QuadExt(1), QuadExt(0, 1), QuadExt(0, 0, 1), QuadExt(0, 0, 0, 1)]
        cols = [(self * e).coords for e in basis]
        mat = [[cols[j][i] for j in range(4)] for i in range(4)]
        sol = solve_rational(mat, [Fraction(1), Fraction(0), Fraction(0), Fraction(0)])
        return QuadExt(*sol)

    def __truediv__(self, other):
        try:
            o = QuadExt.coerce(other)
        except TypeError:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return QuadExt.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        result, base = QuadExt(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        try:
            o = QuadExt.coerce(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.coords == o.coords

    def __hash__(self):
        if self.is_rational():
            return hash(self.a)
        return hash(self.coords)

    def conjugate2(self) -> "QuadExt":
        """Image under sqrt2 -> -sqrt2."""
        return QuadExt(self.a, -self.b, self.c, -self.d)

    def evaluate(self, precision: int) -> gmpy2.mpc:
        return qext_eval(self, precision)

    def __float__(self):
        return float(self.a) + float(self.b) * math.sqrt(2) + float(self.c) * math.sqrt(3) + float(self.d) * math.sqrt(6)

    def __repr__(self):
        return f"QuadExt({self.a}, {self.b}, {self.c}, {self.d})"

    def __str__(self):
        parts = []
        for coef, name in zip(self.coords, ("", "√2", "√3", "√6")):
            if coef == 0:
                continue
            if name and abs(coef) == 1:
                parts.append(("-" if coef < 0 else "+") + name)
            else:
                parts.append(f"{'+' if coef > 0 else '-'}{abs(coef)}{name}")
        if not parts:
            return "0"
        text = "".join(parts)
        return text[1:] if text.startswith("+") else text


SQRT2 = QuadExt(0, 1)
SQRT3 = QuadExt(0, 0, 1)
SQRT6 = QuadExt(0, 0, 0, 1)


def qext_mul(x: QuadExt, y: QuadExt) -> QuadExt:
    a, b, c, d = x.coords
    e, f, g, h = y.coords
    return QuadExt(
        a * e + 2 * b * f + 3 * c * g + 6 * d * h,
        a * f + b * e + 3 * (c * h + d * g),
        a * g + c * e + 2 * (b * h + d * f),
        a * h + d * e + b * g + c * f,
    )


def qext_eval(x: QuadExt, precision: int = DEFAULT_PRECISION) -> gmpy2.mpc:
    """Numerical value of ``x`` with absolute error below 2**(-precision+4)."""
    if precision < 64:
        raise ValueError("precision must be at least 64 bits")
    x = QuadExt.coerce(x)
    work = precision + 16 + max(0, max(abs(q).numerator.bit_length() for q in x.coords))
    with gmpy2.context(precision=work):
        total = gmpy2.mpfr(0)
        for coef, radicand in zip(x.coords, (1, 2, 3, 6)):
            if coef == 0:
                continue
            term = gmpy2.mpq(coef.numerator, coef.denominator)
            if radicand != 1:
                term = term * gmpy2.sqrt(gmpy2.mpfr(radicand))
            total += term
    with gmpy2.context(precision=precision):
        return gmpy2.mpc(+total)


def sqrt_in_qext(q: Fraction) -> QuadExt | None:
    """Square root of a rational inside Q(sqrt2, sqrt3), or None."""
    q = to_fraction(q)
    if q < 0:
        return None
    if q == 0:
        return QuadExt(0)
    num, den = q.numerator, q.denominator
    # sqrt(num/den) = sqrt(num*den)/den
    n = num * den
    for k, radicand in enumerate((1, 2, 3, 6)):
        if n % radicand:
            continue
        r = math.isqrt(n // radicand)
        if r * r * radicand == n:
            coords = [0, 0, 0, 0]
            coords[k] = Fraction(r, den)
            return QuadExt(*coords)
    return None


def solve_rational(mat: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> list[Fraction]:
    n = len(mat)
    rows = [[to_fraction(v) for v in row] + [to_fraction(b)] for row, b in zip(mat, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular rational system")
        rows[col], rows[piv] = rows[piv], rows[col]
        p = rows[col][col]
        rows[col] = [v / p for v in rows[col]]
        for r in range(n):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [u - f * v for u, v in zip(rows[r], rows[col])]
    return [rows[i][n] for i in range(n)]


# ---------------------------------------------------------------------------
# univariate polynomials over Q


class RatPoly:
    """Polynomial with Fraction coefficients; ``coeffs[k]`` multiplies x**k."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [to_fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    def __setattr__(self, name, value):
        raise AttributeError("RatPoly is immutable")

    @classmethod
    def const(cls, c) -> "RatPoly":
        return cls([c])

    @classmethod
    def monomial(cls, k: int, c=1) -> "RatPoly":
        return cls([0] * k + [c])

    @classmethod
    def coerce(cls, value) -> "RatPoly":
        if isinstance(value, RatPoly):
            return value
        return cls([value])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading(self) -> Fraction:
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    def coeff(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def __add__(self, other):
        o = RatPoly.coerce(other)
        n = max(len(self.coeffs), len(o.coeffs))
        return RatPoly(self.coeff(k) + o.coeff(k) for k in range(n))

    __radd__ = __add__

    def __neg__(self):
        return RatPoly(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-RatPoly.coerce(other))

    def __rsub__(self, other):
        return RatPoly.coerce(other) - self

    def __mul__(self, other):
        o = RatPoly.coerce(other)
        if self.is_zero() or o.is_zero():
            return RatPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(o.coeffs):
                out[i + j] += a * b
        return RatPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        result = RatPoly.const(1)
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other):
        if isinstance(other, RatPoly):
            return self.coeffs == other.coeffs
        try:
            return self.coeffs == RatPoly.coerce(other).coeffs
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __call__(self, x):
        """Horner evaluation; works for any ring element that mixes with Fraction."""
        if isinstance(x, (gmpy2.mpc, gmpy2.mpfr)):
            acc = x * 0
            for c in reversed(self.coeffs):
                acc = acc * x + gmpy2.mpq(c.numerator, c.denominator)
            return acc
        acc = Fraction(0) if not isinstance(x, QuadExt) else QuadExt(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self) -> "RatPoly":
        return RatPoly(k * c for k, c in enumerate(self.coeffs) if k > 0)

    def shift(self, c) -> "RatPoly":
        """p(x + c) for rational c."""
        c = to_fraction(c)
        result = RatPoly()
        for coef in reversed(self.coeffs):
            result = result * RatPoly([c, 1]) + coef
        return result

    def taylor_at(self, point) -> list:
        """Coefficients of p(point + t) in t; ``point`` may be any exact ring element."""
        out = []
        p = self
        fact = 1
        for k in range(len(self.coeffs)):
            out.append(p(point) * Fraction(1, fact))
            p = p.derivative()
            fact *= k + 1
        return out

    def compose_neg(self) -> "RatPoly":
        """p(-x)."""
        return RatPoly(c if k % 2 == 0 else -c for k, c in enumerate(self.coeffs))

    def divmod(self, other: "RatPoly") -> tuple["RatPoly", "RatPoly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        quot = [Fraction(0)] * max(0, len(rem) - len(other.coeffs) + 1)
        lead = other.leading
        dq = other.degree
        for k in range(len(rem) - 1, dq - 1, -1):
            f = rem[k] / lead
            quot[k - dq] = f
            if f:
                for j, b in enumerate(other.coeffs):
                    rem[k - dq + j] -= f * b
        return RatPoly(quot), RatPoly(rem[:dq] if dq > 0 else [])

    def monic(self) -> "RatPoly":
        return RatPoly(c / self.leading for c in self.coeffs)

    def gcd(self, other: "RatPoly") -> "RatPoly":
        a, b = self, other
        while not b.is_zero():
            a, b = b, a.divmod(b)[1]
        return a.monic() if not a.is_zero() else a

    def rational_roots(self) -> list[Fraction]:
        """Distinct rational roots (rational root theorem on the integer-scaled poly)."""
        if self.is_zero():
            raise ValueError("zero polynomial has every root")
        cs = list(self.coeffs)
        roots = []
        if cs[0] == 0:
            roots.append(Fraction(0))
            while cs and cs[0] == 0:
                cs.pop(0)
        if len(cs) <= 1:
            return roots
        lcm = 1
        for c in cs:
            lcm = lcm * c.denominator // math.gcd(lcm, c.denominator)
        ints = [int(c * lcm) for c in cs]
        p0, pn = abs(ints[0]), abs(ints[-1])
        poly = RatPoly(ints)
        for num in _divisors(p0):
            for den in _divisors(pn):
                for sign in (1, -1):
                    r = Fraction(sign * num, den)
                    if r not in roots and poly(r) == 0:
                        roots.append(r)
        return sorted(roots)

    def multiplicity(self, root) -> int:
        m, p = 0, self
        while not p.is_zero() and p(root) == 0:
            m += 1
            p = p.derivative()
        return m

    def __repr__(self):
        return f"RatPoly({[str(c) for c in self.coeffs]})"

    def pretty(self, var: str = "x") -> str:
        if self.is_zero():
            return "0"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
            mag = abs(c)
            body = mono if (mag == 1 and mono) else (f"{mag}*{mono}" if mono else f"{mag}")
            terms.append(("- " if c < 0 else "+ ") + body)
        text = " ".join(terms)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]


def _divisors(n: int) -> list[int]:
    n = abs(n)
    if n == 0:
        return [0]
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def stirling2(n: int, k: int) -> int:
    """Stirling numbers of the second kind, via the usual triangle."""
    return _stirling_row(n)[k] if 0 <= k <= n else 0


_STIRLING_CACHE: dict[int, tuple[int, ...]] = {0: (1,)}


def _stirling_row(n: int) -> tuple[int, ...]:
    if n not in _STIRLING_CACHE:
        prev = _stirling_row(n - 1)
        row = [0] * (n + 1)
        for k in range(1, n + 1):
            row[k] = (k * prev[k] if k < len(prev) else 0) + prev[k - 1]
        _STIRLING_CACHE[n] = tuple(row)
    return _STIRLING_CACHE[n]
