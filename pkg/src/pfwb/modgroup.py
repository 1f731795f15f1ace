"""Exact 2x2 matrices over Q(sqrt2, sqrt3), the Fricke-extended level-6 group and its map R into SO(2,1)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exact import SQRT2, SQRT6, QuadExt
from .lattice import disc_action_group_order, induced_disc_action, sigma_lattice

SIGMA6 = ((0, 0, 1), (0, 12, 0), (1, 0, 0))


@dataclass(frozen=True)
class Mat2Q23:
    a: QuadExt
    b: QuadExt
    c: QuadExt
    d: QuadExt

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, QuadExt.coerce(getattr(self, name)))
        if self.det() != QuadExt(1):
            raise ValueError(f"determinant {self.det()} is not 1")

    def det(self) -> QuadExt:
        return self.a * self.d - self.b * self.c

    def __mul__(self, other: "Mat2Q23") -> "Mat2Q23":
        return Mat2Q23(self.a * other.a + self.b * other.c, self.a * other.b + self.b * other.d,
                       self.c * other.a + self.d * other.c, self.c * other.b + self.d * other.d)

    def __neg__(self) -> "Mat2Q23":
        return Mat2Q23(-self.a, -self.b, -self.c, -self.d)

    def inverse(self) -> "Mat2Q23":
        return Mat2Q23(self.d, -self.b, -self.c, self.a)

    def trace(self) -> QuadExt:
        return self.a + self.d

    def normalized(self) -> "Mat2Q23":
        """Representative of {g, -g} with positive trace (unchanged when the trace is 0)."""
        return -self if float(self.trace()) < 0 else self

    def rows(self):
        return ((self.a, self.b), (self.c, self.d))

    def __str__(self):
        return f"[[{self.a}, {self.b}], [{self.c}, {self.d}]]"


IDENTITY = Mat2Q23(1, 0, 0, 1)


def generator(name: str) -> Mat2Q23:
    if name == "T0":
        return Mat2Q23(1, 1, 0, 1)
    if name == "S1":
        return Mat2Q23(0, -(SQRT6 * Fraction(1, 6)), SQRT6, 0)
    if name == "S2":
        return Mat2Q23(-SQRT2, SQRT2 * Fraction(1, 2), -3 * SQRT2, SQRT2)
    raise KeyError(f"unknown generator {name!r}; expected T0, S1 or S2")


def word(names: Sequence[str]) -> Mat2Q23:
    """Product of generators; a trailing ``^-1`` inverts one factor (e.g. ``T0^-1``)."""
    out = IDENTITY
    for n in names:
        g = generator(n[:-3]).inverse() if n.endswith("^-1") else generator(n)
        out = out * g
    return out


def r_map(g: Mat2Q23) -> tuple[tuple[QuadExt, ...], ...]:
    a, b, c, d = g.a, g.b, g.c, g.d
    sixth = Fraction(1, 6)
    return (
        (a * a, -2 * a * c, -(c * c) * sixth),
        (-(a * b), a * d + b * c, c * d * sixth),
        (-6 * b * b, 12 * b * d, d * d),
    )


def qmat_mul(x, y):
    n, m = len(x), len(y[0])
    return tuple(tuple(sum((x[i][k] * y[k][j] for k in range(len(y))), QuadExt(0)) for j in range(m)) for i in range(n))


def to_integer_matrix(m, sign: int = 1) -> tuple[tuple[int, ...], ...]:
    """Exact conversion; raises if any entry is not a rational integer."""
    out = []
    for row in m:
        r = []
        for v in row:
            q = QuadExt.coerce(v)
            if not q.is_rational() or q.a.denominator != 1:
                raise ValueError(f"entry {q} is not an integer")
            r.append(sign * int(q.a))
        out.append(tuple(r))
    return tuple(out)


def preserves_sigma6(m) -> bool:
    mt = tuple(zip(*m))
    return qmat_mul(qmat_mul(mt, SIGMA6), m) == tuple(tuple(QuadExt(v) for v in row) for row in SIGMA6)


def r_identities(table: dict) -> list[dict]:
    """Check M0 = R(T0^-1), Ma1 = -R(S1), Ma2 = -R(S2 S1 S2), U = R(S1 S2) and the anti-homomorphism property."""
    T0, S1, S2 = generator("T0"), generator("S1"), generator("S2")
    cases = [
        ("M0 = R(T0^-1)", "M0", T0.inverse(), 1),
        ("Ma1 = -R(S1)", "Ma1", S1, -1),
        ("Ma2 = -R(S2*S1*S2)", "Ma2", S2 * S1 * S2, -1),
        ("U = R(S1*S2)", "U", S1 * S2, 1),
    ]
    out = []
    for label, name, g, sign in cases:
        got = to_integer_matrix(r_map(g), sign)
        expected = tuple(tuple(v) for v in table[name])
        out.append({"identity": label, "pass": got == expected, "computed": [list(r) for r in got]})
    anti = qmat_mul(r_map(S2), r_map(S1)) == r_map(S1 * S2)
    out.append({"identity": "R(S1*S2) = R(S2)*R(S1)", "pass": anti})
    inv = to_integer_matrix(qmat_mul(r_map(S1), r_map(S1)))
    out.append({"identity": "(-R(S1))^2 = I", "pass": inv == ((1, 0, 0), (0, 1, 0), (0, 0, 1))})
    return out


def disc_action_trivial_up_to_sign(m) -> tuple[bool, bool]:
    """(trivial for +m, trivial for -m) on the discriminant group of Sigma_6."""
    L = sigma_lattice(6)
    plus = to_integer_matrix(m)
    minus = to_integer_matrix(m, -1)
    return induced_disc_action(L, plus).is_trivial, induced_disc_action(L, minus).is_trivial


def disc_image_order(matrices: Sequence) -> int:
    """Order of the image in Aut(A_{Sigma_6}) of the group generated by integer Sigma_6-isometries."""
    return disc_action_group_order(sigma_lattice(6), [to_integer_matrix(m) if not isinstance(m[0][0], int) else m for m in matrices])
