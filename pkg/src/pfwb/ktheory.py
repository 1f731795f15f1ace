"""Mukai vectors (r, d, s) on a degree-2n K3 surface and the Euler pairing."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .exact import solve_rational


class ContextMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class MukaiVector:
    """r + d*h + s*[pt] with h^2 = 2n."""

    r: int
    d: int
    s: int
    n: int

    def __add__(self, other: "MukaiVector") -> "MukaiVector":
        _same_context(self, other)
        return MukaiVector(self.r + other.r, self.d + other.d, self.s + other.s, self.n)

    def __neg__(self) -> "MukaiVector":
        return MukaiVector(-self.r, -self.d, -self.s, self.n)

    def __mul__(self, k: int) -> "MukaiVector":
        return MukaiVector(k * self.r, k * self.d, k * self.s, self.n)

    __rmul__ = __mul__

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.r, self.d, self.s)


def _same_context(u: MukaiVector, v: MukaiVector) -> None:
    if u.n != v.n:
        raise ContextMismatchError(f"degree mismatch: 2*{u.n} vs 2*{v.n}")


def mukai_pairing(u: MukaiVector, v: MukaiVector) -> int:
    """<u, v> = 2n d_u d_v - r_u s_v - s_u r_v, which equals -chi(u, v)."""
    _same_context(u, v)
    return 2 * u.n * u.d * v.d - u.r * v.s - u.s * v.r


def chern_character(symbol: str, n: int) -> tuple[Fraction, Fraction, Fraction]:
    """(ch_0, ch_1 in units of h, ch_2 in units of [pt])."""
    if symbol == "O_x":
        return (Fraction(0), Fraction(0), Fraction(1))
    if symbol == "O_X":
        return (Fraction(1), Fraction(0), Fraction(0))
    if symbol == "I_x":
        return (Fraction(1), Fraction(0), Fraction(-1))
    if symbol == "O_h_plus_nO_x":
        # ch(O_h) = h - (h^2/2)[pt] = h - n[pt]; adding n points cancels it
        return (Fraction(0), Fraction(1), Fraction(0))
    raise KeyError(f"unsupported sheaf symbol {symbol!r}")


SQRT_TD = (1, 0, 1)  # sqrt(td) of a K3 surface: 1 + [pt]


def mukai_vector_of(symbol: str, n: int) -> MukaiVector:
    """v = ch * sqrt(td); ``O_h_plus_6O_x`` is accepted as the n = 6 spelling of ``O_h_plus_nO_x``."""
    if symbol == "O_h_plus_6O_x":
        if n != 6:
            raise ValueError("O_h + 6 O_x has Mukai vector (0,1,0) only on a degree-12 K3; use O_h_plus_nO_x")
        symbol = "O_h_plus_nO_x"
    c0, c1, c2 = chern_character(symbol, n)
    # (c0 + c1 h + c2 pt)(1 + pt) = c0 + c1 h + (c2 + c0) pt
    s = c2 + c0 * SQRT_TD[2]
    return MukaiVector(int(c0), int(c1), int(s), n)


def k3_basis(n: int = 6) -> tuple[MukaiVector, MukaiVector, MukaiVector]:
    """([O_x], [O_h] + n[O_x], -[I_x]) whose Gram matrix is Sigma_n."""
    return (mukai_vector_of("O_x", n), mukai_vector_of("O_h_plus_nO_x", n), -mukai_vector_of("I_x", n))


def gram_matrix(vectors: Sequence[MukaiVector]) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(mukai_pairing(u, v) for v in vectors) for u in vectors)


def decompose_in_basis(v: MukaiVector, basis: Sequence[MukaiVector]) -> tuple[int, ...]:
    """Integer coefficients c with v = sum c_i basis_i."""
    for b in basis:
        _same_context(v, b)
    mat = [[Fraction(b.as_tuple()[row]) for b in basis] for row in range(3)]
    try:
        coeffs = solve_rational(mat, [Fraction(x) for x in v.as_tuple()])
    except ZeroDivisionError as exc:
        raise ValueError("basis does not span") from exc
    if any(c.denominator != 1 for c in coeffs):
        raise ValueError(f"{v.as_tuple()} is not an integral combination of the basis: {coeffs}")
    return tuple(int(c) for c in coeffs)
