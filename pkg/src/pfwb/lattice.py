"""Integral lattices: Smith normal form, discriminant forms, isometry actions, Nikulin criteria."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import sympy

from .data import load_json

IntMatrix = tuple[tuple[int, ...], ...]


class DegenerateLatticeError(ValueError):
    pass


class NotEvenError(ValueError):
    pass


class NotIsometryError(ValueError):
    pass


def _imat(m) -> IntMatrix:
    return tuple(tuple(int(v) for v in row) for row in m)


def _mul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))] for i in range(len(a))]


def _eye(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


# ---------------------------------------------------------------------------
# Smith normal form


def smith_normal_form(m: Sequence[Sequence[int]]) -> tuple[IntMatrix, IntMatrix, IntMatrix]:
    """(U, D, V) with U*m*V = D diagonal, d_i | d_{i+1}, d_i >= 0 and U, V unimodular."""
    A = [list(map(int, row)) for row in m]
    rows, cols = len(A), len(A[0]) if A else 0
    U, V = _eye(rows), _eye(cols)

    def swap_rows(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for M in (A, V):
            for row in M:
                row[i], row[j] = row[j], row[i]

    def add_row(src, dst, f):  # row dst += f * row src
        A[dst] = [a + f * b for a, b in zip(A[dst], A[src])]
        U[dst] = [a + f * b for a, b in zip(U[dst], U[src])]

    def add_col(src, dst, f):
        for M in (A, V):
            for row in M:
                row[dst] += f * row[src]

    for t in range(min(rows, cols)):
        nonzero = [(abs(A[i][j]), i, j) for i in range(t, rows) for j in range(t, cols) if A[i][j]]
        if not nonzero:
            break
        _, i, j = min(nonzero)
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            done = True
            for i in range(t + 1, rows):
                if A[i][t]:
                    q = A[i][t] // A[t][t]
                    add_row(t, i, -q)
                    if A[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, cols):
                if A[t][j]:
                    q = A[t][j] // A[t][t]
                    add_col(t, j, -q)
                    if A[t][j]:
                        swap_cols(t, j)
                        done = False
            if not done:
                continue
            # enforce divisibility of the remaining block by the pivot
            bad = next(((i, j) for i in range(t + 1, rows) for j in range(t + 1, cols) if A[i][j] % A[t][t]), None)
            if bad is None:
                break
            add_row(bad[0], t, 1)
        if A[t][t] < 0:
            A[t] = [-v for v in A[t]]
            U[t] = [-v for v in U[t]]
    return _imat(U), _imat(A), _imat(V)


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True)
class Lattice:
    gram: IntMatrix
    name: str = ""

    def __post_init__(self):
        g = _imat(self.gram)
        if any(g[i][j] != g[j][i] for i in range(len(g)) for j in range(len(g))):
            raise ValueError("Gram matrix must be symmetric")
        object.__setattr__(self, "gram", g)

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def is_even(self) -> bool:
        return all(self.gram[i][i] % 2 == 0 for i in range(self.rank))

    @property
    def det(self) -> int:
        return int(sympy.Matrix(self.gram).det()) if self.rank else 1

    def signature(self) -> tuple[int, int]:
        return inertia(self.gram)[:2]

    def __add__(self, other: "Lattice") -> "Lattice":
        return direct_sum(self, other)


def inertia(gram) -> tuple[int, int, int]:
    """(positive, negative, zero) counts via exact symmetric elimination (congruence)."""
    A = [[Fraction(v) for v in row] for row in gram]
    n = len(A)
    pos = neg = 0
    active = list(range(n))
    while active:
        piv = next((i for i in active if A[i][i] != 0), None)
        if piv is None:
            pair = next(((i, j) for i in active for j in active if i < j and A[i][j] != 0), None)
            if pair is None:
                break
            i, j = pair
            # replace e_i by e_i + e_j, which has nonzero norm 2*A[i][j]
            for k in range(n):
                A[i][k] += A[j][k]
            for k in range(n):
                A[k][i] += A[k][j]
            piv = i
        d = A[piv][piv]
        if d > 0:
            pos += 1
        else:
            neg += 1
        active.remove(piv)
        for i in active:
            f = A[i][piv] / d
            if f:
                for k in range(n):
                    A[i][k] -= f * A[piv][k]
                for k in range(n):
                    A[k][i] -= f * A[k][piv]
    return pos, neg, n - pos - neg


def direct_sum(*lattices: Lattice) -> Lattice:
    n = sum(L.rank for L in lattices)
    g = [[0] * n for _ in range(n)]
    off = 0
    for L in lattices:
        for i in range(L.rank):
            for j in range(L.rank):
                g[off + i][off + j] = L.gram[i][j]
        off += L.rank
    return Lattice(g, " + ".join(L.name or "?" for L in lattices))


def rank_one(k: int) -> Lattice:
    return Lattice([[k]], f"<{k}>")


def _bundled(name: str) -> Lattice:
    doc = load_json("lattices.json")
    for entry in doc["lattices"]:
        if entry["name"] == name:
            return Lattice(entry["gram"], name)
    raise KeyError(name)


def hyperbolic_plane() -> Lattice:
    return _bundled("U")


def e8_negative() -> Lattice:
    return _bundled("E8(-1)")


def k3_lattice() -> Lattice:
    U = hyperbolic_plane()
    E = e8_negative()
    L = direct_sum(E, E, U, U, U)
    return Lattice(L.gram, "L_K3")


def sigma_lattice(n: int) -> Lattice:
    return Lattice([[0, 0, 1], [0, 2 * n, 0], [1, 0, 0]], f"Sigma_{n}")


def lattice_from_json(doc: dict) -> Lattice:
    return Lattice(doc["gram"], doc.get("name", ""))


# ---------------------------------------------------------------------------
# discriminant groups


@dataclass(frozen=True)
class DiscriminantGroup:
    """A_L = L*/L as a product of cyclic groups Z/d_i (only d_i > 1 kept)."""

    lattice: Lattice
    orders: tuple[int, ...]
    lifts: tuple[tuple[Fraction, ...], ...]
    q_values: tuple[Fraction, ...]
    _coord_map: tuple = field(repr=False, default=())

    @property
    def size(self) -> int:
        out = 1
        for d in self.orders:
            out *= d
        return out

    @property
    def length(self) -> int:
        return len(self.orders)

    def coordinates(self, y: Sequence[Fraction]) -> tuple[int, ...]:
        """Coordinates of the class of a dual vector y with respect to the generators."""
        rows, ds = self._coord_map
        out = []
        for row, d in zip(rows, ds):
            v = sum((Fraction(a) * Fraction(b) for a, b in zip(row, y)), Fraction(0))
            if v.denominator != 1:
                raise ValueError("vector is not in the dual lattice")
            if d > 1:
                out.append(int(v) % d)
        return tuple(out)

    def elements(self) -> list[tuple[int, ...]]:
        out = [()]
        for d in self.orders:
            out = [e + (k,) for e in out for k in range(d)]
        return out

    def q(self, coords: Sequence[int]) -> Fraction:
        y = self.vector(coords)
        G = self.lattice.gram
        val = sum((y[i] * G[i][j] * y[j] for i in range(len(y)) for j in range(len(y))), Fraction(0))
        return val % 2

    def vector(self, coords: Sequence[int]) -> list[Fraction]:
        n = self.lattice.rank
        y = [Fraction(0)] * n
        for c, g in zip(coords, self.lifts):
            for i in range(n):
                y[i] += c * g[i]
        return y


def discriminant_group(L: Lattice) -> DiscriminantGroup:
    if L.det == 0:
        raise DegenerateLatticeError(f"lattice {L.name or L.gram} is degenerate")
    U, D, V = smith_normal_form(L.gram)
    n = L.rank
    ds = [D[i][i] for i in range(n)]
    lifts, qs = [], []
    for i, d in enumerate(ds):
        if d > 1:
            g = tuple(Fraction(V[k][i], d) for k in range(n))
            lifts.append(g)
            qs.append(sum((g[a] * L.gram[a][b] * g[b] for a in range(n) for b in range(n)), Fraction(0)) % 2)
    # y = V D^-1 k  =>  k = D V^-1 y
    Vinv = sympy.Matrix(V).inv()
    rows = tuple(tuple(Fraction(int(ds[i] * Vinv[i, k])) for k in range(n)) for i in range(n))
    return DiscriminantGroup(L, tuple(d for d in ds if d > 1), tuple(lifts), tuple(qs), (rows, tuple(ds)))


@dataclass(frozen=True)
class DiscAction:
    images: tuple[tuple[int, ...], ...]
    is_trivial: bool
    permutation: tuple[int, ...]


def is_isometry(L: Lattice, M) -> bool:
    M = _imat(M)
    if len(M) != L.rank:
        return False
    Mt = [list(r) for r in zip(*M)]
    return _imat(_mul(_mul(Mt, L.gram), M)) == L.gram


def induced_disc_action(L: Lattice, M, group: DiscriminantGroup | None = None) -> DiscAction:
    """Action y -> M y of an isometry on A_L (column-vector convention)."""
    if not is_isometry(L, M):
        raise NotIsometryError("matrix does not preserve the Gram matrix")
    A = group or discriminant_group(L)
    M = _imat(M)
    n = L.rank

    def act(y):
        return [sum((M[i][k] * y[k] for k in range(n)), Fraction(0)) for i in range(n)]

    images = tuple(A.coordinates(act(g)) for g in A.lifts)
    gens = tuple(tuple(int(i == j) for j in range(A.length)) for i in range(A.length))
    elems = A.elements()
    index = {e: k for k, e in enumerate(elems)}
    perm = []
    for e in elems:
        img = tuple(sum(c * im[j] for c, im in zip(e, images)) % d for j, d in enumerate(A.orders))
        perm.append(index[img])
    return DiscAction(images, images == gens, tuple(perm))


def disc_action_group_order(L: Lattice, matrices: Sequence) -> int:
    """Order of the group of permutations of A_L generated by the given isometries."""
    A = discriminant_group(L)
    gens = [induced_disc_action(L, M, A).permutation for M in matrices]
    identity = tuple(range(A.size))
    seen = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                comp = tuple(g[i] for i in p)
                if comp not in seen:
                    seen.add(comp)
                    nxt.append(comp)
        frontier = nxt
    return len(seen)


# ---------------------------------------------------------------------------
# Nikulin-type criteria


@dataclass(frozen=True)
class Verdict:
    holds: bool
    hypotheses: tuple[tuple[str, bool, str], ...]

    def to_json(self) -> dict:
        return {"holds": self.holds, "hypotheses": [{"name": n, "holds": h, "detail": d} for n, h, d in self.hypotheses]}


def nikulin_hypotheses(L: Lattice, M: Lattice | None = None, mode: str = "surjectivity") -> Verdict:
    """Check the hypotheses of the surjectivity O(L) -> O(A_L) criterion or of unique primitive embedding M -> L."""
    hyps = []
    if mode == "surjectivity":
        if not L.is_even:
            raise NotEvenError("surjectivity criterion needs an even lattice")
        pos, neg = L.signature()
        ell = discriminant_group(L).length
        hyps.append(("indefinite", pos > 0 and neg > 0, f"signature ({pos},{neg})"))
        hyps.append(("rk L >= 2 + l(A_L)", L.rank >= 2 + ell, f"{L.rank} >= 2 + {ell}"))
    elif mode == "unique_embedding":
        if M is None:
            raise ValueError("unique_embedding needs the sublattice M")
        if not L.is_even or not M.is_even:
            raise NotEvenError("unique embedding criterion needs even lattices")
        lp, ln = L.signature()
        mp, mn = M.signature()
        ell = discriminant_group(M).length
        hyps.append(("L unimodular", abs(L.det) == 1, f"det L = {L.det}"))
        hyps.append(("rk L - rk M >= 2 + l(A_M)", L.rank - M.rank >= 2 + ell, f"{L.rank - M.rank} >= 2 + {ell}"))
        hyps.append(("l+ - m+ > 0", lp - mp > 0, f"{lp} - {mp} > 0"))
        hyps.append(("l- - m- > 0", ln - mn > 0, f"{ln} - {mn} > 0"))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return Verdict(all(h for _, h, _ in hyps), tuple(hyps))


def fm_count_picard_one(n: int) -> int:
    """Number of Fourier-Mukai partners of a Picard-rank-one K3 of degree 2n: 2**(p(n)-1), p(1) = 1."""
    if n < 1:
        raise ValueError("n must be positive")
    p = 1 if n == 1 else len(sympy.primefactors(n))
    return 2 ** (p - 1)
