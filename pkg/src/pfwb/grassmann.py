"""Plücker relations of G(3,6) in the double-spin coordinates (v, w), and the special symmetroid determinant."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import sympy
from sympy.ntheory import sqrt_mod

from .data import load_json

INDEX2 = tuple(itertools.combinations(range(1, 5), 2))


class NotSquareError(ValueError):
    pass


class NotOnVarietyError(ValueError):
    pass


def epsilon(I: Sequence[int], J: Sequence[int]) -> int:
    """Sign of the permutation (i1, i2, j1, j2) of (1, 2, 3, 4); I and J must be disjoint."""
    perm = list(I) + list(J)
    if sorted(perm) != [1, 2, 3, 4]:
        raise ValueError(f"index pairs {tuple(I)} and {tuple(J)} overlap")
    inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
    return -1 if inversions % 2 else 1


def dual(I: Sequence[int]) -> tuple[int, int]:
    return tuple(k for k in range(1, 5) if k not in I)


# ---------------------------------------------------------------------------
# fields


class RationalField:
    name = "Q"

    def __call__(self, v):
        return Fraction(v)

    def inv(self, a):
        return 1 / a

    def sqrt(self, a):
        a = Fraction(a)
        if a < 0:
            return None
        n, d = sympy.integer_nthroot(a.numerator, 2), sympy.integer_nthroot(a.denominator, 2)
        return Fraction(int(n[0]), int(d[0])) if n[1] and d[1] else None

    def random(self, rng: random.Random):
        return Fraction(rng.randint(-9, 9))


class PrimeField:
    def __init__(self, p: int):
        if p < 3 or not sympy.isprime(p):
            raise ValueError("p must be an odd prime")
        self.p = p
        self.name = f"F_{p}"

    def __call__(self, v):
        if isinstance(v, Fraction):
            return v.numerator * pow(v.denominator, -1, self.p) % self.p
        return int(v) % self.p

    def inv(self, a):
        return pow(int(a), -1, self.p)

    def sqrt(self, a):
        a %= self.p
        if a == 0:
            return 0
        r = sqrt_mod(a, self.p)
        return None if r is None else int(r)

    def random(self, rng: random.Random):
        return rng.randrange(self.p)


def _norm(F, x):
    return x % F.p if isinstance(F, PrimeField) else x


def matmul(F, a, b):
    return [[_norm(F, sum(a[i][k] * b[k][j] for k in range(4))) for j in range(4)] for i in range(4)]


def det4(F, m):
    """Determinant by cofactor expansion along the first row (exact in any commutative ring)."""
    def d3(x):
        return (x[0][0] * (x[1][1] * x[2][2] - x[1][2] * x[2][1]) - x[0][1] * (x[1][0] * x[2][2] - x[1][2] * x[2][0])
                + x[0][2] * (x[1][0] * x[2][1] - x[1][1] * x[2][0]))
    total = 0
    for j in range(4):
        minor = [[m[i][k] for k in range(4) if k != j] for i in range(1, 4)]
        total += (-1) ** j * m[0][j] * d3(minor)
    return _norm(F, total)


def minor2(m, I, J):
    (i1, i2), (j1, j2) = I, J
    return m[i1 - 1][j1 - 1] * m[i2 - 1][j2 - 1] - m[i1 - 1][j2 - 1] * m[i2 - 1][j1 - 1]


def rank(F, m) -> int:
    rows = [list(map(F, r)) for r in m]
    r = 0
    for col in range(len(rows[0])):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = F.inv(rows[r][col])
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f = rows[i][col] * inv
                rows[i] = [_norm(F, a - f * b) for a, b in zip(rows[i], rows[r])]
        r += 1
    return r


def inverse4(F, m):
    aug = [list(map(F, row)) + [F(int(i == j)) for j in range(4)] for i, row in enumerate(m)]
    for col in range(4):
        piv = next((i for i in range(col, 4) if aug[i][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = F.inv(aug[col][col])
        aug[col] = [_norm(F, v * inv) for v in aug[col]]
        for i in range(4):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [_norm(F, a - f * b) for a, b in zip(aug[i], aug[col])]
    return [row[4:] for row in aug]


# ---------------------------------------------------------------------------
# the ideal


@dataclass(frozen=True)
class SymmetricPair:
    v: tuple
    w: tuple

    def __post_init__(self):
        for name in ("v", "w"):
            m = tuple(tuple(r) for r in getattr(self, name))
            if any(m[i][j] != m[j][i] for i in range(4) for j in range(4)):
                raise ValueError(f"{name} is not symmetric")
            object.__setattr__(self, name, m)


def plucker_generators(p: SymmetricPair, F=None) -> list:
    """21 minor relations, 12 off-diagonal entries of v.w and 3 diagonal differences."""
    F = F or RationalField()
    v, w = p.v, p.w
    out = []
    for a, I in enumerate(INDEX2):
        for J in INDEX2[a:]:
            Id, Jd = dual(I), dual(J)
            out.append(_norm(F, minor2(v, I, J) - epsilon(I, Id) * epsilon(J, Jd) * minor2(w, Id, Jd)))
    vw = matmul(F, v, w)
    out.extend(vw[i][j] for i in range(4) for j in range(4) if i != j)
    out.extend(_norm(F, vw[i][i] - vw[i + 1][i + 1]) for i in range(3))
    return out


def on_variety(p: SymmetricPair, F=None) -> bool:
    return all(g == 0 for g in plucker_generators(p, F))


def generic_point(w, sign: int = 1, F=None) -> SymmetricPair:
    """(sign * s * w^-1, w) with s**2 = det w."""
    F = F or RationalField()
    w = [[F(x) for x in row] for row in w]
    d = det4(F, w)
    if d == 0:
        raise ZeroDivisionError("w is singular")
    s = F.sqrt(d)
    if s is None:
        raise NotSquareError(f"det w = {d} is not a square in {F.name}")
    winv = inverse4(F, w)
    v = [[_norm(F, sign * s * x) for x in row] for row in winv]
    return SymmetricPair(v, w)


@dataclass(frozen=True)
class ConsequenceReport:
    det_equal: bool
    product_scalar: bool
    no_rank_three: bool
    rank_two_iff: bool
    rank_le_one_iff: bool
    ranks: tuple[int, int]

    @property
    def all_hold(self) -> bool:
        return self.det_equal and self.product_scalar and self.no_rank_three and self.rank_two_iff and self.rank_le_one_iff


def consequence_check(p: SymmetricPair, F=None) -> ConsequenceReport:
    F = F or RationalField()
    if not on_variety(p, F):
        raise NotOnVarietyError("pair does not satisfy the Plücker relations")
    dv, dw = det4(F, p.v), det4(F, p.w)
    vw = matmul(F, p.v, p.w)
    lam = vw[0][0]
    scalar = all(vw[i][j] == (lam if i == j else 0) for i in range(4) for j in range(4))
    squared = _norm(F, lam * lam - dw) == 0
    rv, rw = rank(F, p.v), rank(F, p.w)
    return ConsequenceReport(
        det_equal=dv == dw,
        product_scalar=scalar and squared,
        no_rank_three=rv != 3 and rw != 3,
        rank_two_iff=(rv == 2) == (rw == 2),
        rank_le_one_iff=(rv <= 1) == (rw <= 1),
        ranks=(rv, rw),
    )


def random_symmetric(F, rng: random.Random, target_rank: int | None = None):
    """Random symmetric 4x4 matrix; with ``target_rank`` it is g^T diag(d1..dk, 0..) g for invertible g."""
    if target_rank is None:
        m = [[0] * 4 for _ in range(4)]
        for i in range(4):
            for j in range(i, 4):
                m[i][j] = m[j][i] = F.random(rng)
        return m
    while True:
        g = [[F.random(rng) for _ in range(4)] for _ in range(4)]
        if det4(F, g) != 0:
            break
    diag = []
    for k in range(4):
        if k < target_rank:
            d = F(0)
            while d == 0:
                d = F.random(rng)
            diag.append(d)
        else:
            diag.append(F(0))
    gt = [list(r) for r in zip(*g)]
    return matmul(F, gt, [[_norm(F, diag[i] * g[i][j]) for j in range(4)] for i in range(4)])


def random_square_det_symmetric(F, rng: random.Random):
    """Invertible symmetric w whose determinant is a square in F (g^T g over Q, rejection over F_p)."""
    while True:
        if isinstance(F, PrimeField):
            w = random_symmetric(F, rng)
        else:
            g = [[F.random(rng) for _ in range(4)] for _ in range(4)]
            w = matmul(F, [list(r) for r in zip(*g)], g)
        d = det4(F, w)
        if d != 0 and F.sqrt(d) is not None:
            return w


@dataclass(frozen=True)
class GenericCheck:
    field: str
    count: int
    generators_vanish: int
    consequences_hold: int

    @property
    def passed(self) -> bool:
        return self.generators_vanish == self.count and self.consequences_hold == self.count

    def to_json(self) -> dict:
        return {"field": self.field, "points": self.count, "generators_vanish": self.generators_vanish,
                "consequences_hold": self.consequences_hold, "pass": self.passed}


def generic_check(F, count: int = 1000, seed: int = 0) -> GenericCheck:
    """Sample generic points (s w^-1, w) with both signs and test the ideal and its consequences."""
    rng = random.Random(seed)
    vanish = hold = 0
    for k in range(count):
        pair = generic_point(random_square_det_symmetric(F, rng), 1 if k % 2 == 0 else -1, F)
        if on_variety(pair, F):
            vanish += 1
            hold += consequence_check(pair, F).all_hold
    return GenericCheck(F.name, count, vanish, hold)


# ---------------------------------------------------------------------------
# searches over prime fields

_SYM_INDEX = [(i, j) for i in range(4) for j in range(i, 4)]


def _linear_constraints(F, v):
    """Rows of the map from the 10 entries of symmetric w to (off-diagonal v.w, diagonal differences)."""
    def entry_coeffs(i, j):
        # (v.w)_{ij} = sum_k v_ik w_kj
        row = [0] * 10
        for k in range(4):
            a, b = (k, j) if k <= j else (j, k)
            row[_SYM_INDEX.index((a, b))] += v[i][k]
        return row

    rows = [entry_coeffs(i, j) for i in range(4) for j in range(4) if i != j]
    for i in range(3):
        r1, r2 = entry_coeffs(i, i), entry_coeffs(i + 1, i + 1)
        rows.append([a - b for a, b in zip(r1, r2)])
    return [[F(x) for x in r] for r in rows]


def _nullspace_mod(F, rows, ncols=10):
    rows = [list(r) for r in rows]
    pivots, r = [], 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = F.inv(rows[r][col])
        rows[r] = [_norm(F, x * inv) for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col]:
                f = rows[i][col]
                rows[i] = [_norm(F, a - f * b) for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        vec = [0] * ncols
        vec[fcol] = 1
        for i, pc in enumerate(pivots):
            vec[pc] = _norm(F, -rows[i][fcol])
        basis.append(vec)
    return basis


def _sym_from_vec(vec):
    m = [[0] * 4 for _ in range(4)]
    for (i, j), x in zip(_SYM_INDEX, vec):
        m[i][j] = m[j][i] = x
    return m


def _points_over(F, v, enumerate_limit: int):
    """All w with (v, w) on the variety, or None when the solution space is too large to enumerate."""
    basis = _nullspace_mod(F, _linear_constraints(F, v))
    d = len(basis)
    if d == 0:
        candidates = [[0] * 10]
    elif d == 1:
        # w = t * w0; each minor relation is m_v = sign * t^2 * m_w0
        w0 = _sym_from_vec(basis[0])
        t2 = None
        for a, I in enumerate(INDEX2):
            for J in INDEX2[a:]:
                Id, Jd = dual(I), dual(J)
                mv = _norm(F, minor2(v, I, J))
                mw = _norm(F, epsilon(I, Id) * epsilon(J, Jd) * minor2(w0, Id, Jd))
                if not mw:
                    if mv:
                        return []
                else:
                    val = _norm(F, mv * F.inv(mw))
                    if t2 is None:
                        t2 = val
                    elif t2 != val:
                        return []
        if t2 is None:
            candidates = [[_norm(F, t * x) for x in basis[0]] for t in range(F.p)]
        else:
            t = F.sqrt(t2)
            if t is None:
                return []
            candidates = [[_norm(F, s * x) for x in basis[0]] for s in {t, _norm(F, -t)}]
    else:
        if F.p ** d > enumerate_limit:
            return None
        candidates = []
        for coeffs in itertools.product(range(F.p), repeat=d):
            candidates.append([_norm(F, sum(c * b[k] for c, b in zip(coeffs, basis))) for k in range(10)])
    out = []
    for vec in candidates:
        pair = SymmetricPair(v, _sym_from_vec(vec))
        if on_variety(pair, F):
            out.append(pair)
    return out


@dataclass(frozen=True)
class SearchResult:
    field: str
    trials: int
    found: tuple
    skipped: int
    v_rank: int

    def to_json(self) -> dict:
        return {"field": self.field, "trials": self.trials, "v_rank": self.v_rank, "found": len(self.found),
                "skipped_large_solution_spaces": self.skipped,
                "examples": [{"v": [list(r) for r in p.v], "w": [list(r) for r in p.w]} for p in self.found[:3]]}


def variety_search(p: int, trials: int, v_rank: int, seed: int = 0, enumerate_limit: int = 10**5,
                   stop_after: int | None = None) -> SearchResult:
    """Sample symmetric v of the given rank over F_p and collect every w with (v, w) on the variety."""
    F = PrimeField(p)
    rng = random.Random(seed)
    found, skipped = [], 0
    for _ in range(trials):
        v = random_symmetric(F, rng, v_rank)
        pts = _points_over(F, v, enumerate_limit)
        if pts is None:
            skipped += 1
            continue
        found.extend(pts)
        if stop_after is not None and len(found) >= stop_after:
            break
    return SearchResult(F.name, trials, tuple(found), skipped, v_rank)


def rank3_search(p: int = 101, trials: int = 10**5, seed: int = 0) -> SearchResult:
    """Counterexamples to 'rk v != 3' on the variety (expected empty)."""
    return variety_search(p, trials, 3, seed)


def rank3_slice_f3() -> SearchResult:
    """Exhaustive search over F_3 on the slice of symmetric v with first row (1, 0, 0, 0)."""
    F = PrimeField(3)
    found, count = [], 0
    for vals in itertools.product(range(3), repeat=6):
        v = [[1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]
        it = iter(vals)
        for i in range(1, 4):
            for j in range(i, 4):
                v[i][j] = v[j][i] = next(it)
        if rank(F, v) != 3:
            continue
        count += 1
        found.extend(_points_over(F, v, 3**10))
    return SearchResult("F_3", count, tuple(found), 0, 3)


# ---------------------------------------------------------------------------
# symmetroid


def symmetroid_matrices(a=None) -> list[sympy.Matrix]:
    """The five symmetric 5x5 matrices A_k with the parameter ``a`` substituted (symbol by default)."""
    doc = load_json("reye_Asp.json")
    a_sym = sympy.Symbol("a")
    value = a_sym if a is None else sympy.sympify(a)
    return [sympy.Matrix(m).subs(a_sym, value) for m in
            ([[sympy.sympify(x, locals={"a": a_sym}) for x in row] for row in mat] for mat in doc["A"])]


def symmetroid_matrix(a=None, z=None) -> sympy.Matrix:
    """A_sp(z): the k-th row is (A_k z)^T."""
    zs = sympy.symbols("z1:6") if z is None else [sympy.sympify(v) for v in z]
    zvec = sympy.Matrix(zs)
    return sympy.Matrix([list((A * zvec).T) for A in symmetroid_matrices(a)])


def symmetroid_rhs(a=None, z=None):
    a_val = sympy.Symbol("a") if a is None else sympy.sympify(a)
    zs = sympy.symbols("z1:6") if z is None else [sympy.sympify(v) for v in z]
    prod = sympy.Integer(1)
    for k in range(5):
        prod *= zs[k] + a_val * zs[(k + 1) % 5]
    return a_val**5 * zs[0] * zs[1] * zs[2] * zs[3] * zs[4] + prod


def symmetroid_identity(a=None, z=None) -> bool:
    """det A_sp(z) equals the closed form, as an exact polynomial identity (or at the given values)."""
    lhs = sympy.expand(symmetroid_matrix(a, z).det(method="berkowitz"))
    rhs = sympy.expand(symmetroid_rhs(a, z))
    return sympy.expand(lhs - rhs) == 0
