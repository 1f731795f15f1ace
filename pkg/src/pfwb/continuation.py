"""Analytic continuation of solution vectors by local Taylor expansion.

Each step expands the solutions at a regular point c in powers of t = x - c,
using the linear recurrence the D-form of the operator imposes on Taylor
coefficients, and sums the expansion at the next point.  Steps are capped at
0.4 times the distance to the nearest singular point, so the truncated tail is
bounded by a geometric series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import gmpy2

from .exact import QuadExt, stirling2
from .ode import ThetaOperator, symbol_roots

GUARD_BITS = 48
STEP_RATIO = 0.4


class StepUnderflowError(ArithmeticError):
    pass


class ConvergenceError(ArithmeticError):
    pass


def to_mpc(value) -> gmpy2.mpc:
    """Convert Fraction, QuadExt, int, float, complex or gmpy2 numbers at the current context."""
    if isinstance(value, gmpy2.mpc):
        return +value
    if isinstance(value, Fraction):
        return gmpy2.mpc(gmpy2.mpq(value.numerator, value.denominator))
    if isinstance(value, QuadExt):
        return value.evaluate(gmpy2.get_context().precision)
    if isinstance(value, int):
        return gmpy2.mpc(value)
    if isinstance(value, complex):
        return gmpy2.mpc(value.real, value.imag)
    return gmpy2.mpc(value)


@dataclass(frozen=True)
class PathSpec:
    """Piecewise-linear path through the given waypoints (chart coordinates)."""

    waypoints: tuple
    description: str = ""

    def __post_init__(self):
        if not self.waypoints:
            raise ValueError("a path needs at least one waypoint")
        object.__setattr__(self, "waypoints", tuple(self.waypoints))

    def reversed(self) -> "PathSpec":
        return PathSpec(tuple(reversed(self.waypoints)), f"reverse of {self.description}")

    def then(self, other: "PathSpec") -> "PathSpec":
        return PathSpec(self.waypoints + other.waypoints[1:], f"{self.description}; {other.description}")


@dataclass(frozen=True)
class TransferMatrix:
    """Map from theta-vectors (f, theta f, ...) at ``start`` to those at ``end``."""

    matrix: tuple
    start: object
    end: object
    error_bound: float
    steps: int
    precision: int
    path: PathSpec | None = field(default=None, repr=False)


class Continuator:
    """Taylor-method continuation for one operator in one chart."""

    def __init__(self, op: ThetaOperator, precision: int):
        self.op = op
        self.order = op.order
        self.precision = precision
        self.work = precision + GUARD_BITS
        self.a = op.d_form()
        self.singular = [0j] + [d["numeric"] for d in symbol_roots(op)]

    def distance_to_singular(self, point: complex) -> float:
        return min(abs(point - s) for s in self.singular)

    # -- one step -----------------------------------------------------------

    def _taylor_of_coefficients(self, c: gmpy2.mpc) -> list[list[gmpy2.mpc]]:
        out = []
        for ai in self.a:
            coeffs = [to_mpc(v) for v in ai.coeffs]
            # repeated synthetic division gives the coefficients of a_i(c + t)
            n = len(coeffs)
            for k in range(n):
                for j in range(n - 2, k - 1, -1):
                    coeffs[j] += c * coeffs[j + 1]
            out.append(coeffs)
        return out

    def _lag_polynomials(self, c: gmpy2.mpc, h: gmpy2.mpc):
        """For each lag s >= 1 the polynomial q_s(N) = sum_i B_{i,s} falling(N - s, i).

        B_{i,k} are the Taylor coefficients of a_i at c scaled by h**(k + r - i),
        so that the recurrence runs on g_n = f_n h**n.
        """
        r = self.order
        A = self._taylor_of_coefficients(c)
        hp = [gmpy2.mpc(1)]
        max_pow = max(len(t) for t in A) + r + 1
        for _ in range(max_pow):
            hp.append(hp[-1] * h)
        lead = A[r][0]
        if lead == 0:
            raise ConvergenceError("step centre is a singular point")
        lags: dict[int, list] = {}
        for i, coeffs in enumerate(A):
            for k, v in enumerate(coeffs):
                if v == 0 or (i == r and k == 0):
                    continue
                s = r - i + k
                b = v * hp[k + r - i] / lead
                # falling(N - s, i) as a polynomial in N: prod_{m<i} (N - s - m)
                poly = [1]
                for m in range(i):
                    root = s + m
                    nxt = [0] * (len(poly) + 1)
                    for d, pc in enumerate(poly):
                        nxt[d + 1] += pc
                        nxt[d] -= root * pc
                    poly = nxt
                acc = lags.setdefault(s, [gmpy2.mpc(0)] * (r + 1))
                for d, pc in enumerate(poly):
                    if pc:
                        acc[d] += b * pc
        return sorted((s, coeffs) for s, coeffs in lags.items())

    def step(self, c: gmpy2.mpc, h: gmpy2.mpc, columns: list[list[gmpy2.mpc]], eps: gmpy2.mpfr):
        """Advance Taylor vectors (f, f', f''/2, ...) from c to c + h.

        Returns the new columns and a bound on the discarded tail.
        """
        r = self.order
        lags = self._lag_polynomials(c, h)
        max_lag = lags[-1][0]
        ncol = len(columns)
        hpow = [gmpy2.mpc(1)]
        for _ in range(r):
            hpow.append(hpow[-1] * h)
        g = [[col[m] * hpow[m] for m in range(r)] for col in columns]
        G = [[sum(g[j][n] * math.comb(n, m) for n in range(m, r)) for m in range(r)] for j in range(ncol)]
        scale = max(max(abs(v) for v in col) for col in g) or gmpy2.mpfr(1)
        small_run, N = 0, r
        cap = 40 * self.work + 200
        tail = gmpy2.mpfr(0)
        while True:
            if N > cap:
                raise ConvergenceError(f"Taylor series did not converge within {cap} terms")
            qs = []
            for s, poly in lags:
                if s > N:
                    break
                val = poly[-1]
                for pc in reversed(poly[:-1]):
                    val = val * N + pc
                qs.append((s, val))
            denom = -1 / gmpy2.mpz(math.perm(N, r))
            biggest = gmpy2.mpfr(0)
            binoms = [math.comb(N, m) for m in range(r)]
            for j in range(ncol):
                gj = g[j]
                acc = gmpy2.mpc(0)
                for s, val in qs:
                    acc += val * gj[N - s]
                acc *= denom
                gj.append(acc)
                Gj = G[j]
                for m in range(r):
                    Gj[m] += acc * binoms[m]
                mag = abs(acc)
                if mag > biggest:
                    biggest = mag
            weighted = biggest * N ** (r - 1)
            if weighted <= eps * scale:
                small_run += 1
                tail = max(tail, weighted)
                if small_run >= max(8, max_lag) :
                    break
            else:
                small_run = 0
            N += 1
        inv_h = 1 / h
        out = []
        for Gj in G:
            col, f = [], gmpy2.mpc(1)
            for m in range(r):
                col.append(Gj[m] * f)
                f *= inv_h
            out.append(col)
        return out, float(tail / scale) * float(scale) * 4

    # -- paths ----------------------------------------------------------------

    def taylor_from_theta(self, x: gmpy2.mpc) -> list[list[gmpy2.mpc]]:
        """K(x) with theta-vector = K(x) * Taylor-vector."""
        r = self.order
        out = [[gmpy2.mpc(0)] * r for _ in range(r)]
        xp = [gmpy2.mpc(1)]
        for _ in range(r):
            xp.append(xp[-1] * x)
        for m in range(r):
            for i in range(m + 1):
                s = stirling2(m, i)
                if s:
                    out[m][i] = s * math.factorial(i) * xp[i]
        return out

    def transfer(self, path: PathSpec, precision: int | None = None) -> TransferMatrix:
        """Theta-coordinate transfer matrix along ``path``."""
        prec = precision or self.precision
        work = prec + GUARD_BITS
        r = self.order
        with gmpy2.context(precision=work):
            eps = gmpy2.mpfr(2) ** (-work)
            pts = [to_mpc(w) for w in path.waypoints]
            cols = [[gmpy2.mpc(1) if i == j else gmpy2.mpc(0) for i in range(r)] for j in range(r)]
            total_tail, steps = 0.0, 0
            growth = 1.0
            for a, b in zip(pts, pts[1:]):
                cur = a
                while cur != b:
                    cc = complex(cur)
                    rad = self.distance_to_singular(cc)
                    maxh = STEP_RATIO * rad
                    if maxh < 1e-40 * (1 + abs(cc)) or rad == 0:
                        raise StepUnderflowError(f"path passes too close to a singular point near {cc}")
                    remaining = b - cur
                    dist = abs(complex(remaining))
                    n = max(1, math.ceil(dist / maxh * (1 + 1e-12)))
                    h = remaining / n
                    cols, tail = self.step(cur, h, cols, eps)
                    nxt = cur + h
                    cur = b if n == 1 else nxt
                    steps += 1
                    total_tail += tail
                    growth = max(growth, max(abs(complex(v)) for col in cols for v in col))
            # cols[j] is the Taylor vector at the end of the solution with Taylor basis e_j at the start
            Kb = self.taylor_from_theta(pts[-1])
            Ka = self.taylor_from_theta(pts[0])
            phi_tay = [[cols[j][i] for j in range(r)] for i in range(r)]
            phi = mat_mul(mat_mul(Kb, phi_tay), lower_inverse(Ka))
            bound = (total_tail + steps * 2.0 ** (-prec)) * growth
        with gmpy2.context(precision=prec):
            rounded = tuple(tuple(+v for v in row) for row in phi)
        return TransferMatrix(rounded, path.waypoints[0], path.waypoints[-1], bound, steps, prec, path)


# ---------------------------------------------------------------------------
# small dense linear algebra over gmpy2 complex numbers


def mat_mul(a, b):
    n, m, p = len(a), len(b), len(b[0])
    return [[sum((a[i][k] * b[k][j] for k in range(m)), gmpy2.mpc(0)) for j in range(p)] for i in range(n)]


def mat_transpose(a):
    return [list(row) for row in zip(*a)]


def identity(n: int):
    return [[gmpy2.mpc(1) if i == j else gmpy2.mpc(0) for j in range(n)] for i in range(n)]


def lower_inverse(a):
    n = len(a)
    inv = [[gmpy2.mpc(0)] * n for _ in range(n)]
    for j in range(n):
        for i in range(j, n):
            acc = gmpy2.mpc(1) if i == j else gmpy2.mpc(0)
            for k in range(j, i):
                acc -= a[i][k] * inv[k][j]
            inv[i][j] = acc / a[i][i]
    return inv


def mat_inverse(a):
    """Gauss-Jordan with partial pivoting."""
    n = len(a)
    aug = [list(row) + [gmpy2.mpc(1) if i == j else gmpy2.mpc(0) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = max(range(col, n), key=lambda i: abs(aug[i][col]))
        if aug[piv][col] == 0:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [u - f * v for u, v in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]


# ---------------------------------------------------------------------------
# loops and connecting paths


def loop_path(base, target, others: Sequence[complex], ratio: float = 0.35, sides: int = 8) -> tuple[PathSpec, PathSpec]:
    """(approach, circle) for a loop around ``target`` entered from above.

    The approach rises vertically from ``base`` to the height of the top of the
    circle, then runs horizontally to that top point.  The circle is a regular
    polygon traversed counter-clockwise, starting and ending at the top.
    """
    t = complex(target)
    dist = min(abs(t - complex(o)) for o in others if abs(complex(o) - t) > 0)
    R = ratio * dist
    b = complex(base)
    top = complex(t.real, t.imag + R)
    if abs(b - t) <= R * 1.05:
        raise ValueError("base point lies inside the loop circle")
    approach = PathSpec((base, complex(b.real, top.imag), top), f"approach to {t:.6g}")
    ring = tuple(t + R * complex(math.cos(math.pi / 2 + 2 * math.pi * k / sides),
                                 math.sin(math.pi / 2 + 2 * math.pi * k / sides)) for k in range(sides))
    circle = PathSpec(ring + (top,), f"ccw circle around {t:.6g} radius {R:.4g}")
    return approach, circle


def upper_path(start, end, height: float | None = None) -> PathSpec:
    """Start -> up -> across -> down -> end, through the upper half-plane."""
    a, b = complex(start), complex(end)
    H = height if height is not None else abs(b - a) / 2
    return PathSpec((start, complex(a.real, a.imag + H), complex(b.real, b.imag + H), end), "upper half-plane connection")


def loop_transfer(cont: Continuator, base, target, others: Sequence[complex]) -> TransferMatrix:
    """Transfer matrix of the loop approach * circle * approach^-1 based at ``base``."""
    approach, circle = loop_path(base, target, others)
    full = approach.then(circle).then(approach.reversed())
    return cont.transfer(full)


def monodromy_in_frame(transfer: TransferMatrix, frame_values) -> list[list[gmpy2.mpc]]:
    """M with w_cont = M w for the solutions whose theta-vectors form the columns of ``frame_values``.

    Continuing gives Phi V = V M^T, hence M = (V^-1 Phi V)^T.
    """
    with gmpy2.context(precision=transfer.precision + GUARD_BITS):
        inner = mat_mul(mat_inverse(frame_values), mat_mul([list(r) for r in transfer.matrix], frame_values))
        return mat_transpose(inner)
