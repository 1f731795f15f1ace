"""Integral period frames built from Frobenius bases, and Griffiths transversality checks."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import gmpy2

from .continuation import GUARD_BITS, mat_mul, mat_transpose, to_mpc
from .exact import RatPoly
from .ode import FrobeniusBasis, adaptive_eval


@dataclass(frozen=True)
class ZetaTerm:
    """coeff * zeta(3) / (2 pi i)**3, kept symbolic until evaluated."""

    coeff: Fraction

    def evaluate(self, precision: int) -> gmpy2.mpc:
        with gmpy2.context(precision=precision):
            two_pi_i = gmpy2.mpc(0, 2 * gmpy2.const_pi())
            return self.coeff.numerator * gmpy2.zeta(gmpy2.mpfr(3)) / (self.coeff.denominator * two_pi_i**3)

    def __str__(self):
        return f"({self.coeff})*zeta(3)/(2*pi*i)^3"


def sigma_form(n: int) -> tuple[tuple[int, ...], ...]:
    return ((0, 0, 1), (0, 2 * n, 0), (1, 0, 0))


SYMPLECTIC_S = ((0, 0, 0, 1), (0, 0, 1, 0), (0, -1, 0, 0), (-1, 0, 0, 0))


@dataclass(frozen=True)
class IntegralFrame:
    """Pi = N * core * diag(n_0, ..., n_{r-1}) * (w_0, ..., w_{r-1}) with n_k = (2 pi i)**-k."""

    rank: int
    core: tuple
    pairing: tuple
    kappa: int
    beta: Fraction = Fraction(0)
    euler: int | None = None
    a: Fraction = Fraction(0)
    n_scale: Fraction = Fraction(1)
    name: str = ""

    @property
    def gamma(self) -> ZetaTerm | None:
        return None if self.euler is None else ZetaTerm(Fraction(-self.euler))

    def ansatz_matrix(self, precision: int) -> list[list[gmpy2.mpc]]:
        with gmpy2.context(precision=precision):
            two_pi_i = gmpy2.mpc(0, 2 * gmpy2.const_pi())
            n = [1 / two_pi_i**k for k in range(self.rank)]
            out = []
            for row in self.core:
                vals = []
                for k, entry in enumerate(row):
                    v = entry.evaluate(precision) if isinstance(entry, ZetaTerm) else to_mpc(Fraction(entry))
                    vals.append(to_mpc(self.n_scale) * v * n[k])
                out.append(vals)
            return out

    def to_json(self) -> dict:
        out = {
            "rank": self.rank,
            "core": [[str(e) for e in row] for row in self.core],
            "pairing": [list(r) for r in self.pairing],
            "kappa": self.kappa,
            "beta": str(self.beta),
            "a": str(self.a),
            "N": str(self.n_scale),
        }
        if self.gamma is not None:
            out["gamma"] = str(self.gamma)
            out["gamma_decimal"] = repr(complex(self.gamma.evaluate(128)))
        return out


def build_k3_frame(deg: int, scale: Fraction | int | None = None) -> IntegralFrame:
    """Rank-3 frame diag(1, 1, -deg/2) for a degree ``deg`` K3 family.

    ``scale`` overrides the third-row entry (used to test that a wrong value is detected).
    """
    if deg <= 0 or deg % 2:
        raise ValueError("degree must be a positive even integer")
    third = Fraction(-deg, 2) if scale is None else Fraction(scale)
    core = ((Fraction(1), Fraction(0), Fraction(0)),
            (Fraction(0), Fraction(1), Fraction(0)),
            (Fraction(0), Fraction(0), third))
    return IntegralFrame(3, core, sigma_form(deg // 2), kappa=deg, name=f"K3 degree {deg}")


def build_cy3_frame(kappa: int, c2H: int, euler: int, a: Fraction | int = 0, n_scale: Fraction | int = 1, name: str = "") -> IntegralFrame:
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    beta = Fraction(-c2H, 24)
    gamma = ZetaTerm(Fraction(-euler))
    z = Fraction(0)
    core = ((Fraction(1), z, z, z),
            (z, Fraction(1), z, z),
            (beta, Fraction(a), Fraction(kappa, 2), z),
            (gamma if euler else z, beta, z, Fraction(-kappa, 6)))
    return IntegralFrame(4, core, SYMPLECTIC_S, kappa=kappa, beta=beta, euler=euler, a=Fraction(a),
                         n_scale=Fraction(n_scale), name=name)


def period_theta_vectors(frame: IntegralFrame, basis_values, precision: int):
    """Columns are theta-vectors of Pi_k given theta-vectors of w_k as columns."""
    with gmpy2.context(precision=precision):
        return mat_mul(basis_values, mat_transpose(frame.ansatz_matrix(precision)))


def k3_yukawa(deg: int = 12) -> tuple[RatPoly, RatPoly]:
    """C_xx for the bundled K3 family as (numerator, denominator) in x."""
    if deg != 12:
        raise ValueError("only the bundled degree-12 family is provided")
    return RatPoly([12]), RatPoly([1, -34, 1]) * RatPoly([0, 0, 1])


@dataclass(frozen=True)
class GriffithsReport:
    point: object
    residuals: tuple[float, float, float]
    tail: float

    def passed(self, tol: float) -> bool:
        return all(r < tol for r in self.residuals)

    def to_json(self) -> dict:
        return {"x": str(self.point), "residuals": list(self.residuals), "tail_estimate": self.tail}


def griffiths_residuals(frame: IntegralFrame, basis: FrobeniusBasis, sample_x, precision: int,
                        digits: int | None = None, yukawa: tuple[RatPoly, RatPoly] | None = None) -> GriffithsReport:
    """|Pi^T G Pi|, |Pi^T G Pi'| and |Pi^T G Pi'' + C_xx/(2 pi i)**2| at ``sample_x`` (rank 3 only).

    For the z-chart, the Yukawa coupling picks up the Jacobian factor (dx/dz)**2
    and derivatives are taken in z.
    """
    if frame.rank != 3:
        raise ValueError("transversality residuals are implemented for rank-3 frames")
    num, den = yukawa or k3_yukawa(frame.kappa)
    digits = digits or int(precision / 3.33)
    basis, values, tail = adaptive_eval(basis, sample_x, precision, digits)
    work = precision + GUARD_BITS
    with gmpy2.context(precision=work):
        cols = period_theta_vectors(frame, values, work)
        t = to_mpc(sample_x)
        f0 = [cols[0][k] for k in range(3)]
        f1 = [cols[1][k] / t for k in range(3)]
        f2 = [(cols[2][k] - cols[1][k]) / (t * t) for k in range(3)]
        G = frame.pairing

        def pair(u, v):
            return sum((G[i][j] * u[i] * v[j] for i in range(3) for j in range(3)), gmpy2.mpc(0))

        if basis.chart == "x":
            c = num(t) / den(t)
        else:
            x = 1 / t
            c = num(x) / den(x) * (x * x) ** 2  # (dx/dz)^2 = x^4
        two_pi_i = gmpy2.mpc(0, 2 * gmpy2.const_pi())
        r0 = abs(pair(f0, f0))
        r1 = abs(pair(f0, f1))
        r2 = abs(pair(f0, f2) + c / two_pi_i**2)
    return GriffithsReport(sample_x, (float(r0), float(r1), float(r2)), tail)


def sample_points(upper: Fraction, count: int = 5) -> list[Fraction]:
    """``count`` evenly spaced rationals in (0, upper)."""
    return [upper * Fraction(k, count + 1) for k in range(1, count + 1)]

