"""End-to-end monodromy and connection runs for the bundled operators."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2

from .continuation import (GUARD_BITS, Continuator, loop_path, loop_transfer, mat_inverse, mat_mul, mat_transpose,
                           monodromy_in_frame, upper_path)
from .data import resolve
from .exact import bits_for_digits
from .monodromy import (IntMatrix, RecognizedMatrix, check_relation, idet, iinverse, imul, ieye, recognize_integral,
                        verify_form)
from .ode import SingularityRecord, ThetaOperator, adaptive_eval, frobenius_mum_basis, load_operator, singular_data
from .periods import IntegralFrame, build_cy3_frame, build_k3_frame, period_theta_vectors


class OperatorDiagnosticError(ValueError):
    """The operator's singular locus does not have the expected shape."""

    def __init__(self, message: str, records: list[SingularityRecord]):
        roots = ", ".join(f"{r.label()} {list(map(str, r.exponents))}" for r in records)
        super().__init__(f"{message}; symbol roots and exponents: {roots}")
        self.records = records


@dataclass(frozen=True)
class Problem:
    id: str
    operator_file: str
    table_id: str
    frame_x: IntegralFrame
    frame_z: IntegralFrame
    base: Fraction
    z_base: Fraction
    layout: tuple[str, ...]
    relation: str
    apparent: tuple[str, ...] = ()


K3_DEG12 = Problem(
    id="k3_deg12",
    operator_file="k3_deg12.op",
    table_id="k3_deg12",
    frame_x=build_k3_frame(12),
    frame_z=build_k3_frame(12),
    base=Fraction(1, 64),
    z_base=Fraction(1, 64),
    layout=("0", "a1", "a2"),
    relation="M0*Ma1*Ma2*Minf=I",
)

RODLAND = Problem(
    id="rodland",
    operator_file="rodland.op",
    table_id="rodland",
    frame_x=build_cy3_frame(42, 84, -98, name="Grassmannian side"),
    frame_z=build_cy3_frame(14, 56, -98, name="Pfaffian side"),
    # 1/64 lies too close to a1 ~ 0.0162 for a loop around 0 to clear it
    base=Fraction(1, 128),
    z_base=Fraction(1, 600),
    layout=("a2", "0", "a1", "3", "a3"),
    relation="Ma2*M0*Ma1*Ma3*Minf=I",
    apparent=("3",),
)

PROBLEMS = {p.id: p for p in (K3_DEG12, RODLAND)}


def problem_for_operator(op: ThetaOperator) -> Problem:
    name = op.metadata.get("name", op.name)
    if name in PROBLEMS:
        return PROBLEMS[name]
    by_order = [p for p in PROBLEMS.values() if p.frame_x.rank == op.order]
    if len(by_order) == 1:
        return by_order[0]
    raise KeyError(f"no bundled problem matches operator {name!r}")


def check_layout(problem: Problem, records: list[SingularityRecord]) -> dict[str, SingularityRecord]:
    """Name the finite singular points by real order; fail loudly if the shape is wrong."""
    finite = [r for r in records if not r.is_infinity]
    if any(not r.fuchsian for r in records):
        raise OperatorDiagnosticError("operator is not Fuchsian", records)
    if any(abs(r.numeric.imag) > 1e-30 for r in finite):
        raise OperatorDiagnosticError("non-real finite singular point", records)
    ordered = sorted(finite, key=lambda r: r.numeric.real)
    if len(ordered) != len(problem.layout):
        raise OperatorDiagnosticError(
            f"expected {len(problem.layout)} finite singular points ({', '.join(problem.layout)}), found {len(ordered)}", records)
    named = dict(zip(problem.layout, ordered))
    for name, rec in named.items():
        if name[0].isdigit():
            if rec.location != Fraction(name):
                raise OperatorDiagnosticError(f"singular point {name} expected at x={name}, found {rec.label()}", records)
            if name in problem.apparent and rec.kind != "apparent":
                raise OperatorDiagnosticError(f"x={name} is not an apparent singularity (kind {rec.kind})", records)
    if named["0"].kind != "MUM":
        raise OperatorDiagnosticError("x=0 is not a MUM point", records)
    inf = [r for r in records if r.is_infinity]
    if not inf or inf[0].kind != "MUM":
        raise OperatorDiagnosticError("infinity is not a MUM point", records)
    return named


def _conjugate(A, M, work):
    with gmpy2.context(precision=work):
        return mat_mul(mat_mul(A, M), mat_inverse(A))


def _path_json(path) -> list[list[float]]:
    return [[complex(w).real, complex(w).imag] for w in path.waypoints]


@dataclass
class MonodromyRun:
    problem: Problem
    digits: int
    tolerance: float
    singularities: list[SingularityRecord]
    loops: dict[str, RecognizedMatrix] = field(default_factory=dict)
    derived: dict[str, IntMatrix] = field(default_factory=dict)
    apparent_residuals: dict[str, float] = field(default_factory=dict)
    error_bounds: dict[str, float] = field(default_factory=dict)
    paths: dict[str, list] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    checks: list[dict] = field(default_factory=list)

    def matrices(self) -> dict[str, IntMatrix]:
        out = {name: rec.entries for name, rec in self.loops.items()}
        out.update(self.derived)
        return out

    @property
    def max_residual(self) -> float:
        vals = [r.max_residual for r in self.loops.values()] + list(self.apparent_residuals.values())
        return max(vals) if vals else 0.0

    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_json(self) -> dict:
        return {
            "problem": self.problem.id,
            "digits": self.digits,
            "tolerance": self.tolerance,
            "singular_points": [r.to_json() for r in self.singularities],
            "matrices": {k: [list(r) for r in v] for k, v in self.matrices().items()},
            "recognition_residuals": {k: v.max_residual for k, v in self.loops.items()},
            "max_residual": self.max_residual,
            "apparent_loop_residuals": self.apparent_residuals,
            "error_bounds": self.error_bounds,
            "paths": self.paths,
            "timings_s": self.timings,
            "checks": self.checks,
            "frames": {"x": self.problem.frame_x.to_json(), "z": self.problem.frame_z.to_json()},
        }


def run_monodromy(problem: Problem, digits: int = 115, op: ThetaOperator | None = None,
                  connection: bool = True) -> MonodromyRun:
    """Loops around every finite singular point from the x = 0 frame, M_inf, and optionally U_xz."""
    t_start = time.perf_counter()
    bits = bits_for_digits(digits)
    work = bits + GUARD_BITS
    tol = 10.0 ** (-digits / 4)
    if op is None:
        op = load_operator(resolve(problem.operator_file))
    records = singular_data(op)
    run = MonodromyRun(problem, digits, tol, records)
    named = check_layout(problem, records)

    basis = frobenius_mum_basis(op, "x")
    basis, V, _ = adaptive_eval(basis, problem.base, bits, digits)
    A = problem.frame_x.ansatz_matrix(work)
    cont = Continuator(op, bits)
    points = {name: rec.numeric for name, rec in named.items()}
    others = list(points.values())
    run.timings["setup"] = time.perf_counter() - t_start

    for name, pt in points.items():
        t0 = time.perf_counter()
        T = loop_transfer(cont, problem.base, pt, others)
        M = _conjugate(A, monodromy_in_frame(T, V), work)
        key = f"M{name}"
        run.error_bounds[key] = T.error_bound
        approach, circle = loop_path(problem.base, pt, others)
        run.paths[key] = _path_json(approach.then(circle).then(approach.reversed()))
        if name in problem.apparent:
            with gmpy2.context(precision=work):
                resid = max(float(abs(M[i][j] - (1 if i == j else 0))) for i in range(len(M)) for j in range(len(M)))
            run.apparent_residuals[key] = resid
            run.checks.append({"check": f"{key} is the identity", "pass": resid < tol, "residual": resid})
        else:
            run.loops[key] = recognize_integral(M, tol, f"loop around {name}")
        run.timings[key] = time.perf_counter() - t0

    mats = run.matrices()
    lhs = problem.relation.split("=")[0].split("*")
    finite = [n for n in lhs if n != "Minf"]
    prod = ieye(problem.frame_x.rank)
    for n in finite:
        prod = imul(prod, mats[n])
    run.derived["Minf"] = iinverse(prod)
    G = problem.frame_x.pairing
    for name, m in run.matrices().items():
        run.checks.append({"check": f"{name} preserves the pairing", "pass": verify_form(m, G)})
        run.checks.append({"check": f"det {name} = +-1", "pass": abs(idet(m)) == 1})

    if connection:
        _run_connection(run, op, basis, V, A, work)
    mats = run.matrices()
    res = check_relation(problem.relation, mats)
    run.checks.append({"check": problem.relation, "pass": res.passed})
    run.timings["total"] = time.perf_counter() - t_start
    return run


def _run_connection(run: MonodromyRun, op: ThetaOperator, basis, V, A, work: int) -> None:
    problem = run.problem
    bits = bits_for_digits(run.digits)
    t0 = time.perf_counter()
    x1 = 1 / problem.z_base
    path = upper_path(problem.base, x1)
    T = Continuator(op, bits).transfer(path)
    zbasis = frobenius_mum_basis(op, "z")
    zbasis, Vz, _ = adaptive_eval(zbasis, problem.z_base, bits, run.digits)
    Az = problem.frame_z.ansatz_matrix(work)
    r = problem.frame_x.rank
    with gmpy2.context(precision=work):
        # theta_x^m = (-1)^m theta_z^m
        Vz_x = [[Vz[m][k] * (-1) ** m for k in range(r)] for m in range(r)]
        P = period_theta_vectors(problem.frame_x, V, work)
        Pz = period_theta_vectors(problem.frame_z, Vz_x, work)
        UT = mat_mul(mat_inverse(Pz), mat_mul([list(row) for row in T.matrix], P))
    U = recognize_integral(mat_transpose(UT), run.tolerance, "connection along the upper half-plane")
    run.loops["U"] = U
    run.error_bounds["U"] = T.error_bound
    run.paths["U"] = _path_json(path)
    Uinv = iinverse(U.entries)
    run.derived["Uinv"] = Uinv
    for name, m in list(run.matrices().items()):
        if name.startswith("M") and not name.startswith("Mt"):
            run.derived["Mt" + name[1:]] = imul(imul(Uinv, m), U.entries)
    run.timings["connection"] = time.perf_counter() - t0

    # independent check of M_inf: a counterclockwise loop around z = 0 in the z-chart
    t0 = time.perf_counter()
    zop = op.z_chart()
    zcont = Continuator(zop, bits)
    Tz = loop_transfer(zcont, problem.z_base, 0, zcont.singular)
    Mz = _conjugate(Az, monodromy_in_frame(Tz, Vz), work)
    direct = recognize_integral(Mz, run.tolerance, "loop around z = 0")
    run.loops["Mtinf_direct"] = direct
    run.error_bounds["Mtinf_direct"] = Tz.error_bound
    run.checks.append({"check": "Mtinf from the z-chart loop equals Uinv*Minf*U",
                       "pass": direct.entries == run.derived["Mtinf"]})
    run.checks.append({"check": "U preserves the pairing", "pass": verify_form(U.entries, problem.frame_x.pairing)})
    run.checks.append({"check": "U*Uinv = I", "pass": imul(U.entries, Uinv) == ieye(r)})
    run.timings["z_loop"] = time.perf_counter() - t0
