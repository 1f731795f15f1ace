"""Command-line entry point; every subcommand writes a JSON report and exits 0 (pass), 2 (check failed) or 3 (bad input)."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .data import DataError, resolve
from .exact import bits_for_digits

SCHEMA = 1
EXIT_OK, EXIT_FAILED, EXIT_INPUT = 0, 2, 3
DEFAULT_OPS = {"k3_deg12": "data/k3_deg12.op", "rodland": "data/rodland.op"}


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    digits: int = 115
    seed: int = 0
    op: str | None = None
    table: str | None = None
    output: str | None = None
    timings: bool = False

    def __post_init__(self):
        if self.digits < 30:
            raise InputError(f"--digits must be at least 30 (got {self.digits})")

    @property
    def bits(self) -> int:
        return bits_for_digits(self.digits)

    @property
    def tolerance(self) -> float:
        return 10.0 ** (-self.digits / 4)

    def to_json(self) -> dict:
        return {"digits": self.digits, "bits": self.bits, "tolerance": self.tolerance, "seed": self.seed,
                "op": self.op, "table": self.table}


def _checks_passed(checks: list[dict]) -> bool:
    return all(c["pass"] for c in checks)


def _load_op(cfg: RunConfig, default: str = "k3_deg12"):
    from .ode import load_operator
    return load_operator(resolve(cfg.op or DEFAULT_OPS[default]))


# ---------------------------------------------------------------------------
# subcommands; each returns (report body, list of checks)


def cmd_riemann_scheme(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    from .ode import fuchs_relation, singular_data
    op = _load_op(cfg)
    records = singular_data(op)
    total, expected = fuchs_relation(op, records)
    checks = [{"check": "Fuchs relation", "pass": total == expected, "sum": str(total), "expected": str(expected)}]
    return {"operator": op.pretty(), "singular_points": [r.to_json() for r in records]}, checks


def _monodromy(cfg: RunConfig, connection: bool):
    from .monodromy import compare_reference
    from .problems import problem_for_operator, run_monodromy
    op = _load_op(cfg)
    problem = problem_for_operator(op)
    run = run_monodromy(problem, cfg.digits, op=op, connection=connection)
    body = run.to_json()
    if not cfg.timings:
        body.pop("timings_s")
    checks = list(run.checks)
    table_id = cfg.table or problem.table_id
    mats = run.matrices()
    diffs = [d for d in compare_reference(mats, table_id) if d.get("missing") != "computed" or connection]
    checks.append({"check": f"matrices equal table {table_id}", "pass": not diffs, "differences": diffs})
    checks.append({"check": "recognition residual below tolerance", "pass": run.max_residual < run.tolerance,
                   "max_residual": run.max_residual})
    return run, body, checks


def cmd_monodromy(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    _, body, checks = _monodromy(cfg, connection=not args.no_connection)
    return body, checks


def cmd_connection(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    run, body, checks = _monodromy(cfg, connection=True)
    keep = {k: v for k, v in body["matrices"].items() if k == "U" or k == "Uinv" or k.startswith("Mt")}
    body = {"problem": body["problem"], "digits": body["digits"], "tolerance": body["tolerance"], "matrices": keep,
            "recognition_residuals": body["recognition_residuals"], "paths": {"U": body["paths"]["U"]}}
    return body, checks


def cmd_verify_tables(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    from .monodromy import BUNDLED_TABLES, load_reference_table, verify_form, verify_relations
    ids = [cfg.table] if cfg.table else list(BUNDLED_TABLES)
    checks, body = [], {"tables": {}}
    for tid in ids:
        table = load_reference_table(tid, validate=False)
        body["tables"][tid] = {"checksum": table.checksum, "matrices": sorted(table.matrices)}
        for res in verify_relations(table.matrices, table.relations):
            checks.append({"check": f"{tid}: {res.relation}", **res.to_json()})
        for name in table.form_preserving:
            checks.append({"check": f"{tid}: {name} preserves {table.pairing_name}",
                           "pass": verify_form(table.matrices[name], table.pairing)})
    return body, checks


def cmd_griffiths(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    from .ode import frobenius_mum_basis, symbol_roots
    from .periods import build_k3_frame, griffiths_residuals, sample_points
    op = _load_op(cfg)
    if op.order != 3:
        raise InputError("griffiths applies to the rank-3 K3 operator")
    a1 = min(d["numeric"].real for d in symbol_roots(op) if d["numeric"].real > 0)
    upper = Fraction(a1 / 2).limit_denominator(10**6)
    frame = build_k3_frame(12)
    basis = frobenius_mum_basis(op, "x")
    threshold = 10.0 ** (-args.threshold_digits)
    checks, reports = [], []
    for x in sample_points(upper, args.points):
        rep = griffiths_residuals(frame, basis, x, cfg.bits, cfg.digits)
        reports.append(rep.to_json())
        checks.append({"check": f"transversality at x = {x}", "pass": rep.passed(threshold),
                       "max_residual": max(rep.residuals)})
    return {"interval": ["0", str(upper)], "threshold": threshold, "samples": reports}, checks


def cmd_fm_count(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    from .lattice import fm_count_picard_one
    if args.n < 1:
        raise InputError("n must be positive")
    return {"n": args.n, "count": fm_count_picard_one(args.n)}, []


def cmd_lattice(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    from .lattice import (discriminant_group, fm_count_picard_one, hyperbolic_plane, induced_disc_action, k3_lattice,
                          nikulin_hypotheses, rank_one, sigma_lattice)
    from .monodromy import load_reference_table
    L, S = k3_lattice(), sigma_lattice(6)
    A = discriminant_group(S)
    table = load_reference_table("k3_deg12").matrices
    actions = {name: induced_disc_action(S, table[name], A).is_trivial for name in ("M0", "Ma1", "Ma2", "U")}
    verdict = nikulin_hypotheses(L, rank_one(12), mode="unique_embedding")
    checks = [
        {"check": "fm_count(1) = 1", "pass": fm_count_picard_one(1) == 1},
        {"check": "fm_count(6) = 2", "pass": fm_count_picard_one(6) == 2},
        {"check": "A(Sigma6) = Z/12", "pass": A.orders == (12,)},
        {"check": "L_K3 even unimodular of signature (3,19)", "pass": L.is_even and abs(L.det) == 1 and L.signature() == (3, 19)},
        {"check": "M0, Ma1, Ma2 act trivially on A(Sigma6)", "pass": all(actions[n] for n in ("M0", "Ma1", "Ma2"))},
        {"check": "U acts nontrivially on A(Sigma6)", "pass": not actions["U"]},
        {"check": "unique primitive embedding <12> -> L_K3", "pass": verdict.holds},
    ]
    body = {"sigma6": {"orders": list(A.orders), "q_values": [str(q) for q in A.q_values],
                       "signature": list(S.signature())},
            "k3_lattice": {"rank": L.rank, "det": L.det, "signature": list(L.signature())},
            "disc_action_trivial": actions, "nikulin": verdict.to_json(),
            "nikulin_U_2": nikulin_hypotheses(hyperbolic_plane(), rank_one(2), mode="unique_embedding").to_json()}
    return body, checks


def cmd_modgroup(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    from .modgroup import disc_image_order, generator, r_identities, r_map, to_integer_matrix
    from .monodromy import load_reference_table
    table = load_reference_table("k3_deg12").matrices
    ids = r_identities(table)
    checks = [{"check": r["identity"], "pass": r["pass"]} for r in ids]
    S1, S2, T0 = generator("S1"), generator("S2"), generator("T0")
    gens = [to_integer_matrix(r_map(T0)), to_integer_matrix(r_map(S1), -1), to_integer_matrix(r_map(S1 * S2))]
    order = disc_image_order(gens)
    checks.append({"check": "disc-image order of {R(T0), -R(S1), R(S1 S2)} = 2", "pass": order == 2})
    return {"identities": ids, "disc_image_order": order}, checks


def cmd_ktheory(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    from .ktheory import MukaiVector, decompose_in_basis, gram_matrix, k3_basis
    from .modgroup import SIGMA6
    basis = k3_basis(6)
    gram = gram_matrix(basis)
    coeffs = decompose_in_basis(MukaiVector(2, 1, 3, 6), basis)
    checks = [{"check": "Gram matrix of the basis = Sigma6", "pass": gram == SIGMA6},
              {"check": "(2,1,3) = 3 e1 + 1 e2 - 2 e3", "pass": coeffs == (3, 1, -2)}]
    return {"basis": [b.as_tuple() for b in basis], "gram": [list(r) for r in gram],
            "decomposition_2_1_3": list(coeffs)}, checks


def cmd_plucker(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    from .grassmann import PrimeField, RationalField, generic_check, rank3_search
    checks, body = [], {}
    for F in (RationalField(), PrimeField(args.prime)):
        rep = generic_check(F, args.points, cfg.seed)
        body[f"generic_{F.name}"] = rep.to_json()
        checks.append({"check": f"{args.points} generic points over {F.name} satisfy the ideal and consequences",
                       "pass": rep.passed})
    search = rank3_search(args.prime, args.trials, cfg.seed)
    body["rank3_search"] = search.to_json()
    checks.append({"check": f"no rank-3 v over F_{args.prime} in {args.trials} trials",
                   "pass": not search.found and not search.skipped})
    return body, checks


def cmd_symmetroid(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    from .grassmann import symmetroid_identity
    ok = symmetroid_identity()
    return {"identity": "det A_sp(z) = a^5 z1..z5 + prod_k (z_k + a z_{k+1})"}, [
        {"check": "symmetroid determinant identity in Q[a, z]", "pass": ok}]


def cmd_bps_check(cfg: RunConfig, args) -> tuple[dict, list[dict]]:
    from .invariants import bps_checks, load_invariants
    inv = load_invariants()
    return {"invariants": {k: v.to_json() for k, v in inv.items()}}, bps_checks()


COMMANDS = {
    "riemann-scheme": cmd_riemann_scheme,
    "monodromy": cmd_monodromy,
    "connection": cmd_connection,
    "verify-tables": cmd_verify_tables,
    "griffiths": cmd_griffiths,
    "fm-count": cmd_fm_count,
    "lattice": cmd_lattice,
    "modgroup": cmd_modgroup,
    "ktheory": cmd_ktheory,
    "plucker": cmd_plucker,
    "symmetroid": cmd_symmetroid,
    "bps-check": cmd_bps_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--digits", type=int, default=115, help="decimal working precision (>= 30)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--op", help="operator file (path, or data/<name>.op for bundled ones)")
    common.add_argument("--table", help="reference table id")
    common.add_argument("--output", "-o", help="write the JSON report here instead of stdout")
    common.add_argument("--timings", action="store_true", help="include wall-clock timings (makes reports non-deterministic)")

    parser = argparse.ArgumentParser(prog="pfwb", description="Exact and high-precision period and lattice checks.")
    parser.add_argument("--version", action="version", version=f"pfwb {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "monodromy":
            p.add_argument("--no-connection", action="store_true", help="skip U_xz and the infinity-side matrices")
        elif name == "griffiths":
            p.add_argument("--points", type=int, default=5)
            p.add_argument("--threshold-digits", type=int, default=80)
        elif name == "fm-count":
            p.add_argument("n", type=int)
        elif name == "plucker":
            p.add_argument("--points", type=int, default=1000)
            p.add_argument("--trials", type=int, default=10**5)
            p.add_argument("--prime", type=int, default=101)
    return parser


def execute(command: str, cfg: RunConfig, args) -> tuple[int, dict]:
    """Run one subcommand; returns (exit code, report)."""
    from .monodromy import MissingMatrixError, NonIntegralError, UnknownTableError
    from .ode import ParseError
    from .problems import OperatorDiagnosticError

    report = {"schema": SCHEMA, "command": command, "version": __version__, "config": cfg.to_json()}
    try:
        body, checks = COMMANDS[command](cfg, args)
    except (NonIntegralError, OperatorDiagnosticError) as exc:
        records = getattr(exc, "offending", None) or getattr(exc, "records", None) or []
        records = [r.to_json() if hasattr(r, "to_json") else r for r in records]
        report.update({"pass": False, "error": {"type": type(exc).__name__, "message": str(exc), "records": records}})
        return EXIT_FAILED, report
    except (InputError, ParseError, FileNotFoundError, UnknownTableError, MissingMatrixError, DataError, KeyError) as exc:
        report.update({"pass": False, "error": {"type": type(exc).__name__, "message": str(exc).strip("'\"")}})
        return EXIT_INPUT, report
    report.update(body)
    report["checks"] = checks
    report["pass"] = _checks_passed(checks)
    report["failures"] = [c for c in checks if not c["pass"]]
    return (EXIT_OK if report["pass"] else EXIT_FAILED), report


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig(args.digits, args.seed, args.op, args.table, args.output, args.timings)
    except InputError as exc:
        report = {"schema": SCHEMA, "command": args.command, "pass": False,
                  "error": {"type": "InputError", "message": str(exc)}}
        code = EXIT_INPUT
    else:
        code, report = execute(args.command, cfg, args)
    text = json.dumps(report, indent=1, ensure_ascii=False, default=str)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    return code


if __name__ == "__main__":
    raise SystemExit(main())
