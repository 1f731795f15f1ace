import re

import pytest

from pfwb.data import resolve
from pfwb.ode import load_operator, parse_operator, singular_data
from pfwb.problems import K3_DEG12, RODLAND, OperatorDiagnosticError, check_layout, problem_for_operator, run_monodromy
from reference_values import K3, RODLAND as RODLAND_REF


def as_printed_rodland():
    text = resolve("rodland.op").read_text()
    return parse_operator(re.search(r"#\s*transcription=(.*)", text).group(1), name="rodland")


def test_k3_matches_printed_tables(k3_run):
    mats = k3_run.matrices()
    for name, expected in K3.items():
        assert mats[name] == expected, name
    assert k3_run.passed()


def test_k3_direct_infinity_loop(k3_run):
    assert k3_run.loops["Mtinf_direct"].entries == K3["Mtinf"]


def test_k3_residuals_and_bounds(k3_run):
    assert k3_run.max_residual < 1e-100
    assert all(b < 1e-100 for b in k3_run.error_bounds.values())


def test_rodland_matches_printed_tables(rodland_run):
    mats = rodland_run.matrices()
    for name, expected in RODLAND_REF.items():
        assert mats[name] == expected, name
    assert rodland_run.loops["Mtinf_direct"].entries == RODLAND_REF["Mtinf"]
    assert rodland_run.passed()


def test_rodland_apparent_point(rodland_run):
    assert rodland_run.apparent_residuals["M3"] < 1e-100


def test_as_printed_operator_fails_loudly():
    op = as_printed_rodland()
    with pytest.raises(OperatorDiagnosticError) as exc:
        run_monodromy(RODLAND, 40, op=op)
    msg = str(exc.value)
    assert "symbol roots and exponents" in msg
    assert exc.value.records


def test_layout_rejects_wrong_count():
    op = load_operator(resolve("k3_deg12.op"))
    with pytest.raises(OperatorDiagnosticError, match="expected 5 finite singular points"):
        check_layout(RODLAND, singular_data(op))


def test_problem_lookup():
    assert problem_for_operator(load_operator(resolve("k3_deg12.op"))) is K3_DEG12
    assert problem_for_operator(as_printed_rodland()) is RODLAND
    with pytest.raises(KeyError):
        problem_for_operator(parse_operator("theta^2 - x*(theta+1)^2", name="other"))


def test_report_is_json_ready(k3_run):
    import json
    doc = json.loads(json.dumps(k3_run.to_json()))
    assert doc["matrices"]["U"] == [list(r) for r in K3["U"]]
