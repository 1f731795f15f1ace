import math
from fractions import Fraction

import gmpy2
import mpmath
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from pfwb.data import resolve
from pfwb.exact import SQRT2, QuadExt, RatPoly
from pfwb.ode import (NotMUMError, OutsideDiskError, ParseError, ThetaOperator, adaptive_eval, eval_basis,
                      extend_basis, frobenius_mum_basis, frobenius_residual, fuchs_relation, load_operator,
                      parse_operator, singular_data, symbol_roots)

K3_TEXT = "theta^3 - x*(2*theta+1)*(17*theta^2+17*theta+5) + x^2*(theta+1)^3"


@pytest.fixture(scope="module")
def k3():
    return load_operator(resolve("k3_deg12.op"))


@pytest.fixture(scope="module")
def rodland():
    return load_operator(resolve("data/rodland.op"))


def test_parse_k3(k3):
    op = parse_operator(K3_TEXT)
    assert op == k3 or op.terms == k3.terms
    assert op.order == 3
    assert op.P(0) == RatPoly([0, 0, 0, 1])
    assert op.P(1) == RatPoly([-5, -27, -51, -34])
    assert op.P(2) == RatPoly([1, 3, 3, 1])


def test_parse_variants():
    assert parse_operator("theta").order == 1
    a = parse_operator("θ^2 − x*(θ+1)**2")
    b = parse_operator("theta_x^2 - x*(theta+1)^2")
    assert a.terms == b.terms


def test_parse_rodland(rodland):
    assert rodland.order == 4
    assert rodland.x_degree == 5
    assert rodland.P(0) == RatPoly([0, 0, 0, 0, 9])
    assert rodland.P(5) == RatPoly([1, 4, 6, 4, 1])
    assert "transcription" in rodland.metadata


@pytest.mark.parametrize("text, pos", [("theta^3 + ", 9), ("theta^ + 1", 7), ("theta $ x", 6)])
def test_parse_errors_carry_position(text, pos):
    with pytest.raises(ParseError) as exc:
        parse_operator(text)
    assert exc.value.position == pos


def test_mixed_monomial_rejected():
    with pytest.raises(ParseError, match="x\\^j\\*P\\(theta\\)"):
        parse_operator("theta*x")


@st.composite
def operators(draw):
    r = draw(st.integers(1, 4))
    J = draw(st.integers(1, 3))
    terms = {0: RatPoly([0] * r + [draw(st.integers(1, 5))])}
    for j in range(1, J + 1):
        terms[j] = RatPoly(draw(st.lists(st.integers(-20, 20), min_size=1, max_size=r + 1)))
    return ThetaOperator(terms)


@given(operators())
@settings(max_examples=60, deadline=None)
def test_pretty_round_trip(op):
    assert parse_operator(op.pretty()).terms == op.terms


@given(operators())
@settings(max_examples=30, deadline=None)
def test_frobenius_residual_vanishes_below_truncation(op):
    basis = frobenius_mum_basis(op, truncation=2 * op.order + 6)
    for k in range(op.order):
        res = frobenius_residual(basis, k)
        for a, coeffs in res.items():
            assert all(c == 0 for c in coeffs[:basis.truncation]), (k, a)


def test_symbol_roots_k3(k3):
    assert k3.symbol() == RatPoly([1, -34, 1])
    roots = [d["exact"] for d in symbol_roots(k3)]
    assert roots == [17 - 12 * SQRT2, 17 + 12 * SQRT2]


def test_riemann_scheme_k3(k3):
    recs = singular_data(k3)
    assert [r.label() for r in recs][0] == "0"
    assert recs[0].exponents == (0, 0, 0) and recs[0].kind == "MUM"
    assert recs[1].location == QuadExt(17, -12)
    assert sorted(recs[1].exponents) == [0, Fraction(1, 2), 1]
    assert sorted(recs[2].exponents) == [0, Fraction(1, 2), 1]
    assert recs[-1].is_infinity and recs[-1].exponents == (1, 1, 1) and recs[-1].kind == "MUM"
    total, expected = fuchs_relation(k3, recs)
    assert total == expected


def test_riemann_scheme_euler_operator():
    recs = singular_data(parse_operator("theta^3"))
    assert len(recs) == 2
    assert recs[0].exponents == (0, 0, 0)


def test_riemann_scheme_rodland(rodland):
    x = sympy.Symbol("x")
    sym = sum(c * x**k for k, c in enumerate(rodland.symbol().coeffs))
    assert sympy.expand(sym - (x - 3) ** 2 * (x**3 - 289 * x**2 - 57 * x + 1)) == 0
    recs = singular_data(rodland)
    by_label = {r.label(): r for r in recs}
    assert sorted(by_label["3"].exponents) == [0, 1, 3, 4]
    assert by_label["3"].kind == "apparent"
    assert by_label["inf"].exponents == (1, 1, 1, 1)
    cubic = [r for r in recs if not r.is_infinity and r.label() not in ("0", "3")]
    printed = sympy.Poly(1 - 57 * x - 289 * x**2 + x**3, x)
    for r in cubic:
        assert sorted(r.exponents, key=str) == [0, 1, 1, 2]
        with mpmath.workdps(120):
            root = sympy.Float(str(r.location), 120)
        assert abs(printed.eval(root)) < 1e-90
    total, expected = fuchs_relation(rodland, recs)
    assert abs(complex(total) - complex(expected)) < 1e-30


def hand_recursion(n_terms):
    # (n^3) c_n = (2n-1)(17(n-1)^2 + 17(n-1) + 5) c_{n-1} - (n-1)^3 c_{n-2}
    c = [Fraction(1)]
    for n in range(1, n_terms):
        m = n - 1
        val = (2 * m + 1) * (17 * m * m + 17 * m + 5) * c[n - 1]
        if n >= 2:
            val -= (m) ** 3 * c[n - 2]
        c.append(val / n**3)
    return c


def test_k3_w0_series(k3):
    basis = frobenius_mum_basis(k3, truncation=20)
    w0 = list(basis.solutions[0][0])
    assert w0[:3] == [1, 5, 73]
    assert w0 == hand_recursion(20)


def test_k3_log_structure(k3):
    b = frobenius_mum_basis(k3, truncation=16)
    w0 = b.solutions[0][0]
    assert b.solutions[1][1] == w0
    assert b.solutions[2][2] == w0
    assert b.solutions[2][1] == tuple(2 * c for c in b.solutions[1][0])
    assert b.solutions[1][0][0] == 0
    assert b.flags["w1_reg_vanishes_to_order_1"]


def test_z_chart_exponent(k3):
    zb = frobenius_mum_basis(k3, "z", truncation=16)
    assert zb.exponent == 1
    assert zb.solutions[0][0][0] == 1


def test_not_mum():
    with pytest.raises(NotMUMError):
        frobenius_mum_basis(parse_operator("theta*(theta-1) - x"))


def test_evaluation_at_origin_limit(k3):
    b = frobenius_mum_basis(k3, truncation=32)
    V, _ = eval_basis(b, Fraction(1, 10**30), 256)
    assert abs(complex(V[0][0]) - 1) < 1e-25
    # theta w0 = 5x + O(x^2)
    with gmpy2.context(precision=256):
        assert abs(V[1][0] * 10**30 - 5) < 1e-20


def test_truncations_agree(k3):
    b = frobenius_mum_basis(k3)
    b, V1, _ = adaptive_eval(b, Fraction(1, 64), 384, 100)
    V2, _ = eval_basis(extend_basis(b, 2 * b.truncation), Fraction(1, 64), 384)
    with gmpy2.context(precision=400):
        diff = max(abs(V1[i][j] - V2[i][j]) for i in range(3) for j in range(3))
    assert diff < gmpy2.mpfr(10) ** -100


def test_outside_disk(k3):
    b = frobenius_mum_basis(k3)
    with pytest.raises(OutsideDiskError):
        eval_basis(b, Fraction(1, 20), 128)


def test_w0_matches_independent_float_sum(k3):
    b = frobenius_mum_basis(k3, truncation=64)
    x = 1 / 100
    oracle = math.fsum(float(c) * x**n for n, c in enumerate(hand_recursion(64)))
    V, _ = eval_basis(b, Fraction(1, 100), 128)
    assert abs(complex(V[0][0]) - oracle) < 1e-13
