from fractions import Fraction

import gmpy2
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfwb.continuation import (Continuator, PathSpec, StepUnderflowError, identity, loop_path, loop_transfer,
                               mat_inverse, mat_mul, monodromy_in_frame, upper_path)
from pfwb.data import resolve
from pfwb.ode import adaptive_eval, frobenius_mum_basis, load_operator

BITS = 256
BASE = Fraction(1, 64)


@pytest.fixture(scope="module")
def k3():
    return load_operator(resolve("k3_deg12.op"))


@pytest.fixture(scope="module")
def cont(k3):
    return Continuator(k3, BITS)


@pytest.fixture(scope="module")
def frame(k3):
    _, V, _ = adaptive_eval(frobenius_mum_basis(k3), BASE, BITS, 70)
    return V


def max_dev_from_identity(m):
    return max(float(abs(m[i][j] - (1 if i == j else 0))) for i in range(len(m)) for j in range(len(m)))


def test_single_waypoint_is_identity(cont):
    T = cont.transfer(PathSpec((BASE,)))
    assert max_dev_from_identity(T.matrix) == 0
    assert T.error_bound == 0


def test_path_then_reverse_is_identity(cont):
    p = upper_path(BASE, Fraction(1, 40), 0.01)
    T = cont.transfer(p.then(p.reversed()))
    assert max_dev_from_identity(T.matrix) < 10.0 ** -(BITS / 3.33 - 10)


def test_loop_around_ordinary_point_is_identity(cont):
    approach, circle = loop_path(BASE, 0.02 + 0.01j, [0, 0.0294])
    T = cont.transfer(approach.then(circle).then(approach.reversed()))
    assert max_dev_from_identity(T.matrix) < 1e-60


def test_transfer_agrees_with_series(k3, cont, frame):
    # continuing the local basis from 1/64 to 1/50 must agree with summing the series at 1/50
    end = Fraction(1, 50)
    T = cont.transfer(PathSpec((BASE, end)))
    _, V_end, _ = adaptive_eval(frobenius_mum_basis(k3), end, BITS, 70)
    with gmpy2.context(precision=BITS + 48):
        moved = mat_mul([list(r) for r in T.matrix], frame)
        diff = max(abs(moved[i][j] - V_end[i][j]) for i in range(3) for j in range(3))
    assert diff < 1e-60


def test_loop_around_zero_is_unipotent(cont, frame):
    T = loop_transfer(cont, BASE, 0, [0, 0.0294, 33.97])
    Mw = monodromy_in_frame(T, frame)
    with gmpy2.context(precision=BITS + 48):
        two_pi_i = gmpy2.mpc(0, 2 * gmpy2.const_pi())
        n = [two_pi_i ** (-k) for k in range(3)]
        normalized = [[n[i] * Mw[i][j] / n[j] for j in range(3)] for i in range(3)]
    expected = [[1, 0, 0], [1, 1, 0], [1, 2, 1]]
    dev = max(float(abs(normalized[i][j] - expected[i][j])) for i in range(3) for j in range(3))
    assert dev < 1e-60
    assert T.error_bound < 1e-60


def test_path_through_singular_point_is_rejected(cont):
    with pytest.raises(StepUnderflowError):
        cont.transfer(PathSpec((BASE, Fraction(0))))


def test_loop_base_inside_circle_rejected():
    with pytest.raises(ValueError):
        loop_path(0.001, 0, [0, 0.0294])


def test_upper_path_shape():
    p = upper_path(1, 5)
    assert p.waypoints == (1, 1 + 2j, 5 + 2j, 5)
    assert p.reversed().waypoints == (5, 5 + 2j, 1 + 2j, 1)


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=9, max_size=9))
@settings(max_examples=40, deadline=None)
def test_mat_inverse(entries):
    with gmpy2.context(precision=200):
        a = [[gmpy2.mpc(entries[3 * i + j]) + (5 if i == j else 0) * 10 for j in range(3)] for i in range(3)]
        prod = mat_mul(a, mat_inverse(a))
        I = identity(3)
        assert max(abs(prod[i][j] - I[i][j]) for i in range(3) for j in range(3)) < 1e-50
