import random
from fractions import Fraction

import pytest
import sympy
from sympy.combinatorics import Permutation
from hypothesis import given, settings
from hypothesis import strategies as st

from pfwb.grassmann import (INDEX2, NotOnVarietyError, NotSquareError, PrimeField, RationalField, SymmetricPair,
                            consequence_check, dual, epsilon, generic_check, generic_point, on_variety,
                            plucker_generators, random_square_det_symmetric, rank, rank3_slice_f3, symmetroid_identity,
                            symmetroid_matrix, symmetroid_rhs, variety_search)

Q = RationalField()
F101 = PrimeField(101)


def diag(*d):
    return [[d[i] if i == j else 0 for j in range(4)] for i in range(4)]


def test_epsilon_examples():
    assert epsilon((1, 2), (3, 4)) == 1
    assert epsilon((1, 3), (2, 4)) == -1
    assert dual((1, 2)) == (3, 4)
    with pytest.raises(ValueError):
        epsilon((1, 2), (2, 3))


@pytest.mark.parametrize("I", INDEX2)
def test_epsilon_matches_sympy_parity(I):
    perm = Permutation([k - 1 for k in I + dual(I)])
    assert epsilon(I, dual(I)) == (1 if perm.is_even else -1)


def test_generator_count():
    assert len(plucker_generators(SymmetricPair(diag(1, 1, 1, 1), diag(1, 1, 1, 1)))) == 36


def test_identity_pair():
    assert on_variety(SymmetricPair(diag(1, 1, 1, 1), diag(1, 1, 1, 1)))


def test_diag_pair():
    assert on_variety(SymmetricPair(diag(2, 2, 1, 1), diag(1, 1, 2, 2)))


def test_off_variety_pair():
    p = SymmetricPair(diag(1, 1, 1, 2), diag(1, 1, 1, 2))
    gens = plucker_generators(p)
    assert gens[0] == -1  # I = J = {1,2}: 1 - |w_{34,34}| = 1 - 2
    assert not on_variety(p)
    with pytest.raises(NotOnVarietyError):
        consequence_check(p)


def test_asymmetric_rejected():
    m = diag(1, 1, 1, 1)
    m[0][1] = 5
    with pytest.raises(ValueError):
        SymmetricPair(m, diag(1, 1, 1, 1))


def test_generic_point_examples():
    p = generic_point(diag(1, 1, 1, 1))
    assert p.v == tuple(map(tuple, diag(1, 1, 1, 1)))
    m = generic_point(diag(1, 1, 1, 1), -1)
    assert m.v == tuple(map(tuple, diag(-1, -1, -1, -1)))
    p = generic_point(diag(1, 1, 2, 2))
    assert p.v == tuple(map(tuple, diag(2, 2, 1, 1)))
    with pytest.raises(NotSquareError):
        generic_point(diag(1, 1, 1, 2))


def test_degenerate_pairs():
    zero = SymmetricPair(diag(0, 0, 0, 0), diag(0, 0, 0, 0))
    assert consequence_check(zero).all_hold
    e1 = SymmetricPair(diag(1, 0, 0, 0), diag(0, 0, 0, 0))
    rep = consequence_check(e1)
    assert rep.all_hold and rep.ranks == (1, 0)


@given(st.integers(0, 10**6))
@settings(max_examples=40, deadline=None)
def test_generic_points_over_q(seed):
    rng = random.Random(seed)
    w = random_square_det_symmetric(Q, rng)
    for sign in (1, -1):
        p = generic_point(w, sign, Q)
        assert on_variety(p, Q)
        assert consequence_check(p, Q).all_hold


@given(st.integers(0, 10**6))
@settings(max_examples=80, deadline=None)
def test_generic_points_over_f101(seed):
    p = generic_point(random_square_det_symmetric(F101, random.Random(seed)), 1, F101)
    assert all(g == 0 for g in plucker_generators(p, F101))
    assert consequence_check(p, F101).all_hold


def test_generic_check_counts():
    rep = generic_check(F101, 100, seed=3)
    assert rep.passed and rep.count == 100


def test_rank_over_fields():
    assert rank(Q, diag(1, 2, 0, 0)) == 2
    assert rank(PrimeField(3), diag(1, 3, 3, 1)) == 2


def test_rank3_search_small():
    res = variety_search(101, 500, 3, seed=1)
    assert res.found == () and res.skipped == 0


def test_rank4_sanity_search_finds_points():
    res = variety_search(101, 50, 4, seed=0)
    assert res.found
    assert all(rank(F101, p.v) == 4 for p in res.found)


def test_rank2_points_have_rank2_partner():
    res = variety_search(7, 30, 2, seed=0, stop_after=20)
    assert res.found
    for p in res.found:
        assert rank(PrimeField(7), p.w) == 2


def test_f3_slice_empty():
    res = rank3_slice_f3()
    assert res.trials > 0 and res.found == ()


def test_prime_field_validation():
    with pytest.raises(ValueError):
        PrimeField(9)
    assert PrimeField(7)(Fraction(1, 2)) == 4


def test_symmetroid_identity_symbolic():
    assert symmetroid_identity()


def test_symmetroid_specializations():
    z = sympy.symbols("z1:6")
    assert sympy.expand(symmetroid_matrix(0).det() - z[0] * z[1] * z[2] * z[3] * z[4]) == 0
    assert symmetroid_identity(0)
    ones = [1] * 5
    assert symmetroid_matrix(1, ones).det() == 33
    assert symmetroid_rhs(1, ones) == 33


@given(st.integers(-5, 5), st.lists(st.integers(-4, 4), min_size=5, max_size=5))
@settings(max_examples=25, deadline=None)
def test_symmetroid_at_integer_points(a, z):
    assert symmetroid_matrix(a, z).det() == symmetroid_rhs(a, z)
