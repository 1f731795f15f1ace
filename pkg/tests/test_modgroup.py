from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pfwb.exact import SQRT2, SQRT3, SQRT6, QuadExt
from pfwb.modgroup import (IDENTITY, Mat2Q23, disc_action_trivial_up_to_sign, disc_image_order, generator,
                           preserves_sigma6, qmat_mul, r_identities, r_map, to_integer_matrix, word)
from reference_values import K3

I3 = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
words = st.lists(st.sampled_from(["T0", "S1", "S2", "T0^-1", "S1^-1", "S2^-1"]), max_size=6)


def test_generators():
    assert generator("T0") == Mat2Q23(1, 1, 0, 1)
    assert generator("S1") == Mat2Q23(0, -SQRT6 / 6, SQRT6, 0)
    assert generator("S2") * generator("S1") == Mat2Q23(SQRT3, SQRT3 / 3, 2 * SQRT3, SQRT3)
    with pytest.raises(KeyError):
        generator("S7")


def test_determinant_enforced():
    with pytest.raises(ValueError):
        Mat2Q23(1, 1, 1, 1)


def test_r_map_examples():
    assert to_integer_matrix(r_map(generator("T0").inverse())) == K3["M0"]
    assert to_integer_matrix(r_map(IDENTITY)) == I3
    assert to_integer_matrix(r_map(generator("S1")), -1) == K3["Ma1"]


def test_r_identities_hold():
    results = r_identities(K3)
    assert len(results) == 6
    assert all(r["pass"] for r in results), results


def test_r_identities_detect_a_wrong_table():
    bad = dict(K3)
    bad["U"] = K3["Uinv"]
    assert not all(r["pass"] for r in r_identities(bad))


@given(words, words)
def test_anti_homomorphism(a, b):
    g, h = word(a), word(b)
    assert r_map(g * h) == qmat_mul(r_map(h), r_map(g))


@given(words)
def test_image_preserves_sigma6(w):
    assert preserves_sigma6(r_map(word(w)))


@given(words)
def test_sign_invariance(w):
    g = word(w)
    assert r_map(g) == r_map(-g)


def test_disc_action_pattern():
    T0, S1, S2 = generator("T0"), generator("S1"), generator("S2")
    assert disc_action_trivial_up_to_sign(r_map(T0)) == (True, False)
    assert disc_action_trivial_up_to_sign(r_map(S1)) == (False, True)
    assert disc_action_trivial_up_to_sign(r_map((S2 * S1) * (S2 * S1))) == (True, False)
    assert disc_action_trivial_up_to_sign(r_map(S2 * S1)) == (False, False)


def test_disc_image_order():
    T0, S1, S2 = generator("T0"), generator("S1"), generator("S2")
    gens = [to_integer_matrix(r_map(T0)), to_integer_matrix(r_map(S1), -1), to_integer_matrix(r_map(S1 * S2))]
    assert disc_image_order(gens) == 2
    assert disc_image_order(gens[:1]) == 1
    assert disc_image_order([]) == 1


def test_non_integer_entry_rejected():
    with pytest.raises(ValueError):
        to_integer_matrix([[QuadExt(Fraction(1, 2))]])
    with pytest.raises(ValueError):
        to_integer_matrix([[SQRT2]])
