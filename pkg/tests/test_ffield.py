from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prlab.errors import FieldError
from prlab.ffield import (
    FieldElement,
    FieldSpec,
    FieldVector,
    inner_product,
    is_irreducible,
    quadratic_residues,
    residue_product_sign,
    vector_codes,
)

FIELDS = [FieldSpec(3), FieldSpec(5), FieldSpec(7), FieldSpec(3, 2), FieldSpec(5, 2), FieldSpec(3, 3)]


@pytest.mark.parametrize("F", FIELDS, ids=repr)
def test_every_nonzero_element_has_an_inverse(F):
    for a in range(1, F.q):
        assert F.mul(a, F.inv(a)) == 1


@pytest.mark.parametrize("F", FIELDS, ids=repr)
@given(data=st.data())
@settings(max_examples=100, deadline=None)
def test_ring_axioms(F, data):
    a, b, c = (data.draw(st.integers(0, F.q - 1)) for _ in range(3))
    assert F.add(a, b) == F.add(b, a)
    assert F.mul(a, b) == F.mul(b, a)
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
    assert F.add(a, F.neg(a)) == 0


def test_small_examples():
    F7 = FieldSpec(7)
    assert F7.inv(3) == 5
    F49 = FieldSpec(7, 2)
    assert all(F49.pow(x, 48) == 1 for x in range(1, 49))


def test_residues():
    assert {x.to_json() for x in quadratic_residues(FieldSpec(5))} == {1, 4}
    assert {x.to_json() for x in quadratic_residues(FieldSpec(3))} == {1}
    assert len(FieldSpec(3, 2).residue_codes) == 4


@pytest.mark.parametrize("F", FIELDS, ids=repr)
def test_euler_criterion(F):
    for x in range(1, F.q):
        assert (x in F.residue_codes) == (F.pow(x, (F.q - 1) // 2) == 1)


@pytest.mark.parametrize("F", FIELDS, ids=repr)
def test_residue_product_sign_is_plus_or_minus_one(F):
    for codes in (F.residue_codes, F.nonresidue_codes):
        s = residue_product_sign([FieldElement(F, c) for c in codes], F)
        assert s == 1 or s == -1


def test_prime_subfield_embedding():
    F9 = FieldSpec(3, 2)
    assert F9.element(4) == F9.element(1)
    assert FieldElement(F9, 4).coeffs == (1, 1)


def test_bad_fields_rejected():
    with pytest.raises(FieldError):
        FieldSpec(4)
    with pytest.raises(FieldError):
        FieldSpec(2)
    with pytest.raises(FieldError):
        FieldSpec(3, 2, modulus=(1, 0, 1, 0))
    with pytest.raises(FieldError):
        FieldSpec(5, 2, modulus=(1, 0, 1))  # x^2 + 1 splits mod 5
    assert is_irreducible((1, 0, 1), 3)


def test_mixed_fields_refuse_arithmetic():
    with pytest.raises(FieldError):
        FieldSpec(3).element(1) + FieldSpec(5).element(1)


def test_vectors():
    F = FieldSpec(5)
    u = FieldVector.of(F, [1, 2])
    v = FieldVector.of(F, [3, 4])
    assert inner_product(u, v) == F.element(11)
    assert len(vector_codes(F, 2)) == 25


def test_json_round_trip():
    for F in FIELDS:
        assert FieldSpec.from_json(F.to_json()) == F
