from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prlab.errors import ConfigError
from prlab.ffield import FieldSpec
from prlab.indicators import (
    PartitionFunction,
    condition_four_holds,
    diagonal_value,
    distinctness_generator,
    evaluate_indicator,
    indicator_coefficients,
    indicator_value_lemma,
    naslund_sum_check,
    rank_generator,
    zero_set_generator,
)
from prlab.partition_lattice import (
    SetPartition,
    delta,
    enumerate_partitions,
    parse_partition,
    partition_of_tuple,
    stirling2,
)


def function_strategy(field):
    def build(k):
        parts = enumerate_partitions(k).partitions[:-1]
        vals = st.integers(-4, 4) if field is None else st.integers(0, field.p - 1)
        return st.lists(vals, min_size=len(parts), max_size=len(parts)).map(
            lambda vs: PartitionFunction.from_mapping(k, dict(zip(parts, vs)), field)
        )

    return st.integers(1, 5).flatmap(build)


@pytest.mark.parametrize("field", [None, FieldSpec(3), FieldSpec(7)], ids=["Q", "F3", "F7"])
@given(data=st.data())
@settings(max_examples=60, deadline=None)
def test_indicator_value_matches_closed_form(field, data):
    f = data.draw(function_strategy(field))
    tup = data.draw(st.lists(st.integers(0, 3), min_size=f.k, max_size=f.k))
    assert evaluate_indicator(indicator_coefficients(f), tup) == indicator_value_lemma(f, tup)


def test_indicator_by_direct_definition():
    """Sum over τ ≥ partition(tuple) of c_τ, computed from Möbius sums by hand."""
    f = PartitionFunction.from_mapping(3, {"1|2|3": 2, "12|3": 5})
    c = indicator_coefficients(f)
    assert c.coeffs[parse_partition("1|2|3", 3)] == 2
    assert c.coeffs[parse_partition("12|3", 3)] == 5 - 2
    assert c.coeffs[parse_partition("13|2", 3)] == -2
    for tup in itertools.product(range(2), repeat=3):
        pi = partition_of_tuple(tup)
        want = sum(v for t, v in c.coeffs.items() if delta(t, tup))
        assert evaluate_indicator(c, tup) == want
        if not pi.is_top():
            assert want == f(pi)


def test_distinctness_coefficients_and_diagonal():
    f = distinctness_generator(3)
    c = indicator_coefficients(f)
    assert {str(t): int(v) for t, v in c.coeffs.items()} == {"1|2|3": 1, "12|3": -1, "13|2": -1, "1|23": -1}
    assert diagonal_value(f) == -2
    assert evaluate_indicator(c, "xxx") == -2


@pytest.mark.parametrize("k", range(3, 7))
def test_rank_generator_diagonal_is_stirling(k):
    for r in range(0, k - 1):
        assert diagonal_value(rank_generator(k, r)) == stirling2(k, k - r)


def test_rank_generator_kills_higher_coefficients():
    lat = enumerate_partitions(5)
    c = indicator_coefficients(rank_generator(5, 2))
    for t, v in c.coeffs.items():
        if t.rank < 2:
            assert v == 0
        elif t.rank == 2:
            assert v == 1
        else:
            assert v == 0
    assert len(c.support) == len(lat.rank_members(2))


def test_rank_generator_reduces_in_fields():
    F3 = FieldSpec(3)
    assert diagonal_value(rank_generator(3, 1, F3)) == F3.element(3)
    assert not condition_four_holds(rank_generator(3, 1, F3))
    assert condition_four_holds(rank_generator(3, 1, FieldSpec(5)))


def test_rank_generator_rejects_top_rank():
    with pytest.raises(ConfigError):
        rank_generator(4, 3)


def test_domain_is_enforced():
    with pytest.raises(ConfigError):
        PartitionFunction(3, {SetPartition.bottom(3): Fraction(1)})
    with pytest.raises(ConfigError):
        PartitionFunction.from_mapping(3, {"123": 1})


def test_zero_set_generator_needs_minima():
    lat = enumerate_partitions(4)
    support = [lat.partitions[0], parse_partition("12|3|4", 4)]
    with pytest.raises(ConfigError):
        zero_set_generator(lat, support, {support[1]: 1})
    f = zero_set_generator(lat, support, {support[0]: 1})
    c = indicator_coefficients(f)
    assert c.coeffs[support[1]] == 0


@pytest.mark.parametrize("p", [3, 5, 7])
def test_naslund_sums(p):
    res = naslund_sum_check(p)
    F = FieldSpec(p)
    assert res.generator_matches and res.coefficients_vanish
    assert res.full_sum == F.element(-1)
    assert res.harmonic_sum == F.element(-1)


def test_rational_and_field_results_agree_after_reduction():
    F5 = FieldSpec(5)
    for r in range(0, 3):
        q_val = diagonal_value(rank_generator(4, r))
        assert diagonal_value(rank_generator(4, r, F5)) == F5.element(int(q_val))
