from __future__ import annotations

import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prlab.bounds import (
    block_constant,
    bound_linear_equation,
    bound_obtuse,
    count_bounded_tuples,
    equal_distance_exponent,
    exact_bounded_monomial_count,
    gamma,
    gamma_closed_form_3_3,
    gamma_exponent_identifier,
    gamma_range_check,
    markov_bound,
    orthogonality_exponent,
    partition_rank_upper_bound_linear,
    partition_rank_upper_bound_polynomial,
    right_configuration_exponent,
    subset_constant,
    verify_poset_lemma,
)
from prlab.errors import ConfigError, SizeLimitError
from prlab.ffield import FieldSpec


def phi(x: float, p: int, m: int) -> float:
    c = (p - 1) / m
    return sum(x ** (i - c) for i in range(p))


@given(st.integers(0, 5), st.integers(0, 8))
def test_bounded_tuple_count_matches_brute_force(length, total):
    brute = sum(1 for t in itertools.product(range(total + 1), repeat=length) if sum(t) <= total)
    assert count_bounded_tuples(length, total) == brute


@given(st.integers(0, 4), st.sampled_from([3, 5, 7]), st.integers(0, 12))
@settings(deadline=None)
def test_monomial_count_matches_brute_force(n, p, d):
    brute = sum(1 for t in itertools.product(range(p), repeat=n) if sum(t) <= d)
    assert exact_bounded_monomial_count(n, p, d) == brute


def test_obtuse_values():
    assert bound_obtuse(2, 3).value == 19
    assert bound_obtuse(1, 3).value == 14
    rep = bound_obtuse(3, 3)
    assert rep.value == 25 and rep.ok
    assert "alternative_binomial_differs" in rep.flags
    assert rep.extra["alternative_binomial_value"] == math.comb(7, 4) + 4
    with pytest.raises(ConfigError):
        bound_obtuse(2, 4)


def test_markov_anchor():
    b = markov_bound(2, 3, 3, Fraction(19, 32))
    assert exact_bounded_monomial_count(2, 3, 1) == 3
    assert abs(float(b.value) - 7.5906) < 1e-3


@given(
    st.integers(0, 6),
    st.sampled_from([3, 5, 7]),
    st.sampled_from([3, 4, 5]),
    st.fractions(min_value=Fraction(1, 100), max_value=Fraction(99, 100), max_denominator=100),
)
@settings(max_examples=150, deadline=None)
def test_markov_dominates_count(n, p, m, x):
    assert markov_bound(n, p, m, x).value >= exact_bounded_monomial_count(n, p, n * (p - 1) // m)


def test_markov_exact_when_ratio_is_integral():
    b = markov_bound(2, 7, 3, Fraction(1, 2))
    assert b.exact
    x = Fraction(1, 2)
    assert b.value == (sum(x**i for i in range(7)) / x**2) ** 2


def test_gamma_3_3_closed_form():
    g = gamma(3, 3)
    x, v = gamma_closed_form_3_3()
    assert abs(4 * x * x + x - 2) < 1e-12
    assert abs(g.value - 2.7551) < 1e-3
    assert abs(g.value - v) < 1e-9
    assert g.upper >= Fraction(g.value) - Fraction(1, 10**9)


@pytest.mark.parametrize("p,m", [(5, 3), (7, 4), (11, 10), (13, 6)])
def test_gamma_is_a_grid_minimum(p, m):
    g = gamma(p, m)
    assert 1 <= g.value < p
    grid = min(phi(i / 2000, p, m) for i in range(1, 2000))
    assert g.value <= grid + 1e-9
    assert float(g.upper) >= g.value - 1e-12


def test_gamma_range():
    rep = gamma_range_check([5, 7, 11, 13], range(3, 11))
    assert rep.ok


def test_gamma_rejects_bad_input():
    with pytest.raises(ConfigError):
        gamma(4, 3)
    with pytest.raises(ConfigError):
        gamma(5, 2)


def test_linear_equation_bound():
    rep = bound_linear_equation(2, 3, 3, 3)
    assert abs(float(rep.value) - 22.7718) < 1e-3
    assert rep.ok
    assert partition_rank_upper_bound_linear(2, 3, 3, 3) <= rep.value
    flagged = bound_linear_equation(2, 3, 4, 3)
    assert "coprimality_hypothesis_fails" in flagged.flags


def test_subset_constant():
    assert subset_constant(5) == 25
    for k in range(3, 9):
        brute = sum(1 for r in range(1, k - 1) for _ in itertools.combinations(range(k), r))
        assert subset_constant(k) == brute


def test_block_constant_small_cases():
    assert block_constant(1, 2) == 1
    assert block_constant(3, 2) == Fraction(1) + Fraction(2, 2)


@pytest.mark.parametrize("k", range(2, 21))
def test_identifier_pairs_coefficient(k):
    assert gamma_exponent_identifier(k, 2, 2).value == k + 1
    rep = right_configuration_exponent(k, 5)
    assert rep.ok and not rep.flags and rep.extra["gamma"] == (k + 1) * 4


def test_discrepancy_flags():
    eq = equal_distance_exponent(3, 3)
    assert eq.value == Fraction(26, 3)
    assert "stated_exponent_mismatch" in eq.flags
    orth = orthogonality_exponent(3, 5)
    assert "stated_exponent_mismatch" in orth.flags
    assert orth.extra["derived_value"] == 4 * 4 and orth.extra["stated_value"] == 5 * 4


def test_polynomial_rank_bound():
    rep = partition_rank_upper_bound_polynomial(1, 3, 2, 2, 3)
    assert rep.value == 69 and not rep.flags and rep.ok
    frac = partition_rank_upper_bound_polynomial(1, 3, 3, 1, 3)
    assert "fractional_binomial_index_ceiled" in frac.flags


@pytest.mark.parametrize("k", range(3, 7))
def test_poset_lemma(k):
    for r in range(0, k - 1):
        for field in (None, FieldSpec(3)):
            assert verify_poset_lemma(k, r, field).ok
    assert verify_poset_lemma(4, 1).value == 6


def test_poset_lemma_limits():
    with pytest.raises(SizeLimitError):
        verify_poset_lemma(8, 1)
    with pytest.raises(ConfigError):
        verify_poset_lemma(4, 3)


def test_report_json_is_plain():
    import json

    for rep in (bound_obtuse(2, 3), bound_linear_equation(2, 3, 3, 3), equal_distance_exponent(4, 7), verify_poset_lemma(4, 2)):
        json.dumps(rep.to_json())
