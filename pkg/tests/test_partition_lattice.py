from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from prlab.errors import ParseError
from prlab.partition_lattice import (
    SetPartition,
    bell,
    clear_caches,
    delta,
    enumerate_partitions,
    format_partition,
    join,
    meet,
    mobius_closed_form,
    mobius_recursive,
    parse_partition,
    partition_of_tuple,
    refines,
    stirling2,
)


def brute_partitions(k):
    """Every set partition of 1..k as a frozenset of frozensets."""
    def rec(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for sub in rec(rest):
            for i in range(len(sub)):
                yield sub[:i] + [[first] + sub[i]] + sub[i + 1:]
            yield [[first]] + sub

    return {frozenset(frozenset(b) for b in p) for p in rec(list(range(1, k + 1)))}


def as_blocks(p: SetPartition):
    return frozenset(frozenset(b) for b in p.blocks)


rgs = st.integers(1, 7).flatmap(
    lambda k: st.lists(st.integers(0, k - 1), min_size=k, max_size=k).map(lambda xs: partition_of_tuple(xs))
)


def test_bell_and_stirling_values():
    assert [bell(k) for k in range(1, 9)] == [1, 2, 5, 15, 52, 203, 877, 4140]
    assert stirling2(4, 2) == 7
    assert stirling2(7, 3) == 301
    assert stirling2(5, 0) == 0
    assert stirling2(0, 0) == 1


@pytest.mark.parametrize("k", range(1, 7))
def test_enumeration_matches_brute_force(k):
    lat = enumerate_partitions(k)
    assert {as_blocks(p) for p in lat.partitions} == brute_partitions(k)
    assert lat.size == bell(k)


def test_order_is_rank_then_lex():
    assert [str(p) for p in enumerate_partitions(3).partitions] == ["1|2|3", "12|3", "13|2", "1|23", "123"]
    lat = enumerate_partitions(5)
    ranks = list(lat.rank)
    assert ranks == sorted(ranks)


def test_parse_and_format():
    p = parse_partition("1268|34|57", 8)
    assert p.blocks == ((1, 2, 6, 8), (3, 4), (5, 7))
    assert format_partition(p) == "1268|34|57"
    assert parse_partition("1,2,6,8|3,4|5,7", 8) == p
    big = SetPartition.from_blocks([[1, 10], [2, 3, 4, 5, 6, 7, 8, 9]])
    assert format_partition(big) == "1,10|2,3,4,5,6,7,8,9"
    assert parse_partition(format_partition(big), 10) == big


@pytest.mark.parametrize("bad", ["12|2", "12", "1|2|4", "", "a|b"])
def test_parse_rejects(bad):
    with pytest.raises(ParseError):
        parse_partition(bad, 3)


def test_refinement_example():
    a = parse_partition("16|28|34|5|7", 8)
    b = parse_partition("1268|34|57", 8)
    assert refines(a, b) and not refines(b, a)
    assert mobius_closed_form(a, b) == 1


def test_tuple_partition_and_delta():
    assert str(partition_of_tuple("abba")) == "14|23"
    pi = parse_partition("12|3", 3)
    assert delta(pi, (5, 5, 1)) == 1
    assert delta(pi, (5, 5, 5)) == 1
    assert delta(pi, (5, 4, 5)) == 0


@given(rgs, st.data())
@settings(max_examples=200, deadline=None)
def test_meet_and_join_are_bounds(a, data):
    b = partition_of_tuple(data.draw(st.lists(st.integers(0, a.k - 1), min_size=a.k, max_size=a.k)))
    m, j = meet(a, b), join(a, b)
    assert refines(m, a) and refines(m, b)
    assert refines(a, j) and refines(b, j)
    lat = enumerate_partitions(a.k)
    for c in lat.partitions:
        if refines(c, a) and refines(c, b):
            assert refines(c, m)
        if refines(a, c) and refines(b, c):
            assert refines(j, c)


@pytest.mark.parametrize("k", range(1, 8))
def test_zeta_times_mobius_is_identity(k):
    lat = enumerate_partitions(k)
    prod = lat.zeta_matrix().astype(np.int64) @ lat.mobius.astype(np.int64)
    assert np.array_equal(prod, np.eye(lat.size, dtype=np.int64))


@pytest.mark.parametrize("k", range(1, 8))
def test_mu_bottom_top(k):
    lat = enumerate_partitions(k)
    assert lat.mu(lat.bottom, lat.top) == (-1) ** (k - 1) * math.factorial(k - 1)


def test_three_mobius_routes_agree_on_pi5():
    lat = enumerate_partitions(5)
    parts = lat.partitions
    for i, j in itertools.product(range(lat.size), repeat=2):
        if lat.leq[i, j]:
            assert mobius_closed_form(parts[i], parts[j]) == mobius_recursive(lat, parts[i], parts[j]) == lat.mu(i, j)
        else:
            assert lat.mu(i, j) == 0


def test_covers_raise_rank_by_one():
    lat = enumerate_partitions(4)
    for i, j in lat.covers():
        assert lat.rank[j] == lat.rank[i] + 1


def test_rank_members_count_stirling():
    lat = enumerate_partitions(6)
    for r in range(6):
        assert len(lat.rank_members(r)) == stirling2(6, 6 - r)


def test_leq_is_read_only():
    with pytest.raises(ValueError):
        enumerate_partitions(3).leq[0, 1] = False


def test_clear_caches_rebuilds():
    a = enumerate_partitions(4)
    clear_caches()
    b = enumerate_partitions(4)
    assert a is not b
    assert np.array_equal(a.mobius, b.mobius)
