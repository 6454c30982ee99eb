from __future__ import annotations

import itertools

import pytest

from prlab.bounds import bound_linear_equation, bound_obtuse
from prlab.errors import CheckFailure, ConfigError, SizeLimitError
from prlab.ffield import FieldSpec
from prlab.search import (
    SearchConfig,
    build_hypergraph,
    check_avoids,
    check_avoids_incremental,
    edges_translation_invariant,
    max_avoiding_set,
    naive_max_avoiding,
    sandwich_report,
    translation_invariant,
)
from prlab.tensors import PropertySpec, cap_set_property

F3, F5 = FieldSpec(3), FieldSpec(5)


def brute_max(spec):
    """Largest avoiding subset by trying subsets from the largest size down."""
    pts = list(itertools.product(range(spec.field.q), repeat=spec.n))
    for size in range(len(pts), 0, -1):
        for A in itertools.combinations(pts, size):
            if check_avoids(A, spec):
                return size
    return 0


@pytest.mark.parametrize("n,want", [(1, 2), (2, 4), (3, 9)])
def test_cap_set_maxima(n, want):
    res = max_avoiding_set(SearchConfig(cap_set_property(n)))
    assert res.size == want
    assert res.proof_status == "exact-optimal"
    assert res.witness_check == "pass"
    assert check_avoids(res.best_set, cap_set_property(n))


@pytest.mark.parametrize(
    "spec",
    [
        cap_set_property(2),
        PropertySpec("acute_angle", 3, F3, 2),
        PropertySpec("obtuse_angle", 3, F3, 2),
        PropertySpec("right_k_configuration", 3, F3, 2),
        PropertySpec("acute_angle", 3, F5, 1),
        PropertySpec("balanced_linear_equation", 3, F5, 1, coefficients=(1, 1, 3), max_values=2),
    ],
    ids=lambda s: s.kind,
)
def test_branch_and_bound_matches_oracles(spec):
    res = max_avoiding_set(SearchConfig(spec))
    assert res.size == naive_max_avoiding(build_hypergraph(spec)) == brute_max(spec)


@pytest.mark.parametrize("ordering", ["degree", "lex", "reverse"])
@pytest.mark.parametrize("sym", [True, False])
def test_orderings_and_symmetry_agree(ordering, sym):
    res = max_avoiding_set(SearchConfig(cap_set_property(3), ordering=ordering, symmetry_reduction=sym))
    assert res.size == 9


def test_thread_count_does_not_change_result():
    for spec in (cap_set_property(3), PropertySpec("acute_angle", 3, F5, 2)):
        one = max_avoiding_set(SearchConfig(spec, threads=1))
        two = max_avoiding_set(SearchConfig(spec, threads=2))
        assert one.to_json() == two.to_json()


def test_heuristics_are_lower_bounds_and_seeded():
    spec = cap_set_property(3)
    greedy = max_avoiding_set(SearchConfig(spec, mode="greedy"))
    rr1 = max_avoiding_set(SearchConfig(spec, mode="random_restart", seed=5))
    rr2 = max_avoiding_set(SearchConfig(spec, mode="random_restart", seed=5))
    assert greedy.size <= 9 and rr1.size <= 9
    assert rr1.best_set == rr2.best_set
    assert greedy.proof_status == "lower-bound-only"


def test_maximum_is_monotone_in_dimension():
    sizes = [max_avoiding_set(SearchConfig(PropertySpec("acute_angle", 3, F3, n))).size for n in (1, 2)]
    assert sizes[0] <= sizes[1]
    caps = [max_avoiding_set(SearchConfig(cap_set_property(n))).size for n in (1, 2, 3)]
    assert caps == sorted(caps)


def test_node_budget_reports_incomplete():
    res = max_avoiding_set(SearchConfig(cap_set_property(3), node_budget=5, symmetry_reduction=False))
    assert res.proof_status == "lower-bound-only"
    assert check_avoids(res.best_set, cap_set_property(3))


def test_incremental_check_agrees_with_full_scan():
    spec = cap_set_property(2)
    A = [(0, 0), (0, 1), (1, 0)]
    assert check_avoids_incremental(A, (1, 1), spec).passed == check_avoids(A + [(1, 1)], spec).passed
    assert not check_avoids_incremental(A, (0, 2), spec).passed


def test_translation_invariance_detection():
    assert translation_invariant(cap_set_property(2))
    assert edges_translation_invariant(build_hypergraph(cap_set_property(2)), F3)
    # Over F_5^2 the zero vector, (1,2) and (2,4) are pairwise orthogonal; translates are not.
    orth = PropertySpec("pairwise_orthogonal", 3, F5, 2)
    assert not edges_translation_invariant(build_hypergraph(orth), F5)


def test_non_invariant_property_skips_symmetry():
    spec = PropertySpec("pairwise_orthogonal", 3, F5, 2)
    res = max_avoiding_set(SearchConfig(spec))
    assert not res.symmetry_used
    assert res.size == naive_max_avoiding(build_hypergraph(spec))


def test_sandwich():
    acute = SearchConfig(PropertySpec("acute_angle", 3, F3, 2))
    rep = sandwich_report(acute, bound_obtuse(2, 3))
    assert rep["consistent"] and rep["found"] == 4 and rep["bound_value"] == 19
    for n in (1, 2, 3):
        rep = sandwich_report(SearchConfig(cap_set_property(n)), bound_linear_equation(n, 3, 3, 3))
        assert rep["consistent"]
    with pytest.raises(CheckFailure):
        sandwich_report(acute, 3)


def test_limits():
    with pytest.raises(SizeLimitError):
        naive_max_avoiding(build_hypergraph(PropertySpec("acute_angle", 3, FieldSpec(7), 2)))
    with pytest.raises(SizeLimitError):
        build_hypergraph(cap_set_property(5))
    with pytest.raises(ConfigError):
        SearchConfig(cap_set_property(2), mode="annealing")


def test_config_json_round_trip():
    cfg = SearchConfig(cap_set_property(2), seed=11, ordering="lex")
    assert SearchConfig.from_json(cfg.to_json()) == cfg
