"""Largest subsets of F_q^n avoiding a property, found exactly or heuristically.

A set A avoids the property when no tuple of A^k is forbidden.  Whether A
contains a forbidden tuple depends only on the point set the tuple uses, so
the forbidden tuples become a "conflict hypergraph": each edge is the set of
distinct points of some forbidden tuple, and A avoids the property exactly
when it contains no edge.  The exact search is a depth-first branch and
bound over that hypergraph with bitmask sets.
"""

from __future__ import annotations

import itertools
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field, replace
from typing import Any, Sequence

import numpy as np

from .bounds import BoundReport
from .errors import CheckFailure, ConfigError, SizeLimitError, budget
from .ffield import FieldSpec
from .tensors import Point, PropertySpec, _forbidden, _points

MODES = ("exact", "greedy", "random_restart")
ORDERINGS = ("degree", "lex", "reverse")
DEFAULT_MAX_POINTS = 200
NAIVE_MAX_POINTS = 30


@dataclass(frozen=True)
class SearchConfig:
    property: PropertySpec
    mode: str = "exact"
    seed: int = 0
    node_budget: int | None = None
    time_budget: float | None = None
    symmetry_reduction: bool = True
    ordering: str = "degree"
    restarts: int = 64
    max_points: int = DEFAULT_MAX_POINTS
    threads: int = 1

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.ordering not in ORDERINGS:
            raise ConfigError(f"ordering must be one of {ORDERINGS}")
        if self.threads < 1:
            raise ConfigError("threads must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.restarts < 1:
            raise ConfigError("restarts must be positive")

    @property
    def field(self) -> FieldSpec:
        return self.property.field

    @property
    def n(self) -> int:
        return self.property.n

    def to_json(self) -> dict:
        return {
            "property": self.property.to_json(),
            "mode": self.mode,
            "seed": self.seed,
            "node_budget": self.node_budget,
            "time_budget": self.time_budget,
            "symmetry_reduction": self.symmetry_reduction,
            "ordering": self.ordering,
            "restarts": self.restarts,
            "max_points": self.max_points,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SearchConfig":
        known = {"mode", "seed", "node_budget", "time_budget", "symmetry_reduction", "ordering", "restarts", "max_points", "threads"}
        extra = set(obj) - known - {"property"}
        if extra:
            raise ConfigError(f"unknown search config keys {sorted(extra)}")
        if "property" not in obj:
            raise ConfigError("search config needs a property")
        return cls(PropertySpec.from_json(obj["property"]), **{k: obj[k] for k in known if k in obj})


@dataclass
class SearchResult:
    best_set: list[Point]
    size: int
    proof_status: str
    nodes_explored: int
    witness_check: str
    symmetry_used: bool = False
    ordering: list[int] = dc_field(default_factory=list)
    notes: list[str] = dc_field(default_factory=list)

    def to_json(self, field: FieldSpec | None = None) -> dict:
        def enc(pt: Point) -> list:
            if field is None or field.ell == 1:
                return list(pt)
            return [list(field.coeffs(c)) for c in pt]

        return {
            "best_set": [enc(p) for p in self.best_set],
            "size": self.size,
            "proof_status": self.proof_status,
            "nodes_explored": self.nodes_explored,
            "witness_check": self.witness_check,
            "symmetry_used": self.symmetry_used,
            "notes": self.notes,
        }


# -- avoidance checks ------------------------------------------------------------------


@dataclass(frozen=True)
class AvoidResult:
    passed: bool
    witness: tuple[Point, ...] | None = None

    def __bool__(self) -> bool:
        return self.passed


def check_avoids(A: Sequence, spec: PropertySpec, limit: int | None = None) -> AvoidResult:
    """Scan all of A^k with the semantic oracle."""
    pts = [_points(spec, [a] * spec.k)[0] for a in A]
    cap = budget() if limit is None else limit
    if len(pts) ** spec.k > cap:
        raise SizeLimitError(f"|A|^k = {len(pts) ** spec.k} exceeds budget {cap}")
    for tup in itertools.product(pts, repeat=spec.k):
        if _forbidden(spec, tup):
            return AvoidResult(False, tup)
    return AvoidResult(True)


def check_avoids_incremental(A: Sequence, new: Sequence, spec: PropertySpec) -> AvoidResult:
    """Check only the tuples of (A + [new])^k that use ``new``; A is assumed to avoid already."""
    pts = [_points(spec, [a] * spec.k)[0] for a in A]
    x = _points(spec, [new] * spec.k)[0]
    pool = pts + [x]
    for tup in itertools.product(pool, repeat=spec.k):
        if x in tup and _forbidden(spec, tup):
            return AvoidResult(False, tup)
    return AvoidResult(True)


# -- conflict hypergraph ------------------------------------------------------------------


@dataclass
class ConflictHypergraph:
    points: list[Point]
    edges: list[int]  # bitmasks over point indices

    @property
    def size(self) -> int:
        return len(self.points)

    def degrees(self) -> list[int]:
        deg = [0] * self.size
        for e in self.edges:
            for v in _bits(e):
                deg[v] += 1
        return deg


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def all_points(F: FieldSpec, n: int) -> list[Point]:
    return list(itertools.product(range(F.q), repeat=n))


def build_hypergraph(spec: PropertySpec, max_points: int = DEFAULT_MAX_POINTS, limit: int | None = None) -> ConflictHypergraph:
    """Edges are the point sets of forbidden tuples; only inclusion-minimal edges are kept."""
    F = spec.field
    N = F.q**spec.n
    if N > max_points:
        raise SizeLimitError(f"q^n = {N} points exceeds the exact-search limit {max_points}")
    cap = budget() if limit is None else limit
    if N**spec.k > cap:
        raise SizeLimitError(f"scanning {N}^{spec.k} tuples exceeds budget {cap}")
    pts = all_points(F, spec.n)
    found: set[int] = set()
    for idx in itertools.product(range(N), repeat=spec.k):
        mask = 0
        for i in idx:
            mask |= 1 << i
        if mask in found:
            continue
        if _forbidden(spec, tuple(pts[i] for i in idx)):
            found.add(mask)
    edges = sorted(found, key=lambda e: (bin(e).count("1"), e))
    minimal: list[int] = []
    for e in edges:
        if not any(m & e == m for m in minimal):
            minimal.append(e)
    return ConflictHypergraph(pts, minimal)


def _is_independent(mask: int, edges: Sequence[int]) -> bool:
    return not any(e & mask == e for e in edges)


def translation_invariant(spec: PropertySpec, samples: int = 2000, seed: int = 0) -> bool:
    """Sampled check that forbidden(t) == forbidden(t + s) for random tuples t and shifts s."""
    F = spec.field
    rng = np.random.default_rng(seed)
    for trial in range(samples):
        flat = rng.integers(0, F.q, size=(spec.k, spec.n))
        if trial % 2 and spec.k > 1:
            flat[1] = flat[0]
        shift = tuple(rng.integers(0, F.q, size=spec.n).tolist())
        tup = tuple(tuple(r) for r in flat.tolist())
        moved = tuple(tuple(F.add(a, b) for a, b in zip(x, shift)) for x in tup)
        if _forbidden(spec, tup) != _forbidden(spec, moved):
            return False
    return True


def edges_translation_invariant(graph: ConflictHypergraph, F: FieldSpec) -> bool:
    """Exact check that every translate of every minimal edge is again a minimal edge."""
    index = {pt: i for i, pt in enumerate(graph.points)}
    edges = set(graph.edges)
    members = [[graph.points[v] for v in _bits(e)] for e in graph.edges]
    for shift in graph.points:
        for pts in members:
            mask = 0
            for x in pts:
                mask |= 1 << index[tuple(F.add(a, b) for a, b in zip(x, shift))]
            if mask not in edges:
                return False
    return True


# -- exact branch and bound -----------------------------------------------------------------

# Per-process search state; set directly for in-process runs and by the pool initialiser.
_STATE: dict[str, Any] = {}


def _install(pair_edges: list[dict[int, list[int]]], singles: int, node_budget: int | None, deadline: float | None) -> None:
    _STATE.update(pair_edges=pair_edges, singles=singles, node_budget=node_budget, deadline=deadline)


def _prepare(graph: ConflictHypergraph, order: list[int]) -> tuple[list[dict[int, list[int]]], int]:
    """Re-index the hypergraph by search order; group each vertex's edges by a second member.

    ``pair_edges[u][v]`` lists masks of e minus u for edges e containing u and v.
    After adding v to the current set C, u stays addable iff none of those masks
    is inside C + v.  Singleton edges forbid a vertex outright.
    """
    pos = {v: i for i, v in enumerate(order)}
    N = len(order)
    pair_edges: list[dict[int, list[int]]] = [dict() for _ in range(N)]
    singles = 0
    for e in graph.edges:
        members = [pos[v] for v in _bits(e)]
        if len(members) == 1:
            singles |= 1 << members[0]
            continue
        m = 0
        for v in members:
            m |= 1 << v
        for u in members:
            rest = m & ~(1 << u)
            for v in members:
                if v != u:
                    pair_edges[u].setdefault(v, []).append(rest)
    return pair_edges, singles


class _Budget(Exception):
    pass


def _dfs_subproblem(args: tuple[int, list[int], int, int]) -> tuple[int, int, int, bool]:
    """Best set extending ``start`` with vertices from ``cand``; returns (size, mask, nodes, complete).

    Only sets strictly larger than ``floor`` are reported; size 0 means none found.
    """
    start, cand, start_size, floor = args
    pair_edges = _STATE["pair_edges"]
    node_budget = _STATE["node_budget"]
    deadline = _STATE["deadline"]
    best = [floor, 0]
    nodes = [0]

    def dfs(C: int, size: int, P: list[int]) -> None:
        nodes[0] += 1
        if node_budget is not None and nodes[0] > node_budget:
            raise _Budget
        if deadline is not None and nodes[0] % 4096 == 0 and time.monotonic() > deadline:
            raise _Budget
        if size > best[0]:
            best[0], best[1] = size, C
        L = len(P)
        for i, v in enumerate(P):
            if size + L - i <= best[0]:
                return
            C2 = C | (1 << v)
            nxt = []
            for u in P[i + 1:]:
                ms = pair_edges[u].get(v)
                if ms is None or all(m & C2 != m for m in ms):
                    nxt.append(u)
            dfs(C2, size + 1, nxt)

    complete = True
    try:
        dfs(start, start_size, cand)
    except _Budget:
        complete = False
    found = best[0] if best[1] else 0
    return found, best[1], nodes[0], complete


def _order(graph: ConflictHypergraph, how: str, zero_first: bool) -> list[int]:
    N = graph.size
    if how == "lex":
        order = list(range(N))
    elif how == "reverse":
        order = list(range(N - 1, -1, -1))
    else:
        deg = graph.degrees()
        order = sorted(range(N), key=lambda v: (deg[v], v))
    if zero_first:
        order.remove(0)
        order.insert(0, 0)
    return order


def _greedy(graph: ConflictHypergraph, order: Sequence[int]) -> int:
    chosen = 0
    for v in order:
        trial = chosen | (1 << v)
        if _is_independent(trial, graph.edges):
            chosen = trial
    return chosen


def _set_key(mask: int, order_pos: dict[int, int]) -> tuple[int, ...]:
    return tuple(sorted(order_pos[v] for v in _bits(mask)))


def _exact(graph: ConflictHypergraph, config: SearchConfig, sym: bool) -> SearchResult:
    order = _order(graph, config.ordering, sym)
    pair_edges, singles = _prepare(graph, order)
    N = len(order)
    deadline = time.monotonic() + config.time_budget if config.time_budget else None
    _install(pair_edges, singles, config.node_budget, deadline)

    # Lower bound from greedy in search order; each subproblem only reports sets beating L - 1.
    greedy_mask = _greedy(graph, order)
    L = bin(greedy_mask).count("1")
    floor = max(L - 1, 0)
    usable = [v for v in range(N) if not singles >> v & 1]

    def children(C: int, P: list[int], v: int, i: int) -> list[int]:
        C2 = C | (1 << v)
        return [u for u in P[i + 1:] if all(m & C2 != m for m in pair_edges[u].get(v, ()))]

    if sym and usable and usable[0] == 0:
        # The zero vector sits at position 0 and is forced into the set.
        cand = children(0, usable, 0, 0)
        tasks = [(1, [], 1, floor)]
        tasks += [(1 | (1 << v), children(1, cand, v, i), 2, floor) for i, v in enumerate(cand)]
    else:
        tasks = [(1 << v, children(0, usable, v, i), 1, floor) for i, v in enumerate(usable)]
    if config.threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(
            max_workers=config.threads,
            initializer=_install,
            initargs=(pair_edges, singles, config.node_budget, deadline),
        ) as pool:
            results = list(pool.map(_dfs_subproblem, tasks, chunksize=1))
    else:
        results = [_dfs_subproblem(t) for t in tasks]

    best_size, best_mask = 0, 0
    nodes = 0
    complete = True
    for size, mask, cnt, done in results:
        nodes += cnt
        complete &= done
        if size > best_size:  # ties keep the earliest subproblem
            best_size, best_mask = size, mask
    if best_size < L:
        best_size = L
        best_mask = _mask_in_order(greedy_mask, order)
    chosen = sorted(order[i] for i in _bits(best_mask))
    status = "exact-optimal" if complete else "lower-bound-only"
    return SearchResult([graph.points[v] for v in chosen], len(chosen), status, nodes, "", sym, order)


def _mask_in_order(mask: int, order: Sequence[int]) -> int:
    pos = {v: i for i, v in enumerate(order)}
    out = 0
    for v in _bits(mask):
        out |= 1 << pos[v]
    return out


def _heuristic(graph: ConflictHypergraph, config: SearchConfig) -> SearchResult:
    N = graph.size
    if config.mode == "greedy":
        order = _order(graph, config.ordering, False)
        mask = _greedy(graph, order)
        tries = 1
    else:
        rng = np.random.default_rng(config.seed)
        mask, tries = 0, 0
        for _ in range(config.restarts):
            tries += 1
            order = rng.permutation(N).tolist()
            cand = _greedy(graph, order)
            if (bin(cand).count("1"), _neg_key(cand)) > (bin(mask).count("1"), _neg_key(mask)):
                mask = cand
    chosen = _bits(mask)
    return SearchResult([graph.points[v] for v in chosen], len(chosen), "lower-bound-only", tries, "")


def _neg_key(mask: int) -> tuple[int, ...]:
    return tuple(-v for v in _bits(mask))


def max_avoiding_set(config: SearchConfig, graph: ConflictHypergraph | None = None) -> SearchResult:
    spec = config.property
    graph = graph or build_hypergraph(spec, config.max_points)
    if config.mode == "exact":
        sym = False
        notes = []
        if config.symmetry_reduction:
            sym = edges_translation_invariant(graph, spec.field)
            if not sym:
                notes.append("conflict hypergraph is not translation invariant; no symmetry reduction")
        result = _exact(graph, config, sym)
        result.notes.extend(notes)
    else:
        result = _heuristic(graph, config)
    verdict = check_avoids(result.best_set, spec)
    result.witness_check = "pass" if verdict.passed else "fail"
    if not verdict.passed:
        raise CheckFailure(f"search returned a set containing forbidden tuple {verdict.witness}")
    return result


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)
    return threads


# -- naive oracle -------------------------------------------------------------------------------


def naive_max_avoiding(graph: ConflictHypergraph, chunk_bits: int = 22) -> int:
    """Largest edge-free subset by marking every superset of every edge; needs 2^N bytes."""
    N = graph.size
    if N > NAIVE_MAX_POINTS:
        raise SizeLimitError(f"naive oracle handles at most {NAIVE_MAX_POINTS} points, got {N}")
    bad = np.zeros(1 << N, dtype=bool)
    for e in graph.edges:
        bad[e] = True
    # Upward closure one coordinate at a time: S with bit b set inherits from S without it.
    for b in range(N):
        view = bad.reshape(-1, 2, 1 << b)
        view[:, 1, :] |= view[:, 0, :]
    best = 0
    step = 1 << min(chunk_bits, N)
    for start in range(0, 1 << N, step):
        ids = np.arange(start, start + step, dtype=np.uint32)
        ok = ~bad[start:start + step]
        if ok.any():
            best = max(best, int(np.bitwise_count(ids[ok]).max()))
    return best


# -- sandwiching --------------------------------------------------------------------------------


def sandwich_report(config: SearchConfig, bound: BoundReport | int | float, result: SearchResult | None = None) -> dict:
    """Compare a search result with an upper bound; raises CheckFailure on a violation."""
    result = result or max_avoiding_set(config)
    value = bound.value if isinstance(bound, BoundReport) else bound
    name = bound.name if isinstance(bound, BoundReport) else "bound"
    holds = result.size <= value
    report = {
        "search": result.to_json(config.field),
        "bound_name": name,
        "bound_value": float(value),
        "found": result.size,
        "proof_status": result.proof_status,
        "consistent": bool(holds),
    }
    if not holds:
        raise CheckFailure(f"found an avoiding set of size {result.size} above {name} = {float(value)}: {result.best_set}")
    return report


def with_threads(config: SearchConfig, threads: int) -> SearchConfig:
    return replace(config, threads=threads)
