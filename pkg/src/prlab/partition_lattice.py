"""Set partitions of {1..k}, the refinement lattice, and its Möbius function.

Partitions are stored as restricted-growth strings (RGS): element ``i`` gets
the block index ``assignment[i]``, element 1 is always in block 0 and each
entry exceeds the running maximum by at most one.  Two partitions are equal
exactly when their strings are.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy import sparse

from .errors import DimensionError, OrderError, ParseError, SizeLimitError

MAX_K = 13
# Matrices (order relation, Möbius) are dense Bell(k) x Bell(k); k = 8 gives 4140.
MAX_MATRIX_SIZE = 4140


@dataclass(frozen=True)
class SetPartition:
    assignment: tuple[int, ...]

    def __post_init__(self) -> None:
        a = tuple(int(x) for x in self.assignment)
        object.__setattr__(self, "assignment", a)
        if not a:
            raise ParseError("a set partition needs k >= 1")
        top = -1
        for x in a:
            if x < 0 or x > top + 1:
                raise ParseError(f"{a} is not a restricted-growth string")
            top = max(top, x)

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], k: int | None = None) -> "SetPartition":
        """Build from 1-based blocks; the blocks must cover 1..k exactly once."""
        blocks = [list(b) for b in blocks]
        seen: dict[int, int] = {}
        for bi, block in enumerate(blocks):
            for e in block:
                if e in seen:
                    raise ParseError(f"element {e} appears twice")
                seen[e] = bi
        if k is None:
            k = max(seen, default=0)
        for e in seen:
            if not 1 <= e <= k:
                raise ParseError(f"element {e} is outside 1..{k}")
        for e in range(1, k + 1):
            if e not in seen:
                raise ParseError(f"element {e} is missing")
        return cls(_canonical([seen[e] for e in range(1, k + 1)]))

    @classmethod
    def bottom(cls, k: int) -> "SetPartition":
        return cls(tuple(range(k)))

    @classmethod
    def top(cls, k: int) -> "SetPartition":
        return cls((0,) * k)

    @property
    def k(self) -> int:
        return len(self.assignment)

    @property
    def num_blocks(self) -> int:
        return max(self.assignment) + 1

    @property
    def rank(self) -> int:
        return self.k - self.num_blocks

    @property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.num_blocks)]
        for i, b in enumerate(self.assignment):
            out[b].append(i + 1)
        return tuple(tuple(b) for b in out)

    def is_bottom(self) -> bool:
        return self.num_blocks == self.k

    def is_top(self) -> bool:
        return self.num_blocks == 1

    def __str__(self) -> str:
        return format_partition(self)

    def __repr__(self) -> str:
        return f"SetPartition({format_partition(self)!r})"


def _canonical(labels: Sequence[Hashable]) -> tuple[int, ...]:
    first: dict[Hashable, int] = {}
    return tuple(first.setdefault(x, len(first)) for x in labels)


def format_partition(p: SetPartition) -> str:
    sep = "" if p.k <= 9 else ","
    return "|".join(sep.join(str(e) for e in block) for block in p.blocks)


def parse_partition(text: str, k: int) -> SetPartition:
    """Parse ``"1268|34|57"`` (k <= 9) or ``"1,2,6,8|3,4|5,7"``."""
    text = text.strip()
    if not text:
        raise ParseError("empty partition text")
    comma = "," in text or k > 9
    blocks = []
    for chunk in text.split("|"):
        chunk = chunk.strip()
        if not chunk:
            raise ParseError(f"empty block in {text!r}")
        items = chunk.split(",") if comma else list(chunk)
        try:
            blocks.append([int(x) for x in items])
        except ValueError as exc:
            raise ParseError(f"bad element in block {chunk!r}") from exc
    return SetPartition.from_blocks(blocks, k)


def _check_same_k(a: SetPartition, b: SetPartition) -> None:
    if a.k != b.k:
        raise DimensionError(f"partitions of different ground sets: {a.k} vs {b.k}")


def refines(a: SetPartition, b: SetPartition) -> bool:
    """True iff every block of ``a`` lies inside a block of ``b``."""
    _check_same_k(a, b)
    image: dict[int, int] = {}
    for x, y in zip(a.assignment, b.assignment):
        if image.setdefault(x, y) != y:
            return False
    return True


def meet(a: SetPartition, b: SetPartition) -> SetPartition:
    _check_same_k(a, b)
    return SetPartition(_canonical(list(zip(a.assignment, b.assignment))))


def join(a: SetPartition, b: SetPartition) -> SetPartition:
    _check_same_k(a, b)
    parent = list(range(a.k))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for labels in (a.assignment, b.assignment):
        first: dict[int, int] = {}
        for i, lab in enumerate(labels):
            j = first.setdefault(lab, i)
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)
    return SetPartition(_canonical([find(i) for i in range(a.k)]))


def partition_of_tuple(values: Sequence[Hashable]) -> SetPartition:
    """Equality pattern of ``values``: the coarsest partition whose blocks are constant."""
    if len(values) == 0:
        raise DimensionError("need at least one value")
    return SetPartition(_canonical(values))


def delta(pi: SetPartition, values: Sequence[Hashable]) -> int:
    if pi.k != len(values):
        raise DimensionError(f"partition of {pi.k} elements, tuple of length {len(values)}")
    seen: dict[int, Hashable] = {}
    for b, v in zip(pi.assignment, values):
        if b in seen:
            if seen[b] != v:
                return 0
        else:
            seen[b] = v
    return 1


# -- exact counting ---------------------------------------------------------

_STIRLING: list[list[int]] = [[1]]
_STIRLING_LOCK = threading.Lock()


def stirling2(k: int, r: int) -> int:
    """Stirling number of the second kind, by the recurrence S(n,j) = j S(n-1,j) + S(n-1,j-1)."""
    if k < 0 or r < 0:
        raise ValueError("stirling2 needs non-negative arguments")
    if r > k:
        return 0
    with _STIRLING_LOCK:
        while len(_STIRLING) <= k:
            prev = _STIRLING[-1]
            n = len(_STIRLING)
            row = [0] * (n + 1)
            for j in range(1, n + 1):
                row[j] = j * (prev[j] if j < len(prev) else 0) + prev[j - 1]
            _STIRLING.append(row)
    return _STIRLING[k][r]


def bell(k: int) -> int:
    return sum(stirling2(k, r) for r in range(k + 1))


def _enumerate_rgs(k: int) -> np.ndarray:
    rows = np.zeros((1, 1), dtype=np.int8)
    top = np.zeros(1, dtype=np.int8)
    for _ in range(1, k):
        counts = top.astype(np.int64) + 2
        starts = np.repeat(np.cumsum(counts) - counts, counts)
        new = (np.arange(int(counts.sum())) - starts).astype(np.int8)
        rows = np.concatenate([np.repeat(rows, counts, axis=0), new[:, None]], axis=1)
        top = np.maximum(np.repeat(top, counts), new)
    nblocks = rows.max(axis=1).astype(np.int64) + 1
    keys = tuple(rows[:, j] for j in range(k - 1, -1, -1)) + (-nblocks,)
    return np.ascontiguousarray(rows[np.lexsort(keys)])


class PartitionLattice:
    """All of Π_k in rank-then-lex order, with order relation and Möbius matrix.

    Index 0 is the all-singletons partition and the last index is the single
    block.  Matrix-valued attributes are computed lazily and refuse to build
    beyond ``max_matrix`` elements.
    """

    def __init__(self, k: int, max_k: int = MAX_K, max_matrix: int = MAX_MATRIX_SIZE):
        if k < 1 or k > max_k:
            raise SizeLimitError(
                f"k={k} outside 1..{max_k}; Bell({k}) = {bell(max(k, 0))} partitions"
            )
        self.k = k
        self.max_matrix = max_matrix
        self.rgs = _enumerate_rgs(k)
        self.rgs.flags.writeable = False
        self.size = len(self.rgs)
        self.rank = k - (self.rgs.max(axis=1).astype(np.int64) + 1)
        self._mu_memo: dict[tuple[int, int], int] = {}
        self._mu_lock = threading.Lock()

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"PartitionLattice(k={self.k}, size={self.size})"

    @cached_property
    def partitions(self) -> list[SetPartition]:
        return [SetPartition(tuple(int(x) for x in row)) for row in self.rgs]

    @cached_property
    def _index(self) -> dict[SetPartition, int]:
        return {p: i for i, p in enumerate(self.partitions)}

    def index(self, p: SetPartition) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise DimensionError(f"{p!r} is not an element of Π_{self.k}") from None

    @property
    def bottom(self) -> int:
        return 0

    @property
    def top(self) -> int:
        return self.size - 1

    def _require_matrix(self) -> None:
        if self.size > self.max_matrix:
            raise SizeLimitError(
                f"Bell({self.k}) = {self.size} exceeds the matrix limit {self.max_matrix}"
            )

    @cached_property
    def leq(self) -> np.ndarray:
        """Boolean matrix, ``leq[i, j]`` iff partition i refines partition j."""
        self._require_matrix()
        rgs = self.rgs
        out = np.empty((self.size, self.size), dtype=bool)
        for i, row in enumerate(rgs):
            rep = _canonical_reps(row)
            out[i] = np.all(rgs == rgs[:, rep], axis=1)
        out.flags.writeable = False
        return out

    @cached_property
    def up_sets(self) -> list[np.ndarray]:
        return [np.flatnonzero(row) for row in self.leq]

    @cached_property
    def down_sets(self) -> list[np.ndarray]:
        return [np.flatnonzero(col) for col in self.leq.T]

    def zeta_matrix(self) -> np.ndarray:
        return self.leq.astype(np.int64)

    def covers(self) -> list[tuple[int, int]]:
        """Pairs (i, j) with j covering i."""
        pairs = []
        for i, up in enumerate(self.up_sets):
            for j in up:
                if self.rank[j] == self.rank[i] + 1:
                    pairs.append((i, int(j)))
        return pairs

    @cached_property
    def mobius(self) -> np.ndarray:
        """Inverse of the zeta matrix, by forward substitution row by row.

        Stored as int32: |μ| never exceeds (k-1)! < 2**31 for k <= 13.
        """
        self._require_matrix()
        leq = self.leq
        mu = np.zeros((self.size, self.size), dtype=np.int32)
        for x in range(self.size):
            up = self.up_sets[x]
            sub = leq[np.ix_(up, up)].astype(np.int64)
            row = np.zeros(len(up), dtype=np.int64)
            row[0] = 1
            for j in range(1, len(up)):
                row[j] = -int(row[:j] @ sub[:j, j])
            mu[x, up] = row
        return mu

    def mu(self, i: int, j: int) -> int:
        return int(self.mobius[i, j])

    def zeta_mobius_product(self) -> sparse.csr_matrix:
        """zeta @ mobius as a sparse integer matrix; equals the identity when correct."""
        z = sparse.csr_matrix(self.leq.astype(np.int64))
        m = sparse.csr_matrix(self.mobius.astype(np.int64))
        return (z @ m).tocsr()

    def rank_members(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.rank == r)


def _canonical_reps(row: np.ndarray) -> np.ndarray:
    first: dict[int, int] = {}
    return np.array([first.setdefault(int(b), i) for i, b in enumerate(row)], dtype=np.intp)


_LATTICES: dict[int, PartitionLattice] = {}
_LATTICE_LOCK = threading.Lock()


def enumerate_partitions(k: int, max_k: int = MAX_K) -> PartitionLattice:
    """Shared, cached lattice for Π_k."""
    if k < 1 or k > max_k:
        raise SizeLimitError(f"k={k} outside 1..{max_k}; Bell({k}) = {bell(max(k, 0))} partitions")
    with _LATTICE_LOCK:
        lat = _LATTICES.get(k)
        if lat is None:
            lat = _LATTICES[k] = PartitionLattice(k, max_k=max_k)
        return lat


def clear_caches() -> None:
    with _LATTICE_LOCK:
        _LATTICES.clear()
    with _STIRLING_LOCK:
        del _STIRLING[1:]


def mobius_recursive(lattice: PartitionLattice, a: SetPartition, b: SetPartition) -> int:
    """μ(a, b) from the defining recursion over the interval [a, b], memoised."""
    i, j = lattice.index(a), lattice.index(b)
    return _mu_rec(lattice, i, j)


def _mu_rec(lattice: PartitionLattice, i: int, j: int) -> int:
    key = (i, j)
    memo = lattice._mu_memo
    if key in memo:
        return memo[key]
    if i == j:
        val = 1
    elif not lattice.leq[i, j]:
        val = 0
    else:
        val = 0
        for z in lattice.up_sets[i]:
            if z != j and lattice.leq[z, j]:
                val -= _mu_rec(lattice, i, int(z))
    with lattice._mu_lock:
        memo[key] = val
    return val


def mobius_closed_form(a: SetPartition, b: SetPartition) -> int:
    """Product of (-1)^(λ-1) (λ-1)! over blocks of b, λ = number of a-blocks inside."""
    if not refines(a, b):
        raise OrderError(f"{a} does not refine {b}")
    split: dict[int, set[int]] = {}
    for x, y in zip(a.assignment, b.assignment):
        split.setdefault(y, set()).add(x)
    out = 1
    for parts in split.values():
        lam = len(parts)
        out *= (-1) ** (lam - 1) * math.factorial(lam - 1)
    return out
