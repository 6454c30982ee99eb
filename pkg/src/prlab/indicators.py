"""Partition indicators: coefficient sums over Möbius intervals and their evaluation.

Scalars live either in a finite field (``FieldElement``) or, when ``field``
is None, in the rationals (``Fraction``).  Möbius values are plain integers
and are mapped into the field at each use site.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence, Union

from .errors import ConfigError, DimensionError
from .ffield import FieldElement, FieldSpec, is_prime
from .partition_lattice import (
    PartitionLattice,
    SetPartition,
    delta,
    enumerate_partitions,
    parse_partition,
    partition_of_tuple,
)

Scalar = Union[FieldElement, Fraction]


def scalar(field: FieldSpec | None, value: object) -> Scalar:
    if field is None:
        if isinstance(value, FieldElement):
            raise ConfigError("finite-field value in a rational partition function")
        return Fraction(value)  # type: ignore[arg-type]
    if isinstance(value, Fraction):
        if value.denominator != 1:
            return field.element(value.numerator) * field.element(value.denominator).inv()
        value = value.numerator
    return field.element(value)  # type: ignore[arg-type]


def _zero(field: FieldSpec | None) -> Scalar:
    return Fraction(0) if field is None else field.zero


@dataclass(frozen=True)
class PartitionFunction:
    """A map f on Π_k minus the top element (or all of Π_k when ``include_top``)."""

    k: int
    values: Mapping[SetPartition, Scalar]
    field: FieldSpec | None = None
    include_top: bool = False

    def __post_init__(self) -> None:
        expected = _domain(self.k, self.include_top)
        keys = set(self.values)
        if keys != expected:
            missing = sorted(str(p) for p in expected - keys)[:3]
            extra = sorted(str(p) for p in keys - expected)[:3]
            raise ConfigError(f"domain mismatch: missing {missing}, unexpected {extra}")

    @classmethod
    def from_mapping(
        cls,
        k: int,
        mapping: Mapping[SetPartition | str, object],
        field: FieldSpec | None = None,
        include_top: bool = False,
    ) -> "PartitionFunction":
        """Unlisted partitions get value zero; keys may be partition strings."""
        values = {p: _zero(field) for p in _domain(k, include_top)}
        for key, v in mapping.items():
            p = parse_partition(key, k) if isinstance(key, str) else key
            if p not in values:
                raise ConfigError(f"{p} is outside the domain of f")
            values[p] = scalar(field, v)
        return cls(k, values, field, include_top)

    def __call__(self, p: SetPartition) -> Scalar:
        return self.values[p]

    def below_top(self) -> "PartitionFunction":
        if not self.include_top:
            return self
        top = SetPartition.top(self.k)
        return PartitionFunction(self.k, {p: v for p, v in self.values.items() if p != top}, self.field)

    def to_json(self) -> dict[str, object]:
        return {str(p): _scalar_json(v) for p, v in self.values.items()}


def _domain(k: int, include_top: bool) -> set[SetPartition]:
    parts = enumerate_partitions(k).partitions
    return set(parts if include_top else parts[:-1])


def _scalar_json(v: Scalar) -> object:
    if isinstance(v, Fraction):
        return v.numerator if v.denominator == 1 else str(v)
    return v.to_json()


@dataclass(frozen=True)
class IndicatorCoefficients:
    """Coefficient c_τ of δ_τ in the partition indicator, for every τ below the top."""

    k: int
    coeffs: Mapping[SetPartition, Scalar]
    field: FieldSpec | None = None

    @property
    def support(self) -> list[SetPartition]:
        return [t for t, c in self.coeffs.items() if c != 0]

    def nonconstant_support_size(self) -> int:
        """Nonzero coefficients strictly between bottom and top; the refined additive constant."""
        return sum(1 for t in self.support if not t.is_bottom())

    def to_json(self) -> dict[str, object]:
        return {str(t): _scalar_json(c) for t, c in self.coeffs.items()}


def _lattice_for(f: PartitionFunction, lattice: PartitionLattice | None) -> PartitionLattice:
    lattice = lattice or enumerate_partitions(f.k)
    if lattice.k != f.k:
        raise DimensionError(f"f on Π_{f.k} but lattice Π_{lattice.k}")
    return lattice


def indicator_coefficients(f: PartitionFunction, lattice: PartitionLattice | None = None) -> IndicatorCoefficients:
    lattice = _lattice_for(f, lattice)
    parts = lattice.partitions
    mu = lattice.mobius
    support = [(i, f(parts[i])) for i in range(lattice.size - 1) if f(parts[i]) != 0]
    coeffs: dict[SetPartition, Scalar] = {}
    for j in range(lattice.size - 1):
        c = _zero(f.field)
        for i, v in support:
            if lattice.leq[i, j]:
                c = c + v * int(mu[i, j])
        coeffs[parts[j]] = c
    return IndicatorCoefficients(f.k, coeffs, f.field)


def evaluate_indicator(c: IndicatorCoefficients, values: Sequence[Hashable]) -> Scalar:
    if len(values) != c.k:
        raise DimensionError(f"indicator on {c.k}-tuples got a tuple of length {len(values)}")
    total = _zero(c.field)
    for tau, coef in c.coeffs.items():
        if coef != 0 and delta(tau, values):
            total = total + coef
    return total


def diagonal_value(f: PartitionFunction, lattice: PartitionLattice | None = None) -> Scalar:
    """Minus the sum of f(π) μ(π, top) over π below the top: the indicator on constant tuples."""
    lattice = _lattice_for(f, lattice)
    parts = lattice.partitions
    top = lattice.top
    total = _zero(f.field)
    for i in range(top):
        v = f(parts[i])
        if v != 0:
            total = total + v * int(lattice.mobius[i, top])
    return -total


def indicator_value_lemma(
    f: PartitionFunction, values: Sequence[Hashable], lattice: PartitionLattice | None = None
) -> Scalar:
    """Closed-form indicator value: f(partition of the tuple), or the diagonal value when constant."""
    if len(values) != f.k:
        raise DimensionError(f"f on Π_{f.k} got a tuple of length {len(values)}")
    pi = partition_of_tuple(values)
    if pi.is_top():
        return diagonal_value(f.below_top(), lattice)
    return f(pi)


def condition_four_holds(f: PartitionFunction, lattice: PartitionLattice | None = None) -> bool:
    """Nonzero diagonal value; when false the diagonalisation gives nothing."""
    return diagonal_value(f.below_top(), lattice) != 0


def distinctness_generator(k: int, field: FieldSpec | None = None) -> PartitionFunction:
    return PartitionFunction.from_mapping(k, {SetPartition.bottom(k): 1}, field)


def _fill_recursively(
    lattice: PartitionLattice,
    fixed: Mapping[int, Scalar],
    free: Sequence[int],
    field: FieldSpec | None,
) -> dict[int, Scalar]:
    """Assign f(π) = -Σ_{τ<π} f(τ) μ(τ,π) for each index in ``free`` (in rank order)."""
    vals: dict[int, Scalar] = dict(fixed)
    mu = lattice.mobius
    for j in sorted(free, key=lambda i: (int(lattice.rank[i]), i)):
        acc = _zero(field)
        for i in lattice.down_sets[j]:
            i = int(i)
            if i != j and i in vals and vals[i] != 0:
                acc = acc + vals[i] * int(mu[i, j])
        vals[j] = -acc
    return vals


def rank_generator(k: int, r: int, field: FieldSpec | None = None, lattice: PartitionLattice | None = None) -> PartitionFunction:
    """f = 0 below rank r, 1 at rank r, then chosen so higher-rank coefficients vanish.

    r = k-1 is rejected: its only element is the top, which is outside the domain.
    """
    if not 0 <= r <= k - 2:
        raise ConfigError(f"rank generator needs 0 <= r <= k-2, got r={r}, k={k}")
    lattice = lattice or enumerate_partitions(k)
    ranks = lattice.rank
    fixed = {i: scalar(field, 1) for i in range(lattice.top) if ranks[i] == r}
    fixed.update({i: _zero(field) for i in range(lattice.top) if ranks[i] < r})
    free = [i for i in range(lattice.top) if ranks[i] > r]
    vals = _fill_recursively(lattice, fixed, free, field)
    parts = lattice.partitions
    return PartitionFunction(k, {parts[i]: vals[i] for i in range(lattice.top)}, field)


def zero_set_generator(
    lattice: PartitionLattice,
    support: Sequence[SetPartition],
    minima_values: Mapping[SetPartition, object],
    field: FieldSpec | None = None,
) -> PartitionFunction:
    """f vanishing off ``support``, prescribed on its minimal elements, recursive elsewhere.

    The indicator of the result has zero coefficient on every non-minimal
    member of ``support``.
    """
    idx = sorted({lattice.index(p) for p in support})
    if not idx:
        raise ConfigError("support must be nonempty")
    if lattice.top in idx:
        raise ConfigError("support may not contain the top element")
    members = set(idx)
    minimal = [i for i in idx if not any(j != i and lattice.leq[j, i] for j in members)]
    given = {lattice.index(p) for p in minima_values}
    if given != set(minimal):
        names = [str(lattice.partitions[i]) for i in minimal]
        raise ConfigError(f"minima_values must be keyed exactly by the minimal elements {names}")
    fixed = {lattice.index(p): scalar(field, v) for p, v in minima_values.items()}
    free = [i for i in idx if i not in fixed]
    vals = _fill_recursively(lattice, fixed, free, field)
    parts = lattice.partitions
    zero = _zero(field)
    return PartitionFunction(lattice.k, {parts[i]: vals.get(i, zero) for i in range(lattice.top)}, field)


@dataclass(frozen=True)
class NaslundCheck:
    p: int
    full_sum: FieldElement
    harmonic_sum: FieldElement
    generator_matches: bool
    coefficients_vanish: bool
    details: dict = dc_field(default_factory=dict)


def naslund_support(lattice: PartitionLattice) -> list[SetPartition]:
    parts = lattice.partitions
    return [parts[0]] + [parts[i] for i in lattice.rank_members(lattice.k - 2)]


def naslund_sum_check(p: int) -> NaslundCheck:
    """Zero-set generator on {bottom} ∪ {two-block partitions} of Π_p, checked over F_p.

    Returns Σ_{π<top} f(π) μ(π, top) and the sum of inverses of 2..p-1, both in F_p.
    """
    if not is_prime(p) or p == 2:
        raise ConfigError(f"p={p} must be an odd prime")
    F = FieldSpec(p)
    lat = enumerate_partitions(p)
    bottom = lat.partitions[0]
    f = zero_set_generator(lat, naslund_support(lat), {bottom: 1}, F)
    matches = all(
        f(lat.partitions[i]) == F.element(-lat.mu(0, int(i))) for i in lat.rank_members(p - 2)
    )
    coeffs = indicator_coefficients(f, lat)
    vanish = all(coeffs.coeffs[lat.partitions[i]] == 0 for i in lat.rank_members(p - 2))
    full = -diagonal_value(f, lat)
    harmonic = F.zero
    for j in range(2, p):
        harmonic = harmonic + F.element(j).inv()
    return NaslundCheck(p, full, harmonic, matches, vanish)  # type: ignore[arg-type]
