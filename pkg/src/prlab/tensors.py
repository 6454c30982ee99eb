"""Properties of k-tuples in F_q^n, their tensor realisations, and mechanical checks.

Every property has two independent implementations: a semantic predicate
(``property_holds``), written directly from the geometric or algebraic
statement, and a tensor (``tensor_value``), written from the polynomial
formula.  Verification routines compare the two and never derive one from
the other.

Points are tuples of raw field codes (see ``FieldSpec``); public functions
also accept ``FieldVector`` instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from functools import reduce
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DimensionError, SizeLimitError, budget
from .ffield import FieldElement, FieldSpec, FieldVector, parse_vector
from .indicators import (
    PartitionFunction,
    condition_four_holds,
    diagonal_value,
    evaluate_indicator,
    indicator_coefficients,
)
from .partition_lattice import SetPartition, partition_of_tuple

Point = tuple[int, ...]

KINDS = (
    "k_right_corner",
    "right_angle_triple",
    "acute_angle",
    "obtuse_angle",
    "balanced_linear_equation",
    "right_k_configuration",
    "equal_squared_distances",
    "pairwise_orthogonal",
    "identifier",
)
ANGLE_KINDS = ("right_angle_triple", "acute_angle", "obtuse_angle")
FORBID_MODES = ("distinct", "nontrivial", "any")
DEFAULT_TUPLE_BUDGET = 10**6


# -- polynomial expressions ------------------------------------------------------

_SCALAR, _VECTOR = "scalar", "vector"


@dataclass(frozen=True)
class PolynomialSpec:
    """Expression tree over the coordinates of ``m`` vector arguments.

    Nodes are JSON objects with an ``op`` tag:
    ``const`` (value), ``coord`` (arg, index), ``vec`` (arg), ``add``/``sub``/``mul``
    (args: list), ``neg`` (arg), ``pow`` (base, exp), ``inner`` (args: [u, v]),
    ``scale`` (value, arg).  ``vec`` nodes are vector valued; ``inner`` turns
    two vectors into a scalar.  The final value must be a scalar.
    """

    m: int
    expr: Mapping[str, Any]

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ConfigError("a polynomial needs at least one argument")
        kind, _ = _check(self.expr, self.m)
        if kind != _SCALAR:
            raise ConfigError("polynomial must be scalar valued")

    @property
    def deg(self) -> int:
        return _check(self.expr, self.m)[1]

    def evaluate(self, F: FieldSpec, args: Sequence[Point]) -> int:
        if len(args) != self.m:
            raise DimensionError(f"polynomial takes {self.m} vectors, got {len(args)}")
        return _eval(self.expr, F, args)  # type: ignore[return-value]

    def to_json(self) -> dict:
        return {"m": self.m, "expr": self.expr}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "PolynomialSpec":
        if "name" in obj:
            return named_polynomial(obj["name"])
        try:
            return cls(int(obj["m"]), obj["expr"])
        except KeyError as exc:
            raise ConfigError(f"polynomial JSON lacks {exc}") from exc


def _children(node: Mapping[str, Any], key: str = "args") -> list:
    kids = node.get(key)
    if not isinstance(kids, list) or not kids:
        raise ConfigError(f"'{node.get('op')}' node needs a nonempty '{key}' list")
    return kids


def _check(node: Mapping[str, Any], m: int) -> tuple[str, int]:
    """(value kind, total degree) of a node; raises on malformed trees."""
    if not isinstance(node, Mapping) or "op" not in node:
        raise ConfigError(f"malformed polynomial node {node!r}")
    op = node["op"]
    if op == "const":
        int(node["value"])
        return _SCALAR, 0
    if op in ("coord", "vec"):
        arg = int(node["arg"])
        if not 0 <= arg < m:
            raise ConfigError(f"argument index {arg} outside 0..{m - 1}")
        if op == "coord":
            int(node["index"])
        return (_SCALAR if op == "coord" else _VECTOR), 1
    if op in ("add", "sub"):
        parts = [_check(c, m) for c in _children(node)]
        kinds = {k for k, _ in parts}
        if len(kinds) != 1:
            raise ConfigError(f"'{op}' mixes scalars and vectors")
        return kinds.pop(), max(d for _, d in parts)
    if op == "mul":
        parts = [_check(c, m) for c in _children(node)]
        if sum(k == _VECTOR for k, _ in parts) > 1:
            raise ConfigError("'mul' accepts at most one vector factor; use 'inner'")
        kind = _VECTOR if any(k == _VECTOR for k, _ in parts) else _SCALAR
        return kind, sum(d for _, d in parts)
    if op == "neg":
        return _check(node["arg"], m)
    if op == "scale":
        int(node["value"])
        return _check(node["arg"], m)
    if op == "pow":
        e = int(node["exp"])
        if e < 0:
            raise ConfigError("negative exponents are not polynomial")
        kind, d = _check(node["base"], m)
        if kind != _SCALAR:
            raise ConfigError("'pow' needs a scalar base")
        return _SCALAR, d * e
    if op == "inner":
        kids = _children(node)
        if len(kids) != 2:
            raise ConfigError("'inner' takes exactly two vectors")
        (k1, d1), (k2, d2) = (_check(c, m) for c in kids)
        if k1 != _VECTOR or k2 != _VECTOR:
            raise ConfigError("'inner' takes vector operands")
        return _SCALAR, d1 + d2
    raise ConfigError(f"unknown polynomial op {op!r}")


def _eval(node: Mapping[str, Any], F: FieldSpec, args: Sequence[Point]) -> int | Point:
    op = node["op"]
    if op == "const":
        return F.from_int(int(node["value"]))
    if op == "coord":
        return args[int(node["arg"])][int(node["index"])]
    if op == "vec":
        return tuple(args[int(node["arg"])])
    if op in ("add", "sub", "mul"):
        vals = [_eval(c, F, args) for c in node["args"]]
        if op == "mul":
            return reduce(lambda a, b: _mul(F, a, b), vals)
        combine = F.add if op == "add" else F.sub
        return reduce(lambda a, b: _lift2(combine, a, b), vals)
    if op == "neg":
        v = _eval(node["arg"], F, args)
        return F.neg(v) if isinstance(v, int) else tuple(F.neg(x) for x in v)
    if op == "scale":
        return _mul(F, F.from_int(int(node["value"])), _eval(node["arg"], F, args))
    if op == "pow":
        return F.pow(_eval(node["base"], F, args), int(node["exp"]))  # type: ignore[arg-type]
    if op == "inner":
        u, v = (_eval(c, F, args) for c in node["args"])
        if len(u) != len(v):  # type: ignore[arg-type]
            raise DimensionError("inner product of vectors with different lengths")
        return F.dot(u, v)  # type: ignore[arg-type]
    raise ConfigError(f"unknown polynomial op {op!r}")


def _lift2(op: Callable[[int, int], int], a: int | Point, b: int | Point) -> int | Point:
    if isinstance(a, int):
        return op(a, b)  # type: ignore[arg-type]
    if len(a) != len(b):  # type: ignore[arg-type]
        raise DimensionError("vector operands with different lengths")
    return tuple(op(x, y) for x, y in zip(a, b))  # type: ignore[arg-type]


def _mul(F: FieldSpec, a: int | Point, b: int | Point) -> int | Point:
    if isinstance(a, int) and isinstance(b, int):
        return F.mul(a, b)
    if isinstance(a, int):
        return tuple(F.mul(a, y) for y in b)  # type: ignore[union-attr]
    return tuple(F.mul(x, b) for x in a)  # type: ignore[arg-type]


def _vec(i: int) -> dict:
    return {"op": "vec", "arg": i}


def _sqdist(i: int, j: int) -> dict:
    d = {"op": "sub", "args": [_vec(i), _vec(j)]}
    return {"op": "inner", "args": [d, d]}


NAMED_POLYNOMIALS: dict[str, Callable[[], PolynomialSpec]] = {
    "squared_distance": lambda: PolynomialSpec(2, _sqdist(0, 1)),
    "dot": lambda: PolynomialSpec(2, {"op": "inner", "args": [_vec(0), _vec(1)]}),
    "distance_difference": lambda: PolynomialSpec(3, {"op": "sub", "args": [_sqdist(0, 1), _sqdist(1, 2)]}),
}


def named_polynomial(name: str) -> PolynomialSpec:
    try:
        return NAMED_POLYNOMIALS[name]()
    except KeyError:
        raise ConfigError(f"unknown polynomial {name!r}; known: {sorted(NAMED_POLYNOMIALS)}") from None


# -- property specifications -----------------------------------------------------


@dataclass(frozen=True)
class PropertySpec:
    """A property of k-tuples of points of F_q^n.

    ``k`` is always the tuple arity.  For ``k_right_corner`` the last entry is
    the apex and the first k-1 entries are the legs; angle kinds put the vertex
    first.  ``forbid`` states which satisfying tuples an avoiding set must not
    contain: ``distinct`` (all entries distinct), ``nontrivial`` (not all equal,
    at most ``max_values`` distinct entries) or ``any``.
    """

    kind: str
    k: int
    field: FieldSpec
    n: int
    coefficients: tuple[int, ...] | None = None
    g: PolynomialSpec | None = None
    m: int | None = None
    forbid: str | None = None
    max_values: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown property kind {self.kind!r}")
        if self.n < 1:
            raise ConfigError("dimension n must be at least 1")
        if self.k < 1:
            raise ConfigError("arity k must be at least 1")
        if self.kind in ANGLE_KINDS and self.k != 3:
            raise ConfigError(f"{self.kind} takes triples (k=3)")
        if self.kind == "k_right_corner" and self.k < 2:
            raise ConfigError("a right corner needs at least one leg and an apex")
        F = self.field
        if self.kind == "balanced_linear_equation":
            if self.coefficients is None or len(self.coefficients) != self.k:
                raise ConfigError("balanced_linear_equation needs k coefficients")
            coeffs = tuple(F.from_int(int(a)) for a in self.coefficients)
            object.__setattr__(self, "coefficients", coeffs)
            if reduce(F.add, coeffs, 0) != 0:
                raise ConfigError(f"coefficients {list(self.coefficients)} do not sum to 0 in {F!r}")
        if self.kind == "identifier":
            if self.g is None:
                raise ConfigError("identifier kind needs a polynomial g")
        g = self.identifier_polynomial
        if g is not None:
            m = self.m if self.m is not None else g.m
            if m != g.m or not 1 <= m <= self.k:
                raise ConfigError(f"identifier arity m={m} must match g and satisfy 1 <= m <= k")
            object.__setattr__(self, "m", m)
        forbid = self.forbid or ("nontrivial" if self.kind == "balanced_linear_equation" else "distinct")
        if forbid not in FORBID_MODES:
            raise ConfigError(f"forbid must be one of {FORBID_MODES}")
        object.__setattr__(self, "forbid", forbid)
        if self.max_values is not None and not 1 <= self.max_values <= self.k:
            raise ConfigError("max_values must lie in 1..k")

    @property
    def identifier_polynomial(self) -> PolynomialSpec | None:
        """The polynomial g whose product of (1 - g^(q-1)) forms the tensor, if any."""
        if self.kind == "identifier":
            return self.g
        if self.kind == "right_k_configuration":
            return named_polynomial("squared_distance")
        if self.kind == "equal_squared_distances":
            return named_polynomial("distance_difference")
        if self.kind == "pairwise_orthogonal":
            return named_polynomial("dot")
        return None

    @property
    def zero_one_valued(self) -> bool:
        return self.kind not in ("acute_angle", "obtuse_angle")

    @property
    def translation_invariant(self) -> bool:
        """Claimed invariance under x -> x + t; search re-checks this by sampling."""
        return self.kind != "pairwise_orthogonal" and (self.kind != "identifier")

    def to_json(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind, "k": self.k, "n": self.n, "field": self.field.to_json()}
        if self.coefficients is not None:
            out["coefficients"] = list(self.coefficients)
        if self.kind == "identifier" and self.g is not None:
            out["g"] = self.g.to_json()
        if self.m is not None:
            out["m"] = self.m
        out["forbid"] = self.forbid
        if self.max_values is not None:
            out["max_values"] = self.max_values
        return out

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "PropertySpec":
        try:
            F = FieldSpec.from_json(obj["field"])
            g = PolynomialSpec.from_json(obj["g"]) if obj.get("g") is not None else None
            coeffs = obj.get("coefficients")
            return cls(
                kind=obj["kind"],
                k=int(obj["k"]),
                field=F,
                n=int(obj["n"]),
                coefficients=tuple(int(a) for a in coeffs) if coeffs is not None else None,
                g=g,
                m=obj.get("m"),
                forbid=obj.get("forbid"),
                max_values=obj.get("max_values"),
            )
        except KeyError as exc:
            raise ConfigError(f"property JSON lacks {exc}") from exc


def cap_set_property(n: int, p: int = 3) -> PropertySpec:
    """x + y + z = 0 over F_p^n with distinct solutions forbidden."""
    return PropertySpec("balanced_linear_equation", 3, FieldSpec(p), n, coefficients=(1, 1, 1), forbid="distinct")


# -- semantic predicates ---------------------------------------------------------


def _points(spec: PropertySpec, tup: Sequence) -> tuple[Point, ...]:
    if len(tup) != spec.k:
        raise DimensionError(f"{spec.kind} takes {spec.k}-tuples, got {len(tup)}")
    out = []
    for x in tup:
        if isinstance(x, FieldVector):
            if x.spec != spec.field:
                raise DimensionError(f"vector over {x.spec!r} in a property over {spec.field!r}")
            pt = x.entries
        else:
            pt = tuple(x)
        if len(pt) != spec.n:
            raise DimensionError(f"expected vectors in dimension {spec.n}, got {len(pt)}")
        out.append(pt)
    return tuple(out)


def _all_distinct(pts: Sequence[Point]) -> bool:
    return len(set(pts)) == len(pts)


def relation_holds(spec: PropertySpec, tup: Sequence) -> bool:
    """Whether the tuple satisfies the defining condition, ignoring distinctness."""
    return _relation(spec, _points(spec, tup))


def _relation(spec: PropertySpec, pts: tuple[Point, ...]) -> bool:
    F = spec.field
    kind = spec.kind
    if kind == "k_right_corner":
        apex = pts[-1]
        legs = [F.vsub(x, apex) for x in pts[:-1]]
        return all(F.dot(u, v) == 0 for u, v in itertools.combinations(legs, 2))
    if kind in ANGLE_KINDS:
        x, y, z = pts
        v = F.dot(F.vsub(x, y), F.vsub(x, z))
        if kind == "right_angle_triple":
            return v == 0
        v2 = F.add(v, v)
        return v2 in (F.residue_codes if kind == "acute_angle" else F.nonresidue_codes)
    if kind == "balanced_linear_equation":
        a = spec.coefficients
        assert a is not None
        for s in range(spec.n):
            acc = 0
            for ai, x in zip(a, pts):
                acc = F.add(acc, F.mul(ai, x[s]))
            if acc != 0:
                return False
        return True
    if kind == "right_k_configuration":
        for i, j, l in itertools.permutations(range(spec.k), 3):
            if F.dot(F.vsub(pts[i], pts[j]), F.vsub(pts[j], pts[l])) != 0:
                return False
        return True
    if kind == "equal_squared_distances":
        d = {F.dot(F.vsub(x, y), F.vsub(x, y)) for x, y in itertools.combinations(pts, 2)}
        return len(d) <= 1
    if kind == "pairwise_orthogonal":
        return all(F.dot(x, y) == 0 for x, y in itertools.combinations_with_replacement(pts, 2))
    if kind == "identifier":
        g = spec.g
        assert g is not None and spec.m is not None
        return all(g.evaluate(F, sub) == 0 for sub in itertools.combinations(pts, spec.m))
    raise ConfigError(f"unknown property kind {kind!r}")


def property_holds(spec: PropertySpec, tup: Sequence) -> bool:
    """The semantic property.  Corners and angles are defined only for distinct points."""
    pts = _points(spec, tup)
    if spec.kind == "k_right_corner" or spec.kind in ANGLE_KINDS:
        if not _all_distinct(pts):
            return False
    return _relation(spec, pts)


def is_forbidden(spec: PropertySpec, tup: Sequence) -> bool:
    """Whether an avoiding set may not contain this tuple."""
    pts = _points(spec, tup)
    return _forbidden(spec, pts)


def _forbidden(spec: PropertySpec, pts: tuple[Point, ...]) -> bool:
    distinct = len(set(pts))
    if spec.forbid == "distinct" and distinct != len(pts):
        return False
    if spec.forbid == "nontrivial":
        if distinct == 1:
            return False
        if spec.max_values is not None and distinct > spec.max_values:
            return False
    if spec.kind == "k_right_corner" or spec.kind in ANGLE_KINDS:
        if distinct != len(pts):
            return False
    return _relation(spec, pts)


# -- tensors -----------------------------------------------------------------------


def _one_minus_pow(F: FieldSpec, v: int) -> int:
    return F.sub(1, F.pow(v, F.q - 1))


def _tensor(spec: PropertySpec, pts: tuple[Point, ...]) -> int:
    F = spec.field
    kind = spec.kind
    if kind == "k_right_corner":
        apex = pts[-1]
        legs = [F.vsub(x, apex) for x in pts[:-1]]
        out = 1
        for u, v in itertools.combinations(legs, 2):
            out = F.mul(out, _one_minus_pow(F, F.dot(u, v)))
        return out
    if kind == "right_angle_triple":
        x, y, z = pts
        if y == z:
            return 0
        return F.pow(F.dot(F.vsub(y, x), F.vsub(z, x)), F.q - 1)
    if kind in ("acute_angle", "obtuse_angle"):
        x, y, z = pts
        if y == z:
            return 0
        v = F.dot(F.vsub(x, y), F.vsub(x, z))
        v2 = F.add(v, v)
        roots = F.residue_codes if kind == "acute_angle" else F.nonresidue_codes
        prod = 1
        for alpha in sorted(roots):
            d = F.sub(v2, alpha)
            prod = F.mul(prod, F.mul(d, d))
        return F.sub(1, prod)
    if kind == "balanced_linear_equation":
        a = spec.coefficients
        assert a is not None
        out = 1
        for s in range(spec.n):
            acc = 0
            for ai, x in zip(a, pts):
                acc = F.add(acc, F.mul(ai, x[s]))
            out = F.mul(out, _one_minus_pow(F, acc))
        return out
    g = spec.identifier_polynomial
    if g is not None:
        out = 1
        for sub in itertools.combinations(pts, g.m):
            out = F.mul(out, _one_minus_pow(F, g.evaluate(F, sub)))
            if out == 0:
                break
        return out
    raise ConfigError(f"no tensor for kind {kind!r}")


def tensor_value(spec: PropertySpec, tup: Sequence) -> int:
    """Raw field code of the tensor at the tuple."""
    return _tensor(spec, _points(spec, tup))


class TensorEval:
    """Memoised tensor evaluation; values are pure so concurrent fills agree."""

    def __init__(self, spec: PropertySpec):
        self.spec = spec
        self.memo: dict[tuple[Point, ...], int] = {}

    def __call__(self, tup: Sequence) -> int:
        pts = _points(self.spec, tup)
        v = self.memo.get(pts)
        if v is None:
            v = _tensor(self.spec, pts)
            self.memo[pts] = v
        return v


# -- verification -------------------------------------------------------------------


@dataclass
class SemanticsReport:
    kind: str
    mode: str
    tuples_checked: int
    violations: int
    witnesses: list[dict] = dc_field(default_factory=list)
    identifier_checks: dict[str, bool] = dc_field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violations == 0 and all(self.identifier_checks.values())

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "mode": self.mode,
            "tuples_checked": self.tuples_checked,
            "violations": self.violations,
            "identifier_checks": self.identifier_checks,
            "witnesses": self.witnesses,
            "ok": self.ok,
        }


def _expected(spec: PropertySpec, pts: tuple[Point, ...]) -> tuple[int | None, str]:
    """Value the construction claims for the tuple, or None when it claims nothing.

    Tensors built as products of (1 - g^(q-1)) claim 1 exactly on tuples with
    the property.  Angle tensors claim the table "0 on any coincidence, 1
    otherwise", but only on tuples whose point set avoids the property.
    """
    if spec.kind in ANGLE_KINDS:
        if len(set(pts)) < 3:
            return 0, "coincident entries"
        if _set_avoids(spec, list(dict.fromkeys(pts))):
            return 1, "distinct triple of an avoiding set"
        return None, ""
    return (1 if property_holds(spec, pts) else 0), "property indicator"


def _set_avoids(spec: PropertySpec, pts: Sequence[Point]) -> bool:
    return not any(_forbidden(spec, t) for t in itertools.product(pts, repeat=spec.k))


def _tuple_stream(spec: PropertySpec, mode: str, samples: int, seed: int, limit: int | None):
    F = spec.field
    dim = spec.n * spec.k
    if mode == "exhaustive":
        total = F.q**dim
        cap = budget(DEFAULT_TUPLE_BUDGET) if limit is None else limit
        if total > cap:
            raise SizeLimitError(f"exhaustive check needs {total} tuples, budget is {cap}")
        for flat in itertools.product(range(F.q), repeat=dim):
            yield tuple(tuple(flat[i * spec.n:(i + 1) * spec.n]) for i in range(spec.k))
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            flat = rng.integers(0, F.q, size=dim).tolist()
            # Half of the samples get a forced coincidence so degenerate tuples are covered.
            if spec.k > 1 and rng.random() < 0.5:
                i, j = rng.choice(spec.k, size=2, replace=False).tolist()
                flat[j * spec.n:(j + 1) * spec.n] = flat[i * spec.n:(i + 1) * spec.n]
            yield tuple(tuple(flat[i * spec.n:(i + 1) * spec.n]) for i in range(spec.k))
    else:
        raise ConfigError(f"mode must be exhaustive or sampled, got {mode!r}")


def verify_tensor_semantics(
    spec: PropertySpec,
    mode: str = "exhaustive",
    samples: int = 2000,
    seed: int = 0,
    max_witnesses: int = 10,
    limit: int | None = None,
) -> SemanticsReport:
    """Compare the tensor with the value its construction claims, tuple by tuple."""
    report = SemanticsReport(spec.kind, mode, 0, 0)
    F = spec.field
    for pts in _tuple_stream(spec, mode, samples, seed, limit):
        report.tuples_checked += 1
        t = _tensor(spec, pts)
        expected, why = _expected(spec, pts)
        bad = expected is not None and t != expected
        if spec.zero_one_valued and t not in (0, 1):
            bad, why = True, "tensor value outside {0, 1}"
        if bad:
            report.violations += 1
            if len(report.witnesses) < max_witnesses:
                report.witnesses.append(
                    {
                        "tuple": [list(_json_point(F, x)) for x in pts],
                        "tensor": _json_code(F, t),
                        "expected": expected,
                        "claim": why,
                    }
                )
    g = spec.identifier_polynomial
    if g is not None:
        report.identifier_checks = _identifier_checks(spec, g, mode, samples, seed, limit)
    return report


def _identifier_checks(
    spec: PropertySpec, g: PolynomialSpec, mode: str, samples: int, seed: int, limit: int | None
) -> dict[str, bool]:
    """Condition (2): property iff g vanishes on every increasing m-subset; (3): g(x,...,x) = 0."""
    F = spec.field
    cond2 = True
    for pts in _tuple_stream(spec, mode, samples, seed + 1, limit):
        vanish = all(g.evaluate(F, sub) == 0 for sub in itertools.combinations(pts, g.m))
        if vanish != _relation(spec, pts):
            cond2 = False
            break
    if mode == "exhaustive" and F.q**spec.n <= (limit or budget(DEFAULT_TUPLE_BUDGET)):
        diag_pts: Iterable[Point] = itertools.product(range(F.q), repeat=spec.n)
    else:
        rng = np.random.default_rng(seed + 2)
        diag_pts = [tuple(rng.integers(0, F.q, size=spec.n).tolist()) for _ in range(samples)]
    cond3 = all(g.evaluate(F, [tuple(x)] * g.m) == 0 for x in diag_pts)
    return {"polynomial": True, "characterises_property": cond2, "vanishes_on_constant": cond3}


def _json_code(F: FieldSpec, c: int) -> int | list[int]:
    return c if F.ell == 1 else list(F.coeffs(c))


def _json_point(F: FieldSpec, x: Point) -> list:
    return [_json_code(F, c) for c in x]


def _as_points(spec: PropertySpec, A: Sequence) -> list[Point]:
    pts = [_points(spec, [a] * spec.k)[0] for a in A]
    if len(set(pts)) != len(pts):
        raise ConfigError("the set A contains repeated points")
    return pts


def _grid(spec: PropertySpec, A: Sequence[Point], limit: int | None):
    total = len(A) ** spec.k
    cap = budget(DEFAULT_TUPLE_BUDGET) if limit is None else limit
    if total > cap:
        raise SizeLimitError(f"|A|^k = {total} tuples exceeds budget {cap}")
    return itertools.product(range(len(A)), repeat=spec.k)


@dataclass
class DiagonalisationReport:
    """Evaluation of I_f * T over A^k, with each hypothesis reported separately."""

    size: int
    tuples_evaluated: int
    conditions: dict[str, bool]
    off_diagonal_zero: bool
    diagonal_matches_prediction: bool
    diagonal_nonzero: bool
    diagonal_value: Any
    witnesses: list[dict] = dc_field(default_factory=list)

    @property
    def conclusion_holds(self) -> bool:
        """I_f * T is diagonal with nonzero diagonal, so |A| bounds its partition rank from below."""
        return self.off_diagonal_zero and self.diagonal_nonzero

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "tuples_evaluated": self.tuples_evaluated,
            "conditions": self.conditions,
            "off_diagonal_zero": self.off_diagonal_zero,
            "diagonal_matches_prediction": self.diagonal_matches_prediction,
            "diagonal_nonzero": self.diagonal_nonzero,
            "diagonal_value": _scalar_json(self.diagonal_value),
            "conclusion_holds": self.conclusion_holds,
            "witnesses": self.witnesses,
        }


def _scalar_json(v: Any) -> Any:
    if hasattr(v, "to_json"):
        return v.to_json()
    return v if not hasattr(v, "denominator") or v.denominator != 1 else int(v)


def _require_field(f: PartitionFunction, spec: PropertySpec) -> None:
    if f.field != spec.field:
        raise ConfigError(f"f takes values in {f.field!r} but the tensor lives in {spec.field!r}")
    if f.k != spec.k:
        raise DimensionError(f"f on Π_{f.k} but the property has arity {spec.k}")


def _indicator_by_pattern(f: PartitionFunction):
    """I_f depends only on the equality pattern, so evaluate once per pattern."""
    coeffs = indicator_coefficients(f)
    cache: dict[SetPartition, Any] = {}

    def value(idx: Sequence[int]) -> Any:
        pi = partition_of_tuple(idx)
        v = cache.get(pi)
        if v is None:
            v = evaluate_indicator(coeffs, pi.assignment)
            cache[pi] = v
        return v

    return value


def verify_main2_diagonalization(
    f: PartitionFunction,
    spec: PropertySpec,
    A: Sequence,
    limit: int | None = None,
    max_witnesses: int = 10,
) -> DiagonalisationReport:
    _require_field(f, spec)
    f = f.below_top()
    F = spec.field
    pts = _as_points(spec, A)
    T = TensorEval(spec)
    indicator = _indicator_by_pattern(f)
    diag = diagonal_value(f)
    conds = {
        "constant_tuples_satisfy_property": all(property_holds(spec, [x] * spec.k) for x in pts),
        "tensor_is_property_indicator": True,
        "f_vanishes_on_realised_patterns": True,
        "diagonal_sum_nonzero": condition_four_holds(f),
    }
    off_zero = diag_match = True
    diag_nonzero = bool(pts)
    witnesses: list[dict] = []
    count = 0
    for idx in _grid(spec, pts, limit):
        count += 1
        tup = tuple(pts[i] for i in idx)
        t = T(tup)
        holds = property_holds(spec, tup)
        if t != (1 if holds else 0):
            conds["tensor_is_property_indicator"] = False
        pi = partition_of_tuple(idx)
        if holds and not pi.is_top() and f(pi) != 0:
            conds["f_vanishes_on_realised_patterns"] = False
            if len(witnesses) < max_witnesses:
                witnesses.append({"reason": "property realised where f is nonzero", "tuple": list(idx), "partition": str(pi)})
        value = indicator(idx) * FieldElement(F, t)
        if pi.is_top():
            predicted = diag * FieldElement(F, t)
            if value != predicted:
                diag_match = False
            if value == 0:
                diag_nonzero = False
        elif value != 0:
            off_zero = False
            if len(witnesses) < max_witnesses:
                witnesses.append({"reason": "nonzero off-diagonal entry", "tuple": list(idx), "value": _scalar_json(value)})
    return DiagonalisationReport(len(pts), count, conds, off_zero, diag_match, diag_nonzero, diag, witnesses)


@dataclass
class DecompositionReport:
    """Check of I_f - T = c * delta_top on A^k, with c = diagonal value minus f(top)."""

    size: int
    tuples_evaluated: int
    scalar: Any
    tensor_matches_f: bool
    scalar_nonzero: bool
    identity_holds: bool
    witnesses: list[dict] = dc_field(default_factory=list)

    @property
    def conclusion_holds(self) -> bool:
        return self.tensor_matches_f and self.scalar_nonzero and self.identity_holds

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "tuples_evaluated": self.tuples_evaluated,
            "scalar": _scalar_json(self.scalar),
            "tensor_matches_f": self.tensor_matches_f,
            "scalar_nonzero": self.scalar_nonzero,
            "identity_holds": self.identity_holds,
            "conclusion_holds": self.conclusion_holds,
            "witnesses": self.witnesses,
        }


def verify_main1_decomposition(
    f: PartitionFunction,
    spec: PropertySpec,
    A: Sequence,
    limit: int | None = None,
    max_witnesses: int = 10,
) -> DecompositionReport:
    """``f`` must be defined on all of Π_k (``include_top=True``)."""
    if not f.include_top:
        raise ConfigError("the decomposition check needs f defined on the top partition too")
    _require_field(f, spec)
    F = spec.field
    pts = _as_points(spec, A)
    lower = f.below_top()
    top = SetPartition.top(f.k)
    scalar = diagonal_value(lower) - f(top)
    indicator = _indicator_by_pattern(lower)
    T = TensorEval(spec)
    matches = identity = True
    witnesses: list[dict] = []
    count = 0
    for idx in _grid(spec, pts, limit):
        count += 1
        tup = tuple(pts[i] for i in idx)
        t = FieldElement(F, T(tup))
        pi = partition_of_tuple(idx)
        if t != f(pi):
            matches = False
        diff = indicator(idx) - t
        want = scalar if pi.is_top() else F.zero
        if diff != want:
            identity = False
            if len(witnesses) < max_witnesses:
                witnesses.append(
                    {
                        "tuple": list(idx),
                        "partition": str(pi),
                        "tensor": _scalar_json(t),
                        "f": _scalar_json(f(pi)),
                        "difference": _scalar_json(diff),
                        "expected": _scalar_json(want),
                    }
                )
    return DecompositionReport(len(pts), count, scalar, matches, scalar != 0, identity, witnesses)


def distinctness_with_top(k: int, field: FieldSpec, top_value: int = 0) -> PartitionFunction:
    """f(bottom) = 1, zero elsewhere, with an explicit value on the top partition."""
    return PartitionFunction.from_mapping(
        k, {SetPartition.bottom(k): 1, SetPartition.top(k): top_value}, field, include_top=True
    )


def points_from_json(spec: PropertySpec, rows: Sequence[Sequence]) -> list[Point]:
    return [parse_vector(spec.field, r) for r in rows]
