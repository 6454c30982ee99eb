"""Exact arithmetic in F_p and F_{p^ell}, vectors over them, and residue sets.

Elements are encoded as integers ``0 <= a < q``: the base-p digits of ``a``
are the polynomial coefficients, constant term first.  ``FieldSpec`` does the
arithmetic on these raw codes (the fast path used by tensors and search);
``FieldElement`` and ``FieldVector`` are the user-facing wrappers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Iterable, Iterator, Sequence

from .errors import FieldError, SizeLimitError, budget

# Monic irreducible moduli, constant coefficient first.
BUILTIN_MODULI: dict[tuple[int, int], tuple[int, ...]] = {
    (3, 2): (1, 0, 1),  # x^2 + 1
    (5, 2): (2, 0, 1),  # x^2 + 2
    (3, 3): (1, 2, 0, 1),  # x^3 + 2x + 1
    (7, 2): (1, 0, 1),  # x^2 + 1
}

_TABLE_LIMIT = 1024


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


# -- polynomials over F_p as coefficient lists, constant first ---------------

def _trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod(a: list[int], m: Sequence[int], p: int) -> list[int]:
    a = _trim([x % p for x in a])
    dm = len(m) - 1
    inv_lead = pow(m[-1], p - 2, p)
    while len(a) - 1 >= dm:
        c = a[-1] * inv_lead % p
        shift = len(a) - 1 - dm
        for i, mi in enumerate(m):
            a[shift + i] = (a[shift + i] - c * mi) % p
        _trim(a)
    return a


def _pmul(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _trim(out)


def _pgcd(a: list[int], b: list[int], p: int) -> list[int]:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _pmod(a, b, p)
    return a


def _ppowmod(base: list[int], e: int, m: Sequence[int], p: int) -> list[int]:
    result = [1]
    base = _pmod(base, m, p)
    while e:
        if e & 1:
            result = _pmod(_pmul(result, base, p), m, p)
        base = _pmod(_pmul(base, base, p), m, p)
        e >>= 1
    return result


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(modulus: Sequence[int], p: int) -> bool:
    """Rabin's test: x^(p^ell) = x mod f and gcd(x^(p^(ell/r)) - x, f) = 1 for primes r | ell."""
    m = [c % p for c in modulus]
    ell = len(m) - 1
    if ell < 1 or m[-1] != 1:
        return False
    if ell <= 3:
        # a reducible polynomial of degree <= 3 has a linear factor
        return all(sum(c * pow(x, i, p) for i, c in enumerate(m)) % p for x in range(p))
    x = [0, 1]
    if _ppowmod(x, p**ell, m, p) != _pmod(x, m, p):
        return False
    for r in _prime_factors(ell):
        h = _ppowmod(x, p ** (ell // r), m, p)
        diff = _trim([(a - b) % p for a, b in itertools.zip_longest(h, x, fillvalue=0)])
        if len(_pgcd(m, diff, p)) != 1:
            return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    """The field F_q, q = p**ell, p an odd prime below 2**31."""

    p: int
    ell: int = 1
    modulus: tuple[int, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        p, ell = int(self.p), int(self.ell)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "ell", ell)
        if not is_prime(p) or p == 2 or p >= 2**31:
            raise FieldError(f"p={p} must be an odd prime below 2**31")
        if ell < 1:
            raise FieldError(f"extension degree must be >= 1, got {ell}")
        if ell == 1:
            object.__setattr__(self, "modulus", None)
            return
        mod = self.modulus
        if mod is None:
            mod = BUILTIN_MODULI.get((p, ell))
            if mod is None:
                raise FieldError(f"no built-in modulus for q={p}^{ell}; supply one")
        mod = tuple(int(c) % p for c in mod)
        if len(mod) != ell + 1 or mod[-1] != 1:
            raise FieldError(f"modulus {mod} must be monic of degree {ell}")
        if not is_irreducible(mod, p):
            raise FieldError(f"modulus {mod} is reducible over F_{p}")
        object.__setattr__(self, "modulus", mod)

    @classmethod
    def from_json(cls, obj: dict | int) -> "FieldSpec":
        if isinstance(obj, int):
            return cls(obj)
        try:
            return cls(obj["p"], obj.get("ell", 1), obj.get("modulus"))
        except (KeyError, TypeError) as exc:
            raise FieldError(f"bad field spec {obj!r}") from exc

    def to_json(self) -> dict:
        out: dict = {"p": self.p, "ell": self.ell}
        if self.modulus is not None:
            out["modulus"] = list(self.modulus)
        return out

    @property
    def q(self) -> int:
        return self.p**self.ell

    def __repr__(self) -> str:
        if self.ell == 1:
            return f"F_{self.p}"
        return f"F_{self.q}[{self.modulus}]"

    # -- raw code arithmetic -------------------------------------------------

    def coeffs(self, a: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.ell):
            a, r = divmod(a, self.p)
            out.append(r)
        return tuple(out)

    def from_coeffs(self, coeffs: Sequence[int]) -> int:
        if len(coeffs) > self.ell:
            raise FieldError(f"{len(coeffs)} coefficients for extension degree {self.ell}")
        return sum((int(c) % self.p) * self.p**i for i, c in enumerate(coeffs))

    def from_int(self, n: int) -> int:
        """Image of the integer n (through the prime subfield)."""
        return n % self.p

    def add(self, a: int, b: int) -> int:
        if self.ell == 1:
            return (a + b) % self.p
        return self._add_table[a][b]

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def neg(self, a: int) -> int:
        if self.ell == 1:
            return -a % self.p
        return self.from_coeffs([-c for c in self.coeffs(a)])

    def mul(self, a: int, b: int) -> int:
        if self.ell == 1:
            return a * b % self.p
        if self.q <= _TABLE_LIMIT:
            return self._mul_table[a][b]
        return self._poly_mul(a, b)

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return self.pow(self.inv(a), -e)
        if self.ell == 1:
            return pow(a, e, self.p)
        result, base = 1, a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in a finite field")
        if self.ell == 1:
            return pow(a, self.p - 2, self.p)
        return self.pow(a, self.q - 2)

    def _poly_mul(self, a: int, b: int) -> int:
        prod = _pmul(self.coeffs(a), self.coeffs(b), self.p)
        return self.from_coeffs(_pmod(prod, self.modulus, self.p))

    @cached_property
    def _add_table(self) -> list[list[int]]:
        cs = [self.coeffs(a) for a in range(self.q)]
        return [[self.from_coeffs([(x + y) for x, y in zip(ca, cb)]) for cb in cs] for ca in cs]

    @cached_property
    def _mul_table(self) -> list[list[int]]:
        return [[self._poly_mul(a, b) for b in range(self.q)] for a in range(self.q)]

    def dot(self, u: Sequence[int], v: Sequence[int]) -> int:
        if self.ell == 1:
            return sum(x * y for x, y in zip(u, v)) % self.p
        acc = 0
        for x, y in zip(u, v):
            acc = self.add(acc, self.mul(x, y))
        return acc

    def vsub(self, u: Sequence[int], v: Sequence[int]) -> tuple[int, ...]:
        return tuple(self.sub(x, y) for x, y in zip(u, v))

    # -- wrappers ------------------------------------------------------------

    def element(self, value: "int | FieldElement | Sequence[int]") -> "FieldElement":
        """Embed an integer (via the prime subfield) or a coefficient list."""
        if isinstance(value, FieldElement):
            if value.spec != self:
                raise FieldError(f"element of {value.spec!r} used in {self!r}")
            return value
        if isinstance(value, int):
            return FieldElement(self, self.from_int(value))
        return FieldElement(self, self.from_coeffs(value))

    def elements(self) -> list["FieldElement"]:
        return [FieldElement(self, a) for a in range(self.q)]

    @property
    def zero(self) -> "FieldElement":
        return FieldElement(self, 0)

    @property
    def one(self) -> "FieldElement":
        return FieldElement(self, 1)

    @cached_property
    def residue_codes(self) -> frozenset[int]:
        return frozenset(self.mul(x, x) for x in range(1, self.q))

    @cached_property
    def nonresidue_codes(self) -> frozenset[int]:
        return frozenset(range(1, self.q)) - self.residue_codes


@dataclass(frozen=True)
class FieldElement:
    spec: FieldSpec
    value: int

    @property
    def coeffs(self) -> tuple[int, ...]:
        return self.spec.coeffs(self.value)

    def _code(self, other: object) -> int:
        if isinstance(other, FieldElement):
            if other.spec != self.spec:
                raise FieldError(f"mixing {self.spec!r} and {other.spec!r}")
            return other.value
        if isinstance(other, int):
            return self.spec.from_int(other)
        return NotImplemented  # type: ignore[return-value]

    def _wrap(self, v: int) -> "FieldElement":
        return FieldElement(self.spec, v)

    def __add__(self, other: object) -> "FieldElement":
        o = self._code(other)
        if o is NotImplemented:
            return NotImplemented
        return self._wrap(self.spec.add(self.value, o))

    __radd__ = __add__

    def __sub__(self, other: object) -> "FieldElement":
        o = self._code(other)
        if o is NotImplemented:
            return NotImplemented
        return self._wrap(self.spec.sub(self.value, o))

    def __rsub__(self, other: object) -> "FieldElement":
        o = self._code(other)
        if o is NotImplemented:
            return NotImplemented
        return self._wrap(self.spec.sub(o, self.value))

    def __mul__(self, other: object) -> "FieldElement":
        o = self._code(other)
        if o is NotImplemented:
            return NotImplemented
        return self._wrap(self.spec.mul(self.value, o))

    __rmul__ = __mul__

    def __neg__(self) -> "FieldElement":
        return self._wrap(self.spec.neg(self.value))

    def __pow__(self, e: int) -> "FieldElement":
        return self._wrap(self.spec.pow(self.value, e))

    def inv(self) -> "FieldElement":
        return self._wrap(self.spec.inv(self.value))

    def __truediv__(self, other: object) -> "FieldElement":
        o = self._code(other)
        if o is NotImplemented:
            return NotImplemented
        return self._wrap(self.spec.mul(self.value, self.spec.inv(o)))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, FieldElement):
            return self.spec == other.spec and self.value == other.value
        if isinstance(other, int):
            return self.value == self.spec.from_int(other)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.spec, self.value))

    def __bool__(self) -> bool:
        return self.value != 0

    def __repr__(self) -> str:
        if self.spec.ell == 1:
            return f"{self.value} (mod {self.spec.p})"
        return f"{list(self.coeffs)} in {self.spec!r}"

    def to_json(self) -> int | list[int]:
        return self.value if self.spec.ell == 1 else list(self.coeffs)

    def lift(self) -> int:
        """Representative in (-p/2, p/2] for prime-field elements."""
        if self.spec.ell != 1:
            raise FieldError("lift is only defined for prime fields")
        v = self.value
        return v - self.spec.p if v > self.spec.p // 2 else v


@dataclass(frozen=True)
class FieldVector:
    spec: FieldSpec
    entries: tuple[int, ...]

    @classmethod
    def of(cls, spec: FieldSpec, values: Iterable) -> "FieldVector":
        codes = []
        for v in values:
            if isinstance(v, FieldElement):
                codes.append(spec.element(v).value)
            elif isinstance(v, int):
                codes.append(spec.from_int(v))
            else:
                codes.append(spec.from_coeffs(v))
        return cls(spec, tuple(codes))

    @property
    def n(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, s: int) -> FieldElement:
        return FieldElement(self.spec, self.entries[s])

    def __add__(self, other: "FieldVector") -> "FieldVector":
        _same(self, other)
        return FieldVector(self.spec, tuple(self.spec.add(a, b) for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "FieldVector") -> "FieldVector":
        _same(self, other)
        return FieldVector(self.spec, self.spec.vsub(self.entries, other.entries))

    def to_json(self) -> list:
        if self.spec.ell == 1:
            return list(self.entries)
        return [list(self.spec.coeffs(a)) for a in self.entries]

    def __repr__(self) -> str:
        return f"FieldVector({self.to_json()}, {self.spec!r})"


def _same(u: FieldVector, v: FieldVector) -> None:
    if u.spec != v.spec:
        raise FieldError(f"vectors over {u.spec!r} and {v.spec!r}")
    if u.n != v.n:
        from .errors import DimensionError

        raise DimensionError(f"vectors of dimension {u.n} and {v.n}")


def inner_product(u: FieldVector, v: FieldVector) -> FieldElement:
    _same(u, v)
    return FieldElement(u.spec, u.spec.dot(u.entries, v.entries))


def quadratic_residues(spec: FieldSpec) -> frozenset[FieldElement]:
    """Nonzero squares of F_q; there are (q-1)/2 of them."""
    return frozenset(FieldElement(spec, a) for a in spec.residue_codes)


def residue_product_sign(elements: Iterable[FieldElement], spec: FieldSpec) -> FieldElement:
    """Product of -a over the given elements (1 for the empty set)."""
    return reduce(lambda acc, a: acc * -spec.element(a), elements, spec.one)


def enumerate_vectors(spec: FieldSpec, n: int, limit: int | None = None) -> Iterator[FieldVector]:
    """All q^n vectors in lexicographic order (first coordinate most significant)."""
    for codes in vector_codes(spec, n, limit):
        yield FieldVector(spec, codes)


def vector_codes(spec: FieldSpec, n: int, limit: int | None = None) -> list[tuple[int, ...]]:
    if n < 0:
        raise FieldError("dimension must be non-negative")
    limit = budget() if limit is None else limit
    if spec.q**n > limit:
        raise SizeLimitError(f"{spec.q}^{n} = {spec.q ** n} vectors exceeds budget {limit}")
    return list(itertools.product(range(spec.q), repeat=n))


def parse_vector(spec: FieldSpec, obj: Sequence) -> tuple[int, ...]:
    """Raw codes from JSON: integers (prime fields) or coefficient arrays."""
    out = []
    for x in obj:
        if isinstance(x, int):
            out.append(spec.from_int(x))
        else:
            out.append(spec.from_coeffs(x))
    return tuple(out)
