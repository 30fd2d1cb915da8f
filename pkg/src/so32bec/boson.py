"""Exact normal-ordered polynomials in multimode boson operators.

Coefficients live in the ring Q(sqrt 2), stored as pairs of rationals, so
every commutation identity among the quadratic generators can be checked
with zero rounding error.

Modes are labelled by :class:`ModeIndex` ``(species, sector)``.  A
:class:`BosonMonomial` stores its creators and annihilators as sorted tuples;
the product of two monomials is normal ordered mode by mode with

    a^m (a^+)^n = sum_j C(m, j) C(n, j) j! (a^+)^(n-j) a^(m-j).
"""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction
from functools import reduce
from itertools import product
from typing import Iterable, Iterator, Mapping, NamedTuple, Union

__all__ = [
    "ModeIndex",
    "ExactScalar",
    "BosonMonomial",
    "BosonPolynomial",
    "SQRT2",
    "mode",
    "create",
    "annihilate",
    "number",
    "multiply",
    "commutator",
    "adjoint",
    "render",
]

SPECIES = ("a", "b")


class ModeIndex(NamedTuple):
    """A single boson mode: species ``'a'`` or ``'b'`` and integer momentum label."""

    species: str
    sector: int

    def __str__(self) -> str:
        return f"{self.species},{self.sector}"


def mode(species: str, sector: int) -> ModeIndex:
    if species not in SPECIES:
        raise ValueError(f"unknown species {species!r}")
    return ModeIndex(species, int(sector))


Number = Union[int, Fraction, "ExactScalar"]


class ExactScalar:
    """The number ``p + s*sqrt(2)`` with rational ``p`` and ``s``."""

    __slots__ = ("p", "s")

    def __init__(self, p: int | Fraction = 0, s: int | Fraction = 0):
        self.p = Fraction(p)
        self.s = Fraction(s)

    @classmethod
    def coerce(cls, x: Number) -> ExactScalar:
        if isinstance(x, ExactScalar):
            return x
        if isinstance(x, (int, Fraction)):
            return cls(x)
        raise TypeError(f"cannot represent {x!r} exactly in Q(sqrt 2)")

    def __add__(self, other: Number) -> ExactScalar:
        if not isinstance(other, (int, Fraction, ExactScalar)):
            return NotImplemented
        o = ExactScalar.coerce(other)
        return ExactScalar(self.p + o.p, self.s + o.s)

    __radd__ = __add__

    def __neg__(self) -> ExactScalar:
        return ExactScalar(-self.p, -self.s)

    def __sub__(self, other: Number) -> ExactScalar:
        return self + (-ExactScalar.coerce(other))

    def __rsub__(self, other: Number) -> ExactScalar:
        return ExactScalar.coerce(other) - self

    def __mul__(self, other: Number) -> ExactScalar:
        if not isinstance(other, (int, Fraction, ExactScalar)):
            return NotImplemented
        o = ExactScalar.coerce(other)
        return ExactScalar(self.p * o.p + 2 * self.s * o.s, self.p * o.s + self.s * o.p)

    __rmul__ = __mul__

    def inverse(self) -> ExactScalar:
        norm = self.p * self.p - 2 * self.s * self.s
        if norm == 0:
            raise ZeroDivisionError("ExactScalar division by zero")
        return ExactScalar(self.p / norm, -self.s / norm)

    def __truediv__(self, other: Number) -> ExactScalar:
        return self * ExactScalar.coerce(other).inverse()

    def __rtruediv__(self, other: Number) -> ExactScalar:
        return ExactScalar.coerce(other) * self.inverse()

    def __eq__(self, other: object) -> bool:
        try:
            o = ExactScalar.coerce(other)  # type: ignore[arg-type]
        except TypeError:
            return NotImplemented
        return self.p == o.p and self.s == o.s

    def __hash__(self) -> int:
        return hash((self.p, self.s))

    def __bool__(self) -> bool:
        return bool(self.p) or bool(self.s)

    def __float__(self) -> float:
        return float(self.p) + float(self.s) * math.sqrt(2.0)

    def __repr__(self) -> str:
        return f"ExactScalar({self.p}, {self.s})"

    def __str__(self) -> str:
        if not self.s:
            return str(self.p)
        if not self.p:
            return f"{_fmt_rational_factor(self.s)}sqrt2"
        return f"({self.p}{'+' if self.s > 0 else '-'}{_fmt_rational_factor(abs(self.s))}sqrt2)"


def _fmt_rational_factor(x: Fraction) -> str:
    if x == 1:
        return ""
    if x == -1:
        return "-"
    return f"{x}*"


SQRT2 = ExactScalar(0, 1)


def _sorted(modes: Iterable[ModeIndex]) -> tuple[ModeIndex, ...]:
    return tuple(sorted(modes))


class BosonMonomial(NamedTuple):
    """Normal-ordered product ``prod(creators) * prod(annihilators)``."""

    creators: tuple[ModeIndex, ...]
    annihilators: tuple[ModeIndex, ...]

    @classmethod
    def make(cls, creators: Iterable[ModeIndex] = (), annihilators: Iterable[ModeIndex] = ()):
        return cls(_sorted(creators), _sorted(annihilators))

    @property
    def degree(self) -> int:
        return len(self.creators) + len(self.annihilators)

    def modes(self) -> set[ModeIndex]:
        return set(self.creators) | set(self.annihilators)


IDENTITY = BosonMonomial((), ())


def _reorder(ann: Counter, cre: Counter) -> Iterator[tuple[int, Counter, Counter]]:
    """Normal order ``prod ann * prod cre``; yields (weight, creators, annihilators)."""
    shared = [m for m in ann if m in cre]
    choices = []
    for m in shared:
        p, n = ann[m], cre[m]
        choices.append([(j, math.comb(p, j) * math.comb(n, j) * math.factorial(j)) for j in range(min(p, n) + 1)])
    for picks in product(*choices):
        weight = 1
        c_left = Counter(cre)
        a_left = Counter(ann)
        for m, (j, w) in zip(shared, picks):
            weight *= w
            c_left[m] -= j
            a_left[m] -= j
        yield weight, +c_left, +a_left


class BosonPolynomial:
    """Immutable finite sum of normal-ordered monomials with Q(sqrt 2) coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[BosonMonomial, Number] | None = None):
        clean: dict[BosonMonomial, ExactScalar] = {}
        for mono, c in (terms or {}).items():
            c = ExactScalar.coerce(c)
            if c:
                clean[mono] = c
        self._terms = clean
        self._hash: int | None = None

    @classmethod
    def scalar(cls, c: Number) -> BosonPolynomial:
        return cls({IDENTITY: c})

    @classmethod
    def from_monomial(cls, mono: BosonMonomial, c: Number = 1) -> BosonPolynomial:
        return cls({mono: c})

    @property
    def terms(self) -> dict[BosonMonomial, ExactScalar]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def modes(self) -> set[ModeIndex]:
        return set().union(*(m.modes() for m in self._terms)) if self._terms else set()

    def degree(self) -> int:
        return max((m.degree for m in self._terms), default=0)

    def constant(self) -> ExactScalar:
        return self._terms.get(IDENTITY, ExactScalar())

    def __add__(self, other: BosonPolynomial | Number) -> BosonPolynomial:
        other = _as_poly(other)
        out = dict(self._terms)
        for mono, c in other._terms.items():
            out[mono] = out.get(mono, ExactScalar()) + c
        return BosonPolynomial(out)

    __radd__ = __add__

    def __neg__(self) -> BosonPolynomial:
        return BosonPolynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other: BosonPolynomial | Number) -> BosonPolynomial:
        return self + (-_as_poly(other))

    def __rsub__(self, other: BosonPolynomial | Number) -> BosonPolynomial:
        return _as_poly(other) - self

    def __mul__(self, other: BosonPolynomial | Number) -> BosonPolynomial:
        if isinstance(other, BosonPolynomial):
            return multiply(self, other)
        c = ExactScalar.coerce(other)
        return BosonPolynomial({m: c * v for m, v in self._terms.items()})

    def __rmul__(self, other: Number) -> BosonPolynomial:
        c = ExactScalar.coerce(other)
        return BosonPolynomial({m: c * v for m, v in self._terms.items()})

    def __truediv__(self, other: Number) -> BosonPolynomial:
        inv = ExactScalar.coerce(other).inverse()
        return self * inv

    def __pow__(self, n: int) -> BosonPolynomial:
        if n < 0:
            raise ValueError("negative power")
        return reduce(multiply, [self] * n, BosonPolynomial.scalar(1))

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction, ExactScalar)):
            other = BosonPolynomial.scalar(other)
        if not isinstance(other, BosonPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def dag(self) -> BosonPolynomial:
        return adjoint(self)

    def __repr__(self) -> str:
        return f"BosonPolynomial({render(self)})"

    def __str__(self) -> str:
        return render(self)


def _as_poly(x: BosonPolynomial | Number) -> BosonPolynomial:
    return x if isinstance(x, BosonPolynomial) else BosonPolynomial.scalar(x)


def create(species: str, sector: int) -> BosonPolynomial:
    return BosonPolynomial.from_monomial(BosonMonomial.make(creators=[mode(species, sector)]))


def annihilate(species: str, sector: int) -> BosonPolynomial:
    return BosonPolynomial.from_monomial(BosonMonomial.make(annihilators=[mode(species, sector)]))


def number(species: str, sector: int) -> BosonPolynomial:
    m = mode(species, sector)
    return BosonPolynomial.from_monomial(BosonMonomial.make([m], [m]))


def _multiply_monomials(x: BosonMonomial, y: BosonMonomial) -> dict[BosonMonomial, int]:
    out: dict[BosonMonomial, int] = {}
    if not x.annihilators or not y.creators:
        key = BosonMonomial.make(x.creators + y.creators, x.annihilators + y.annihilators)
        return {key: 1}
    for w, cre, ann in _reorder(Counter(x.annihilators), Counter(y.creators)):
        key = BosonMonomial.make(
            x.creators + tuple(cre.elements()), tuple(ann.elements()) + y.annihilators
        )
        out[key] = out.get(key, 0) + w
    return out


def multiply(p: BosonPolynomial, q: BosonPolynomial) -> BosonPolynomial:
    """Normal-ordered product ``p * q``."""
    acc: dict[BosonMonomial, ExactScalar] = {}
    for mx, cx in p.items():
        for my, cy in q.items():
            c = cx * cy
            for mono, w in _multiply_monomials(mx, my).items():
                acc[mono] = acc.get(mono, ExactScalar()) + c * w
    return BosonPolynomial(acc)


def commutator(p: BosonPolynomial, q: BosonPolynomial) -> BosonPolynomial:
    return multiply(p, q) - multiply(q, p)


def adjoint(p: BosonPolynomial) -> BosonPolynomial:
    # The adjoint of a normal-ordered monomial is again normal ordered.
    return BosonPolynomial(
        {BosonMonomial(m.annihilators, m.creators): c for m, c in p.items()}
    )


def _render_monomial(m: BosonMonomial) -> str:
    parts = [f"ad({x})" for x in m.creators] + [f"a({x})" for x in m.annihilators]
    return "*".join(parts)


def _mono_key(m: BosonMonomial):
    return (m.degree, m.creators, m.annihilators)


def render(p: BosonPolynomial) -> str:
    """Canonical ASCII form, e.g. ``1/2*ad(a,0)*a(a,0) + 1/2``."""
    if p.is_zero():
        return "0"
    chunks = []
    for m in sorted(p._terms, key=_mono_key):
        c = p._terms[m]
        body = _render_monomial(m)
        if not body:
            chunks.append(str(c))
        elif c == 1:
            chunks.append(body)
        elif c == -1:
            chunks.append(f"-{body}")
        else:
            chunks.append(f"{c}*{body}")
    return " + ".join(chunks).replace("+ -", "- ")
