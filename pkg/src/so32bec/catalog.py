"""SO(3,2) generators, order-parameter operators and the conserved charge.

Generator names are plain strings::

    E+ E- E3 F+ F- F3 U+ U- V+ V-      (every sector)
    D+ D- N+ N- N3 Q                   (momentum sectors only; D is Delta)

Lowering operators are always built as adjoints of the raising operators.
The printed lowering forms of ``E-`` and ``D-`` for momentum sectors carry a
misplaced mode label (``a_{-k} b_{-k}`` instead of ``a_{-k} b_{k}``); they are
kept in :data:`PRINTED_LOWERING` so reports can show the discrepancy.

Sector labels: ``q = 0`` is the two-mode zero sector, ``q = k != 0`` uses the
four modes ``a_{+-k}, b_{+-k}`` with the formulas evaluated at label ``k``.
So ``generator_polynomial('Q', -k)`` is the charge written with ``k -> -k``,
which acts on the same four modes as sector ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping

from .boson import (
    SQRT2,
    BosonPolynomial,
    ExactScalar,
    ModeIndex,
    annihilate,
    commutator,
    create,
    number,
    render,
)
from .errors import DomainError

__all__ = [
    "SO32_NAMES",
    "EXTRA_NAMES",
    "ALL_NAMES",
    "RAISING",
    "sector_modes",
    "generator_polynomial",
    "printed_lowering",
    "Relation",
    "RelationResult",
    "StructureReport",
    "SO32_TABLE",
    "EXTENDED_TABLE",
    "verify_structure",
    "verify_extended_structure",
    "decompose",
]

SO32_NAMES = ("E+", "E-", "E3", "F+", "F-", "F3", "U+", "U-", "V+", "V-")
EXTRA_NAMES = ("D+", "D-", "N+", "N-", "N3", "Q")
ALL_NAMES = SO32_NAMES + EXTRA_NAMES
RAISING = ("E+", "F+", "U+", "V+", "D+", "N+")
SELF_ADJOINT = ("E3", "F3", "N3", "Q")

HALF = Fraction(1, 2)
INV_SQRT2 = SQRT2 / 2


def sector_modes(q: int) -> tuple[ModeIndex, ...]:
    """Modes touched by sector ``|q|`` in canonical order."""
    k = abs(int(q))
    if k == 0:
        return (ModeIndex("a", 0), ModeIndex("b", 0))
    return (ModeIndex("a", -k), ModeIndex("a", k), ModeIndex("b", -k), ModeIndex("b", k))


def _raising(name: str, q: int) -> BosonPolynomial:
    ad = lambda j: create("a", j)  # noqa: E731
    bd = lambda j: create("b", j)  # noqa: E731
    a = lambda j: annihilate("a", j)  # noqa: E731
    b = lambda j: annihilate("b", j)  # noqa: E731
    if q == 0:
        table = {
            "E+": INV_SQRT2 * (ad(0) * bd(0)),
            "F+": INV_SQRT2 * (bd(0) * a(0)),
            "U+": HALF * (ad(0) * ad(0)),
            "V+": HALF * (bd(0) * bd(0)),
        }
    else:
        k = q
        table = {
            "E+": INV_SQRT2 * (ad(k) * bd(-k) + ad(-k) * bd(k)),
            "F+": INV_SQRT2 * (bd(k) * a(k) + bd(-k) * a(-k)),
            "U+": ad(-k) * ad(k),
            "V+": bd(-k) * bd(k),
            "D+": INV_SQRT2 * (ad(k) * bd(-k) - ad(-k) * bd(k)),
            "N+": INV_SQRT2 * (bd(k) * a(k) - bd(-k) * a(-k)),
        }
    return table[name]


def _diagonal(name: str, q: int) -> BosonPolynomial:
    na = lambda j: number("a", j)  # noqa: E731
    nb = lambda j: number("b", j)  # noqa: E731
    if q == 0:
        table = {
            "E3": HALF * (na(0) + nb(0) + 1),
            "F3": HALF * (nb(0) - na(0)),
        }
    else:
        k = q
        table = {
            "E3": HALF * (na(k) + na(-k) + nb(k) + nb(-k) + 2),
            "F3": HALF * (nb(k) + nb(-k) - na(k) - na(-k)),
            "N3": HALF * (nb(k) - nb(-k) - na(k) + na(-k)),
            "Q": HALF * (na(k) + nb(k) - na(-k) - nb(-k) - 2),
        }
    return table[name]


def generator_polynomial(name: str, q: int) -> BosonPolynomial:
    """Exact polynomial of generator ``name`` at sector label ``q``."""
    if name not in ALL_NAMES:
        raise DomainError(f"unknown generator {name!r}")
    q = int(q)
    if q == 0 and name in EXTRA_NAMES:
        raise DomainError(f"{name} is defined only for momentum sectors (q != 0)")
    if name in SELF_ADJOINT:
        return _diagonal(name, q)
    if name.endswith("+"):
        return _raising(name, q)
    return _raising(name[:-1] + "+", q).dag()


def printed_lowering(name: str, q: int) -> BosonPolynomial:
    """Lowering operator exactly as printed (differs from the adjoint for E-, D- at q != 0)."""
    if q == 0 or name not in ("E-", "D-"):
        return generator_polynomial(name, q)
    k = int(q)
    a = lambda j: annihilate("a", j)  # noqa: E731
    b = lambda j: annihilate("b", j)  # noqa: E731
    sign = 1 if name == "E-" else -1
    return INV_SQRT2 * (a(k) * b(-k) + sign * (a(-k) * b(-k)))


PRINTED_LOWERING = {name: "a(a,k)*a(b,-k) {} a(a,-k)*a(b,-k)".format("+" if name == "E-" else "-") for name in ("E-", "D-")}


# ---------------------------------------------------------------------------
# structure tables

Combination = Mapping[str, Fraction]


@dataclass(frozen=True)
class Relation:
    """``[x, y] = sum(coeff * generator) + constant``."""

    x: str
    y: str
    rhs: tuple[tuple[str, Fraction], ...]
    constant: Fraction = Fraction(0)
    source: str = "so32"

    def expected(self, q: int) -> BosonPolynomial:
        total = BosonPolynomial.scalar(self.constant)
        for name, c in self.rhs:
            total = total + c * generator_polynomial(name, q)
        return total

    def rhs_text(self) -> str:
        return _combination_text(dict(self.rhs), self.constant)


def _combination_text(coeffs: Mapping[str, object], constant=0) -> str:
    parts = []
    for name, c in coeffs.items():
        if c == 1:
            parts.append(f"+{name}")
        elif c == -1:
            parts.append(f"-{name}")
        else:
            parts.append(f"+({c})*{name}")
    if constant:
        parts.append(f"+({constant})")
    if not parts:
        return "0"
    text = " ".join(parts)
    return text[1:] if text.startswith("+") else text


def _expand(pattern: str, source: str) -> list[Relation]:
    """Expand a compact ``[X±, Y∓] = ∓Z∓`` style rule into explicit relations.

    The text form is ``"X{s} Y{t} -> sign*Z{u}"`` where ``s``, ``t``, ``u``
    and ``sign`` are one of ``p`` (±, upper) / ``m`` (∓) / a literal.
    """
    lhs, rhs = pattern.split("->")
    x, y = lhs.split()
    out = []
    for upper in (True, False):
        pm, mp = ("+", "-") if upper else ("-", "+")

        def sub(tok: str) -> str:
            return tok.replace("{pm}", pm).replace("{mp}", mp)

        terms = []
        for tok in rhs.split():
            sign_tok, name = tok.split("*")
            sign_tok = sub(sign_tok)
            sign = Fraction(1) if sign_tok in ("+", "") else Fraction(-1)
            terms.append((sub(name), sign))
        rel = Relation(sub(x), sub(y), tuple(terms), source=source)
        if rel not in out:
            out.append(rel)
    return out


_SO32_RULES = [
    "E{pm} V{mp} -> {mp}*F{mp}",
    "F{pm} V{mp} -> {mp}*E{mp}",
    "E{pm} U{mp} -> {mp}*F{pm}",
    "F{pm} U{pm} -> {pm}*E{pm}",
    "E{pm} F{pm} -> {mp}*V{pm}",
    "E{pm} F{mp} -> {mp}*U{pm}",
    "E3 E{pm} -> {pm}*E{pm}",
    "F3 F{pm} -> {pm}*F{pm}",
    "E3 U{pm} -> {pm}*U{pm}",
    "F3 U{pm} -> {mp}*U{pm}",
    "E3 V{pm} -> {pm}*V{pm}",
    "F3 V{pm} -> {pm}*V{pm}",
]

_EXTENDED_RULES = [
    "N{pm} F{mp} -> {pm}*N3",
    "F3 N{pm} -> {pm}*N{pm}",
    "N{pm} U{pm} -> {mp}*D{pm}",
    "N{pm} V{mp} -> {mp}*D{mp}",
    "D{pm} E{mp} -> {pm}*N3",
    "D{pm} U{mp} -> {pm}*N{pm}",
    "D{pm} V{mp} -> {mp}*N{mp}",
    "E3 D{pm} -> {pm}*D{pm}",
    "N3 E{pm} -> {mp}*D{pm}",
    "N3 F{pm} -> {pm}*N{pm}",
    "N3 N{pm} -> {pm}*F{pm}",
    "N3 D{pm} -> {pm}*E{pm}",
    "N{pm} D{pm} -> {pm}*V{pm}",
    "N{pm} D{mp} -> {pm}*U{mp}",
]


def _table(rules: list[str], source: str) -> tuple[Relation, ...]:
    rels: list[Relation] = []
    for r in rules:
        rels.extend(_expand(r, source))
    return tuple(rels)


SO32_TABLE: tuple[Relation, ...] = _table(_SO32_RULES, "so32") + (
    Relation("E+", "E-", (("E3", Fraction(-1)),)),
    Relation("F+", "F-", (("F3", Fraction(1)),)),
    Relation("U+", "U-", (("E3", Fraction(-1)), ("F3", Fraction(1)))),
    Relation("V+", "V-", (("E3", Fraction(-1)), ("F3", Fraction(-1)))),
)

EXTENDED_TABLE: tuple[Relation, ...] = _table(_EXTENDED_RULES, "extended") + (
    Relation("N+", "N-", (("F3", Fraction(1)),), source="extended"),
    Relation("D+", "D-", (("E3", Fraction(1)),), source="extended"),
)


# ---------------------------------------------------------------------------
# exact decomposition onto the generator basis


def decompose(
    p: BosonPolynomial, q: int, names: tuple[str, ...] | None = None
) -> tuple[dict[str, ExactScalar], ExactScalar, BosonPolynomial]:
    """Write ``p`` as ``sum c_X X + c_0`` over catalog generators of sector ``q``.

    Exact Gaussian elimination over Q(sqrt 2).  Returns the coefficients, the
    constant and the remainder (zero iff ``p`` lies in the span).
    """
    if names is None:
        names = SO32_NAMES if q == 0 else ALL_NAMES
    basis = [generator_polynomial(n, q) for n in names] + [BosonPolynomial.scalar(1)]
    labels = list(names) + ["1"]
    monos = sorted({m for b in basis for m, _ in b.items()} | {m for m, _ in p.items()})
    cols = [{m: c for m, c in b.items()} for b in basis]
    target = {m: c for m, c in p.items()}
    # augmented rows: one per monomial
    zero = ExactScalar()
    rows = [[cols[j].get(m, zero) for j in range(len(basis))] + [target.get(m, zero)] for m in monos]
    pivots = []
    r = 0
    ncol = len(basis)
    for c in range(ncol):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = rows[r][c].inverse()
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [vi - f * vr for vi, vr in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
    coeffs = {labels[c]: rows[i][-1] for i, c in enumerate(pivots)}
    rebuilt = BosonPolynomial.scalar(0)
    for name, c in coeffs.items():
        rebuilt = rebuilt + c * basis[labels.index(name)]
    remainder = p - rebuilt
    constant = coeffs.pop("1", ExactScalar())
    return {n: c for n, c in coeffs.items() if c}, constant, remainder


# ---------------------------------------------------------------------------
# verification


@dataclass
class RelationResult:
    lhs: str
    expected: str
    residual: BosonPolynomial
    source: str
    holds_as: str | None = None

    @property
    def ok(self) -> bool:
        return self.residual.is_zero()

    def line(self) -> str:
        status = "ok" if self.ok else f"FAIL residual={render(self.residual)}"
        text = f"{self.lhs} = {self.expected} : {status}"
        if self.holds_as is not None and not self.ok:
            text += f" ; holds as {self.lhs} = {self.holds_as}"
        return text


@dataclass
class StructureReport:
    sector: int
    relations: list[RelationResult] = field(default_factory=list)
    vanishing: list[RelationResult] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.relations) and all(r.ok for r in self.vanishing)

    @property
    def failures(self) -> list[RelationResult]:
        return [r for r in self.relations + self.vanishing if not r.ok]

    def lines(self) -> list[str]:
        out = [f"# sector q={self.sector}"]
        out += [f"note: {n}" for n in self.notes]
        out += [r.line() for r in self.relations]
        out += [r.line() for r in self.vanishing]
        out.append(f"# {len(self.relations)} relations, {len(self.vanishing)} vanishing pairs, "
                   f"{len(self.failures)} failures")
        return out

    def text(self) -> str:
        return "\n".join(self.lines()) + "\n"


def _check(rel: Relation, q: int) -> RelationResult:
    actual = commutator(generator_polynomial(rel.x, q), generator_polynomial(rel.y, q))
    residual = actual - rel.expected(q)
    holds_as = None
    if not residual.is_zero():
        coeffs, const, rem = decompose(actual, q)
        holds_as = _combination_text({n: c for n, c in coeffs.items()}, const) if rem.is_zero() else render(actual)
    return RelationResult(f"[{rel.x},{rel.y}]", rel.rhs_text(), residual, rel.source, holds_as)


def _lowering_note(q: int) -> list[str]:
    if q == 0:
        return []
    notes = []
    for name in ("E-", "D-"):
        if name == "D-" and q == 0:
            continue
        adj = generator_polynomial(name, q)
        printed = printed_lowering(name, q)
        notes.append(
            f"{name} built as adjoint of {name[0]}+: {render(adj)} ; printed form {render(printed)} "
            f"{'agrees' if adj == printed else 'is not the adjoint'}"
        )
    return notes


def verify_structure(q: int) -> StructureReport:
    """Check the SO(3,2) table in sector ``q`` and that all other pairs commute."""
    q = int(q)
    report = StructureReport(q, notes=[n for n in _lowering_note(q) if n.startswith("E-")])
    listed = set()
    for rel in SO32_TABLE:
        report.relations.append(_check(rel, q))
        listed.add(frozenset((rel.x, rel.y)))
    for x, y in combinations(SO32_NAMES, 2):
        if frozenset((x, y)) in listed:
            continue
        report.vanishing.append(_check(Relation(x, y, (), source="vanishes"), q))
    return report


def verify_extended_structure(k: int) -> StructureReport:
    """Check the order-parameter relations in momentum sector ``k``."""
    k = int(k)
    if k == 0:
        raise DomainError("extended relations need a momentum sector k != 0")
    report = StructureReport(k, notes=_lowering_note(k))
    for rel in EXTENDED_TABLE:
        report.relations.append(_check(rel, k))
    return report
