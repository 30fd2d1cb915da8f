"""Second-order correlations, Mandel Q, the Cauchy-Schwarz test and ``I(0)``.

Closed forms evaluate the reference zero-sector expressions for the DW state;
the oracle path computes the same quantities from number-operator
expectations in a truncated Fock space.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Optional

from .errors import DomainError, So32Error, UndefinedCorrelationError
from .fock import StateVector
from .states import CoherentParams, DisplacementParams, MomentSet, brute_force_moments, closed_form_moments

__all__ = [
    "CorrelationReport",
    "CSV_COLUMNS",
    "g2_general",
    "g2_special_B",
    "mandel_q",
    "csi_test",
    "closed_form_report",
    "brute_force_correlations",
    "classify",
    "classify_q",
    "CLOSED_FORM_TOL",
    "ORACLE_TOL",
    "report_difference",
]

CLOSED_FORM_TOL = 1e-9
ORACLE_TOL = 1e-6

CSV_COLUMNS = (
    "z0", "r0", "theta0", "psi0_minus_2delta0", "g2a", "g2b", "g2ab",
    "Qa", "Qb", "I0", "csi_violated", "class_a", "class_b", "provenance",
)


@dataclass(frozen=True)
class CorrelationReport:
    g2_a: float
    g2_b: float
    g2_ab: float
    Q_a: float
    Q_b: float
    I0: float
    csi_violated: bool
    class_a: Optional[str] = None
    class_b: Optional[str] = None
    provenance: str = "closed-form"
    z0: Optional[float] = None
    r0: Optional[float] = None
    theta0: Optional[float] = None
    psi0_minus_2delta0: Optional[float] = None

    def with_point(self, v: CoherentParams, d: DisplacementParams) -> CorrelationReport:
        return replace(self, z0=d.za_abs, r0=v.r, theta0=v.theta, psi0_minus_2delta0=v.psi - 2 * d.delta_a)

    def as_dict(self) -> dict:
        return asdict(self)

    def csv_fields(self) -> dict:
        return {
            "z0": self.z0, "r0": self.r0, "theta0": self.theta0, "psi0_minus_2delta0": self.psi0_minus_2delta0,
            "g2a": self.g2_a, "g2b": self.g2_b, "g2ab": self.g2_ab, "Qa": self.Q_a, "Qb": self.Q_b,
            "I0": self.I0, "csi_violated": self.csi_violated, "class_a": self.class_a,
            "class_b": self.class_b, "provenance": self.provenance,
        }


def _common_phase(d: DisplacementParams) -> float:
    if d.za_abs and d.zb_abs and not math.isclose(d.delta_a, d.delta_b, abs_tol=1e-12):
        raise DomainError("closed forms assume equal displacement phases for both species")
    return d.delta_a if d.za_abs else d.delta_b


def g2_general(v: CoherentParams, d: DisplacementParams) -> tuple[float, float, float]:
    """``(g2_a, g2_b, g2_ab)`` of the zero-sector DW state from the closed forms.

    Raises
    ------
    UndefinedCorrelationError
        If a mean occupation ``|z|^2 + sinh^2 r`` vanishes.
    """
    delta = _common_phase(d)
    r, P, T, F = v.r, v.psi, v.theta, v.phi
    sh2 = math.sinh(r) ** 2
    A, Bz = d.za_abs, d.zb_abs
    na, nb = A**2 + sh2, Bz**2 + sh2
    if na == 0 or nb == 0:
        raise UndefinedCorrelationError("g2 undefined: a mean occupation is zero")
    # coth r * sinh^2 r and tanh r * sinh 2r are expanded so r -> 0 stays finite
    csh = math.sinh(r) * math.cosh(r)
    ga = A**2 * (sh2 - 2 * csh * math.sin(T) * math.cos(P + F - 2 * delta)) / na**2 + 1 + sh2 / na
    gb = Bz**2 * (sh2 + 2 * csh * math.sin(T) * math.cos(P - F - 2 * delta)) / nb**2 + 1 + sh2 / nb
    S = math.sinh(2 * r)
    gab = (
        1
        + A * Bz * (S * math.cos(P - 2 * delta) - sh2 * math.sin(2 * T) * math.sin(F)) / (na * nb)
        + S**2 * math.cos(T) ** 2 / (4 * na * nb)
    )
    return ga, gb, gab


def g2_special_B(z0: float, r0: float, psi_minus_2delta: float, check: bool = True) -> tuple[float, float, float, float]:
    """``(g2, Q, g2_ab, I0)`` on the finite-field branch (``Theta = 0``, ``|z^a| = |z^b| = z0``).

    With ``check`` the values are compared against :func:`g2_general` and
    :func:`csi_test` at the same point.
    """
    sh2 = math.sinh(r0) ** 2
    S = math.sinh(2 * r0)
    n = z0**2 + sh2
    if n == 0:
        raise UndefinedCorrelationError("g2 undefined: mean occupation is zero")
    c = math.cos(psi_minus_2delta)
    g2 = 1 + sh2 / n + z0**2 * sh2 / n**2
    q = sh2 + z0**2 * sh2 / n
    gab = 1 + (z0**2 * S * c + 0.25 * S**2) / n**2
    i0 = (sh2 * (2 * z0**2 - 1) - z0**2 * S * c) / (n**2 + 0.25 * S**2 + z0**2 * S * c)
    if check:
        ga, gb, gab_gen = g2_general(CoherentParams(r0, psi_minus_2delta), DisplacementParams.symmetric(z0, 0.0))
        _, i0_def = csi_test(ga, gb, gab_gen)
        scale = max(1.0, abs(g2), abs(gab))
        if max(abs(ga - g2), abs(gb - g2), abs(gab_gen - gab), abs(i0_def - i0)) > 1e-9 * scale:
            raise So32Error("finite-field closed forms disagree with the general closed forms")
    return g2, q, gab, i0


def mandel_q(m: MomentSet) -> tuple[float, float]:
    """``Q = Var(n) / <n> - 1`` for each species."""
    if m.na == 0 or m.nb == 0:
        raise UndefinedCorrelationError("Mandel Q undefined: a mean occupation is zero")
    return m.var_a / m.na - 1, m.var_b / m.nb - 1


def csi_test(g2_a: float, g2_b: float, g2_ab: float, tol: float = CLOSED_FORM_TOL) -> tuple[bool, float]:
    """``(violated, I0)`` with ``I0 = sqrt(g2_a g2_b) / g2_ab - 1``; violated iff ``I0 < -tol``."""
    if g2_a < 0 or g2_b < 0 or not g2_ab > 0:
        raise ValueError("CSI test needs g2_a, g2_b >= 0 and g2_ab > 0")
    i0 = math.sqrt(g2_a * g2_b) / g2_ab - 1
    return i0 < -tol, i0


def classify_q(q: float, tol: float) -> str:
    if q > tol:
        return "super-Poissonian"
    if q < -tol:
        return "sub-Poissonian"
    return "Poissonian"


def classify(report: CorrelationReport, tol: float | None = None) -> CorrelationReport:
    """Fill the distribution classes from the signs of ``Q_a`` and ``Q_b``."""
    if tol is None:
        tol = ORACLE_TOL if report.provenance.startswith("oracle") else CLOSED_FORM_TOL
    if tol < 0:
        raise ValueError("tol must be >= 0")
    return replace(report, class_a=classify_q(report.Q_a, tol), class_b=classify_q(report.Q_b, tol))


def closed_form_report(v: CoherentParams, d: DisplacementParams, tol: float = CLOSED_FORM_TOL) -> CorrelationReport:
    """Report from the closed forms; ``Q`` from the identity ``Q = (g2 - 1) <n>``."""
    ga, gb, gab = g2_general(v, d)
    m = closed_form_moments(v, d)
    qa, qb = (ga - 1) * m.na, (gb - 1) * m.nb
    violated, i0 = csi_test(ga, gb, gab, tol)
    rep = CorrelationReport(ga, gb, gab, qa, qb, i0, violated, provenance="closed-form")
    return classify(rep, tol).with_point(v, d)


def brute_force_correlations(s: StateVector, tol: float = ORACLE_TOL) -> CorrelationReport:
    """Report from number-operator expectations in the state ``s``."""
    m = brute_force_moments(s)
    if m.na == 0 or m.nb == 0:
        raise UndefinedCorrelationError("g2 undefined: a mean occupation is zero")
    ga = (m.na2 - m.na) / m.na**2
    gb = (m.nb2 - m.nb) / m.nb**2
    gab = m.nanb / (m.na * m.nb)
    qa, qb = mandel_q(m)
    violated, i0 = csi_test(ga, gb, gab, tol)
    return classify(CorrelationReport(ga, gb, gab, qa, qb, i0, violated, provenance="oracle"), tol)


def report_difference(a: CorrelationReport, b: CorrelationReport) -> float:
    """Largest absolute difference over the numeric report fields."""
    fields = ("g2_a", "g2_b", "g2_ab", "Q_a", "Q_b", "I0")
    return float(max(abs(getattr(a, f) - getattr(b, f)) for f in fields))
