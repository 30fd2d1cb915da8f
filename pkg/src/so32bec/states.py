"""Coherent-state unitaries ``W(xi)``, displacements, DW states and their moments.

``W(xi_q) = exp(A - A^dag)`` with
``A = xi (sqrt2 cos(Theta) E+ - sin(Theta) e^{i Phi} U+ + sin(Theta) e^{-i Phi} V+)``
and ``xi = r e^{i Psi}``.  The DW state is ``D(z^a, z^b) W(xi) |00>``.

Two numeric routes to ``W^dag X W`` are provided:

* :class:`ConjugationOracle` applies ``W`` to a set of check states on an
  enlarged working space, so that the occupation cutoff is far from every
  state the comparison looks at.  Conjugating a truncated matrix directly is
  contaminated deep into the interior (the squeezing tails reach the edge of
  the space), which is why the working space is padded.
* :func:`exact_transform` uses the adjoint action on the finite space of
  quadratic operators (:mod:`so32bec.quadratic`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .boson import mode
from .catalog import ALL_NAMES, SO32_NAMES, generator_polynomial, sector_modes
from .errors import ConfigurationError, CutoffTooSmallError, DomainError
from .fock import (
    FockSpaceConfig,
    OperatorMatrix,
    StateVector,
    expectation,
    ladder_matrix,
    lift,
    mat_exp,
    number_matrix,
    vacuum,
)
from .quadratic import quadratic_space

__all__ = [
    "CoherentParams",
    "DisplacementParams",
    "MomentSet",
    "LadderTransform",
    "ConjugationOracle",
    "w_generator",
    "w_matrix",
    "w_state",
    "dw_state",
    "dw_leakage",
    "vacuum_leakage",
    "transformed_ladder",
    "closed_form_transform",
    "exact_transform",
    "closed_form_moments",
    "brute_force_moments",
    "TRANSFORM_NAMES",
    "DEFAULT_LEAKAGE_GATE",
    "sector_cfg",
    "combination_matrix",
]

DEFAULT_LEAKAGE_GATE = 1e-8
TWO_PI = 2 * math.pi
SQRT2 = math.sqrt(2.0)

TRANSFORM_NAMES = ("E+", "E-", "E3", "F+", "F-", "F3", "U+", "U-", "V+", "V-", "N+", "N-", "N3")


@dataclass(frozen=True)
class CoherentParams:
    """Coherent parameters of one sector.  ``r`` may be signed."""

    r: float = 0.0
    psi: float = 0.0
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        for name in ("psi", "theta", "phi"):
            object.__setattr__(self, name, float(getattr(self, name)) % TWO_PI)
        object.__setattr__(self, "r", float(self.r))

    @property
    def xi(self) -> complex:
        return self.r * np.exp(1j * self.psi)


@dataclass(frozen=True)
class DisplacementParams:
    """Displacement amplitudes ``|z^a|, |z^b|`` and phases of one sector."""

    za_abs: float = 0.0
    zb_abs: float = 0.0
    delta_a: float = 0.0
    delta_b: float = 0.0

    @classmethod
    def symmetric(cls, z0: float, delta0: float) -> DisplacementParams:
        return cls(z0, z0, delta0, delta0)

    @property
    def za(self) -> complex:
        return self.za_abs * np.exp(1j * self.delta_a)

    @property
    def zb(self) -> complex:
        return self.zb_abs * np.exp(1j * self.delta_b)

    @property
    def is_zero(self) -> bool:
        return self.za_abs == 0 and self.zb_abs == 0


@dataclass(frozen=True)
class MomentSet:
    """Zero-sector occupation moments."""

    na: float
    nb: float
    na2: float
    nb2: float
    nanb: float

    def as_array(self) -> np.ndarray:
        return np.array([self.na, self.nb, self.na2, self.nb2, self.nanb])

    @property
    def var_a(self) -> float:
        return self.na2 - self.na**2

    @property
    def var_b(self) -> float:
        return self.nb2 - self.nb**2


def w_generator(v: CoherentParams, q: int) -> dict[tuple[str, int], complex]:
    """Catalog coefficients of ``G = A - A^dag`` with ``W = exp(G)``."""
    xi = v.xi
    c, s = math.cos(v.theta), math.sin(v.theta)
    e = np.exp(1j * v.phi)
    raising = {"E+": xi * SQRT2 * c, "U+": -xi * s * e, "V+": xi * s / e}
    out = {}
    for name, coef in raising.items():
        out[(name, q)] = complex(coef)
        out[(name[0] + "-", q)] = -complex(np.conj(coef))
    return out


def combination_matrix(coeffs: Mapping[tuple[str, int], complex], cfg: FockSpaceConfig) -> OperatorMatrix:
    """Matrix of ``sum c * generator(name, label)`` on ``cfg``."""
    total = None
    for (name, label), c in coeffs.items():
        if c == 0:
            continue
        term = lift(generator_polynomial(name, label), cfg) * c
        total = term if total is None else total + term
    if total is None:
        return OperatorMatrix(sp.csr_matrix((cfg.dim, cfg.dim), dtype=complex), cfg)
    return total


def _charge_weights(cfg: FockSpaceConfig) -> tuple[int, ...] | None:
    w = tuple(int(np.sign(m.sector)) for m in cfg.modes)
    return w if any(w) else None


def _padded(cfg: FockSpaceConfig, displaced: bool) -> FockSpaceConfig:
    """Working space three times wider than ``cfg`` per mode.

    Without displacement the vacuum sector of ``W`` keeps the momentum
    imbalance at zero, which bounds the dimension for four-mode sectors.
    """
    cut = tuple(3 * c for c in cfg.cutoffs)
    if len(cfg.modes) <= 2:
        return FockSpaceConfig(cfg.modes, cut, max_dim=10**6)
    total = 3 * max(cfg.cutoffs)
    w = None if displaced else _charge_weights(cfg)
    return FockSpaceConfig(
        cfg.modes,
        cut,
        max_total=total,
        charge=w,
        charge_range=None if w is None else (0, 0),
        max_dim=10**6,
    )


def _project(s: StateVector, cfg: FockSpaceConfig) -> StateVector:
    """Restrict a padded-space state to the basis of ``cfg`` (no renormalization)."""
    pos = np.array([s.cfg.modes.index(m) for m in cfg.modes])
    occ = s.cfg.occupations[:, pos]
    others = np.delete(s.cfg.occupations, pos, axis=1)
    idx = cfg.lookup(occ)
    keep = (idx >= 0) & np.all(others == 0, axis=1)
    out = np.zeros(cfg.dim, dtype=complex)
    out[idx[keep]] = s.data[keep]
    return StateVector(out, cfg)


def _expm_apply(a: OperatorMatrix, vec: np.ndarray) -> np.ndarray:
    return spla.expm_multiply(a.data.tocsc(), vec)


def _dw_padded(params: Mapping[int, tuple[CoherentParams, DisplacementParams]], cfg: FockSpaceConfig) -> StateVector:
    displaced = any(not d.is_zero for _, d in params.values())
    work = _padded(cfg, displaced)
    psi = vacuum(work).data
    for q, (v, d) in sorted(params.items()):
        if v.r != 0:
            psi = _expm_apply(combination_matrix(w_generator(v, q), work), psi)
        if not d.is_zero:
            psi = _expm_apply(_displacement_generator(d, q, work), psi)
    return StateVector(psi, work)


def _displacement_generator(d: DisplacementParams, q: int, cfg: FockSpaceConfig) -> OperatorMatrix:
    total = None
    for species, z in (("a", d.za), ("b", d.zb)):
        if z == 0:
            continue
        cre = ladder_matrix(mode(species, q), "create", cfg)
        term = cre * z - cre.dag() * np.conj(z)
        total = term if total is None else total + term
    return total


def vacuum_leakage(v: CoherentParams, q: int, cfg: FockSpaceConfig) -> float:
    """Norm of ``W(xi)|00>`` that falls outside the cutoffs of ``cfg``."""
    s = _project(_dw_padded({q: (v, DisplacementParams())}, cfg), cfg)
    return abs(1.0 - s.norm2())


def w_matrix(
    v: CoherentParams, q: int, cfg: FockSpaceConfig, gate: float = DEFAULT_LEAKAGE_GATE
) -> OperatorMatrix:
    """Truncated unitary ``exp(A - A^dag)`` on ``cfg``.

    Raises
    ------
    CutoffTooSmallError
        If ``W|00>`` loses more than ``gate`` of its norm to the cutoff.
    """
    for m in sector_modes(q):
        cfg.index(m)
    leak = vacuum_leakage(v, q, cfg)
    if leak > gate:
        raise CutoffTooSmallError(
            f"W(xi) with r={v.r:g} leaks {leak:.3e} of the vacuum norm at cutoffs {cfg.cutoffs}", leak
        )
    return mat_exp(combination_matrix(w_generator(v, q), cfg))


def _factor_leakages(params, cfg) -> dict[str, float]:
    out = {"W": 0.0, "D": 0.0}
    for q, (v, d) in params.items():
        if v.r != 0:
            out["W"] = max(out["W"], vacuum_leakage(v, q, cfg))
        if not d.is_zero:
            s = _project(_dw_padded({q: (CoherentParams(), d)}, cfg), cfg)
            out["D"] = max(out["D"], abs(1.0 - s.norm2()))
    return out


def _dw_params(v, d, q):
    vs = v if isinstance(v, Mapping) else {q: v}
    ds = d if isinstance(d, Mapping) else {q: d}
    labels = set(vs) | set(ds)
    return {k: (vs.get(k, CoherentParams()), ds.get(k, DisplacementParams())) for k in labels}


def dw_leakage(v, d, cfg: FockSpaceConfig, q: int = 0) -> float:
    """Norm of the full DW state that falls outside the cutoffs of ``cfg``."""
    s = _project(_dw_padded(_dw_params(v, d, q), cfg), cfg)
    return abs(1.0 - s.norm2())


def dw_state(
    v: CoherentParams | Mapping[int, CoherentParams],
    d: DisplacementParams | Mapping[int, DisplacementParams],
    cfg: FockSpaceConfig,
    gate: float = DEFAULT_LEAKAGE_GATE,
    q: int = 0,
) -> StateVector:
    """Normalized ``D(z^a, z^b) W(xi) |00>`` on ``cfg``.

    Single-sector parameters refer to sector ``q``; mappings give one entry
    per sector.  The state is built on a padded space and then restricted to
    ``cfg``.  The gate applies to each factor on its own: ``W|00>`` and
    ``D|00>`` must each keep all but ``gate`` of their norm inside ``cfg``.
    The combined state typically leaks more (see :func:`dw_leakage`).
    """
    params = _dw_params(v, d, q)
    for factor, leak in _factor_leakages(params, cfg).items():
        if leak > gate:
            raise CutoffTooSmallError(
                f"{factor} factor leaks {leak:.3e} of the vacuum norm at cutoffs {cfg.cutoffs}", leak
            )
    s = _project(_dw_padded(params, cfg), cfg)
    if s.norm2() == 0:
        raise CutoffTooSmallError("DW state has no weight inside the cutoffs", 1.0)
    return s.normalized()


def w_state(v: CoherentParams, q: int, cfg: FockSpaceConfig, gate: float = DEFAULT_LEAKAGE_GATE) -> StateVector:
    return dw_state(v, DisplacementParams(), cfg, gate=gate, q=q)


class LadderTransform(NamedTuple):
    """``W^dag c_q W = c0 * c_q + c1 * x^dag_{-q} + c2 * c^dag_{-q}``.

    For species ``a``: ``c = a`` and ``x = b``; for ``b`` the roles swap.
    """

    c0: complex
    c1: complex
    c2: complex


def transformed_ladder(v: CoherentParams) -> tuple[LadderTransform, LadderTransform]:
    """Bogoliubov coefficients of ``W^dag a_q W`` and ``W^dag b_q W``."""
    ch, sh = math.cosh(v.r), math.sinh(v.r)
    ep = np.exp(1j * v.psi)
    a = LadderTransform(ch, math.cos(v.theta) * ep * sh, -math.sin(v.theta) * np.exp(1j * (v.phi + v.psi)) * sh)
    b = LadderTransform(ch, math.cos(v.theta) * ep * sh, math.sin(v.theta) * np.exp(1j * (v.psi - v.phi)) * sh)
    return a, b


def _flip(sign: str) -> str:
    return "-" if sign == "+" else "+"


def closed_form_transform(name: str, v: CoherentParams, q: int, form: str = "working") -> dict[str, complex]:
    """Closed-form ``W^dag X W`` as coefficients over the sector generators.

    ``form='printed'`` transcribes the reference right-hand sides literally;
    ``form='working'`` replaces the two transforms whose printed forms do not
    hold (``N3``: the ``Delta+`` phase is ``e^{i Psi}``; ``N+-``: the ``N-+``
    term carries ``sin^2 Theta`` and the ``Delta`` bracket carries
    ``sin Theta``).

    Raises
    ------
    DomainError
        Unsupported generator, or an ``N`` transform requested for ``q = 0``.
    """
    if name not in TRANSFORM_NAMES:
        raise DomainError(f"no closed-form transform for {name!r}")
    if name[0] == "N" and q == 0:
        raise DomainError("N transforms need a k-sector")
    if form not in ("working", "printed"):
        raise ValueError("form must be 'working' or 'printed'")
    r, P, T, F = v.r, v.psi, v.theta, v.phi
    ch2, sh2, S = math.cosh(r) ** 2, math.sinh(r) ** 2, math.sinh(2 * r)
    sT, cT, s2T = math.sin(T), math.cos(T), math.sin(2 * T)
    e = lambda x: complex(np.exp(1j * x))  # noqa: E731
    out: dict[str, complex] = {}

    def add(n, c):
        out[n] = out.get(n, 0) + c

    head, pm = name[0], name[1]
    mp = _flip(pm)
    s = 1 if pm == "+" else -1
    if name in ("E+", "E-"):
        add("E" + pm, ch2)
        add("U" + mp, -s2T * e(-s * (2 * P + F)) * sh2 / SQRT2)
        add("V" + mp, s2T * e(-s * (2 * P - F)) * sh2 / SQRT2)
        add("E" + mp, e(-2 * s * P) * math.cos(2 * T) * sh2)
        add("E3", e(-s * P) * cT * S / SQRT2)
        add("F" + mp, 0.5 * sT * e(-s * (P - F)) * S)
        add("F" + pm, -0.5 * sT * e(-s * (P + F)) * S)
    elif name in ("U+", "U-"):
        add("U" + pm, ch2)
        add("E" + mp, -s2T * e(-s * (2 * P + F)) * sh2 / SQRT2)
        add("U" + mp, e(-2 * s * (P + F)) * sT**2 * sh2)
        add("V" + mp, e(-2 * s * P) * cT**2 * sh2)
        add("E3", -0.5 * e(-s * (P + F)) * sT * S)
        add("F3", 0.5 * e(-s * (P + F)) * sT * S)
        add("F" + mp, e(-s * P) * cT * S / SQRT2)
    elif name in ("V+", "V-"):
        add("V" + pm, ch2)
        add("E" + mp, s2T * e(-s * (2 * P - F)) * sh2 / SQRT2)
        add("V" + mp, e(-2 * s * (P - F)) * sT**2 * sh2)
        add("U" + mp, e(-2 * s * P) * cT**2 * sh2)
        add("E3", 0.5 * e(-s * (P - F)) * sT * S)
        add("F3", 0.5 * e(-s * (P - F)) * sT * S)
        add("F" + pm, e(-s * P) * cT * S / SQRT2)
    elif name in ("F+", "F-"):
        add("F3", s2T * e(s * F) * sh2 / SQRT2)
        add("F" + mp, -(sT**2) * e(2 * s * F) * sh2)
        add("E" + mp, 0.5 * sT * e(-s * (P - F)) * S)
        add("E" + pm, -0.5 * sT * e(s * (P + F)) * S)
        add("U" + mp, cT * e(-s * P) * S / SQRT2)
        add("V" + pm, cT * e(s * P) * S / SQRT2)
        add("F" + pm, ch2 + cT**2 * sh2)
    elif name == "E3":
        add("E3", math.cosh(2 * r))
        for sg in (1, -1):
            t = "+" if sg == 1 else "-"
            add("E" + t, e(sg * P) * S * cT / SQRT2)
            add("U" + t, -0.5 * e(sg * (P + F)) * S * sT)
            add("V" + t, 0.5 * e(sg * (P - F)) * S * sT)
    elif name == "F3":
        for sg in (1, -1):
            t = "+" if sg == 1 else "-"
            add("F" + t, e(-sg * F) * sh2 * s2T / SQRT2)
            add("U" + t, 0.5 * e(sg * (P + F)) * S * sT)
            add("V" + t, 0.5 * e(sg * (P - F)) * S * sT)
        add("F3", 1 + 2 * sT**2 * sh2)
    elif name in ("N+", "N-"):
        mix = sT**2 if form == "working" else 1.0
        bracket = sT if form == "working" else 1.0
        add("N" + mp, e(2 * s * F) * mix * sh2)
        add("N3", -s2T * e(s * F) * sh2 / SQRT2)
        add("D" + mp, 0.5 * bracket * e(-s * (P - F)) * S)
        add("D" + pm, 0.5 * bracket * e(s * (P + F)) * S)
        add("N" + pm, 1 + sT**2 * sh2)
    elif name == "N3":
        add("N+", -e(-F) * sh2 * s2T / SQRT2)
        add("N-", -e(F) * sh2 * s2T / SQRT2)
        add("D-", -e(-P) * S * cT / SQRT2)
        add("D+", -e(P if form == "working" else T) * S * cT / SQRT2)
        add("N3", 1 + 2 * cT**2 * sh2)
    return {k: c for k, c in out.items() if c != 0}


def exact_transform(name: str, v: CoherentParams, q: int) -> dict[str, complex]:
    """``W^dag X W`` by the adjoint action on the quadratic operator space."""
    qs = quadratic_space(q)
    x = qs.combination({(name, q): 1.0})
    y = qs.conjugate(w_generator(v, q), x)
    names = SO32_NAMES if q == 0 else ALL_NAMES
    coef, resid = qs.decompose(y, names, q)
    if resid > 1e-9:
        raise DomainError(f"transform of {name} left the generator span (residual {resid:.2e})")
    return {k: complex(c) for k, c in coef.items() if abs(c) > 1e-15}


class ConjugationOracle:
    """Matrix elements of ``W^dag X W`` between low-lying check states.

    ``W`` is applied to each check state on a working space whose cutoffs
    exceed those of the check states by ``pad``.  All quadratic operators are
    lifted onto the working space, so the resulting blocks are those of the
    exact operators up to the (measured) tail beyond the working cutoffs.

    Parameters
    ----------
    v, q
        Coherent parameters and sector of ``W``.
    check
        Occupation rows (one per check state) over ``sector_modes(q)``.
    pad
        Extra occupation allowed beyond the largest check occupation.
    """

    def __init__(self, v: CoherentParams, q: int, check: np.ndarray, pad: int = 40, max_dim: int = 200_000):
        self.v, self.q = v, q
        modes = sector_modes(q)
        check = np.asarray(check, dtype=np.int64)
        top = int(check.max()) if check.size else 0
        total = int(check.sum(axis=1).max()) if check.size else 0
        cut = (top + pad,) * len(modes)
        if q == 0:
            work = FockSpaceConfig(modes, cut, max_total=total + pad, max_dim=max_dim)
        else:
            w = tuple(int(np.sign(m.sector)) for m in modes)
            charges = check @ np.asarray(w)
            work = FockSpaceConfig(
                modes,
                cut,
                max_total=total + pad,
                charge=w,
                charge_range=(int(charges.min()), int(charges.max())),
                max_dim=max_dim,
            )
        self.work = work
        self.check = check
        self.index = work.lookup(check)
        if np.any(self.index < 0):
            raise ConfigurationError("check states outside the working space")
        unit = np.zeros((work.dim, len(check)), dtype=complex)
        unit[self.index, np.arange(len(check))] = 1.0
        gen = combination_matrix(w_generator(v, q), work)
        self.columns = _expm_apply(gen, unit)
        edge = np.any(work.occupations >= np.asarray(cut), axis=1) | (work.occupations.sum(axis=1) >= total + pad)
        self.edge_weight = float(np.max(np.sum(np.abs(self.columns[edge]) ** 2, axis=0))) if edge.any() else 0.0
        self._lift_cache: dict[tuple[str, int], OperatorMatrix] = {}

    @classmethod
    def interior(cls, v: CoherentParams, q: int, cutoff: int, margin: int = 2, max_total: int | None = None, **kw):
        """Check states: all occupations ``<= cutoff - margin`` (optionally total-capped)."""
        n = len(sector_modes(q))
        grid = np.indices((cutoff - margin + 1,) * n).reshape(n, -1).T
        if max_total is not None:
            grid = grid[grid.sum(axis=1) <= max_total]
        return cls(v, q, grid, **kw)

    def _lifted(self, name: str, label: int) -> OperatorMatrix:
        key = (name, label)
        if key not in self._lift_cache:
            self._lift_cache[key] = lift(generator_polynomial(name, label), self.work)
        return self._lift_cache[key]

    def combination_block(self, coeffs: Mapping[str, complex], constant: complex = 0.0) -> np.ndarray:
        """Check-state block of ``sum c * X`` (no conjugation)."""
        n = len(self.check)
        out = constant * np.eye(n, dtype=complex)
        for name, c in coeffs.items():
            if c:
                m = self._lifted(name, self.q).data[self.index][:, self.index]
                out = out + c * m.toarray()
        return out

    def conjugated_block(self, coeffs: Mapping[str, complex], constant: complex = 0.0) -> np.ndarray:
        """Check-state block of ``W^dag (sum c * X) W``."""
        op = None
        for name, c in coeffs.items():
            if c:
                term = self._lifted(name, self.q).data * c
                op = term if op is None else op + term
        out = constant * (self.columns.conj().T @ self.columns)
        if op is not None:
            out = out + self.columns.conj().T @ (op @ self.columns)
        return out

    def decompose(self, block: np.ndarray, names: Sequence[str] | None = None) -> tuple[dict[str, complex], float]:
        """Least-squares fit of a check-state block over the sector generators and identity."""
        if names is None:
            names = SO32_NAMES if self.q == 0 else ALL_NAMES
        cols = [self.combination_block({n: 1.0}).ravel() for n in names]
        cols.append(np.eye(len(self.check)).ravel())
        basis = np.array(cols).T
        coef, *_ = np.linalg.lstsq(basis, block.ravel(), rcond=None)
        resid = float(np.linalg.norm(basis @ coef - block.ravel()))
        labels = list(names) + ["1"]
        return dict(zip(labels, coef)), resid


def closed_form_moments(v: CoherentParams, d: DisplacementParams) -> MomentSet:
    """Zero-sector DW moments from the reference closed forms, taken literally."""
    r, P, T, F = v.r, v.psi, v.theta, v.phi
    sh2, ch2, S = math.sinh(r) ** 2, math.cosh(r) ** 2, math.sinh(2 * r)
    za, zb = d.za, d.zb
    na = abs(za) ** 2 + sh2
    nb = abs(zb) ** 2 + sh2
    na2 = na**2 + ch2 * na + abs(za) ** 2 * sh2 - 0.5 * S * math.sin(T) * (
        np.conj(za) ** 2 * np.exp(1j * (F + P)) + za**2 * np.exp(-1j * (F + P))
    )
    nb2 = nb**2 + ch2 * nb + abs(zb) ** 2 * sh2 + 0.5 * S * math.sin(T) * (
        np.conj(zb) ** 2 * np.exp(1j * (P - F)) + zb**2 * np.exp(1j * (F - P))
    )
    nanb = (
        na * nb
        + ch2 * sh2 * math.cos(T) ** 2
        + 0.5 * S * math.cos(T) * (np.exp(1j * P) * np.conj(za) * np.conj(zb) + np.exp(-1j * P) * za * zb)
        - 2 * za * np.conj(zb) * sh2 * math.sin(2 * T) * math.sin(F)
    )
    # the last cross term is complex in general; the real part is reported
    return MomentSet(float(na), float(nb), float(np.real(na2)), float(np.real(nb2)), float(np.real(nanb)))


def brute_force_moments(s: StateVector) -> MomentSet:
    """Zero-sector moments as expectations of number-operator matrices."""
    na = number_matrix(mode("a", 0), s.cfg)
    nb = number_matrix(mode("b", 0), s.cfg)
    vals = [expectation(s, op).real for op in (na, nb, na @ na, nb @ nb, na @ nb)]
    return MomentSet(*vals)


def sector_cfg(q: int, cutoff: int, **kw) -> FockSpaceConfig:
    """Uniform-cutoff Fock space over the modes of one sector."""
    return FockSpaceConfig.uniform(sector_modes(q), cutoff, **kw)

