"""Mean-field Hamiltonian, its coefficients, the transformed-Hamiltonian functions
``f1..f10``, the two diagonalization branches and the self-consistency loop.

Sector labels: ``0`` is the zero sector; ``k >= 1`` is the momentum sector
holding modes ``+-k``.  Sums over ``k != 0`` run over both labels ``+k`` and
``-k`` with weights ``1/2^|k|`` and ``1/|k|!``.  The generators at label
``-k`` act on the same four modes: ``E, F, U, V`` coincide with their ``+k``
copies, while ``Q(-k) = -Q(k) - 2`` and ``N(-k) = -N(k)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, NamedTuple

import numpy as np

from .boson import IDENTITY, BosonPolynomial, annihilate, create, number
from .catalog import ALL_NAMES, SO32_NAMES, generator_polynomial, sector_modes
from .errors import CaseMismatchError, ConfigurationError, IterationLimitError, UnstableSectorError
from .fock import FockSpaceConfig, OperatorMatrix, interior_projector, lift
from .quadratic import quadratic_space
from .states import CoherentParams, ConjugationOracle, combination_matrix, w_generator

__all__ = [
    "PhysicalParams",
    "SectorCoefficients",
    "MeanValues",
    "FValues",
    "SectorSolution",
    "DiagonalizationResult",
    "SolverOptions",
    "DiagonalReport",
    "overlap_element",
    "hamiltonian_terms",
    "reduced_hamiltonian",
    "sector_hamiltonian",
    "coefficients_from_means",
    "w_state_means",
    "f_functions",
    "exact_f_functions",
    "solve_case_B0",
    "solve_case_Bnonzero",
    "solve_sector",
    "self_consistent_solve",
    "e_star",
    "verify_diagonal",
    "two_path_offset",
    "full_modes",
]

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
MEAN_NAMES = ("E3", "F3", "F+", "U+", "V+", "E+", "N3", "N+", "Q")


@dataclass(frozen=True)
class PhysicalParams:
    """Couplings, field and trap data.

    ``g_mu_B`` below always means the product ``g_mu * B``.  Single-particle
    energies default to ``omega * (|k| + 1)``; ``eps`` overrides any of them.
    """

    g_n: float = 0.0
    g_s: float = 0.0
    g_mu: float = 1.0
    B: float = 0.0
    V0: float = 1.0
    omega: float = 1.0
    k_max: int = 1
    eps: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.V0 > 0:
            raise ConfigurationError(f"V0 must be positive, got {self.V0}")
        if int(self.k_max) < 1:
            raise ConfigurationError(f"k_max must be >= 1, got {self.k_max}")
        object.__setattr__(self, "k_max", int(self.k_max))
        object.__setattr__(self, "eps", {abs(int(k)): float(e) for k, e in dict(self.eps).items()})

    @classmethod
    def from_g2(cls, g2: float, **kw) -> PhysicalParams:
        """Parameters with ``g_s = 0`` so that ``g2 = g_n``."""
        return cls(g_n=g2, g_s=0.0, **kw)

    @property
    def g1(self) -> float:
        return self.g_n / 2 + 3 * self.g_s / 8

    @property
    def g2(self) -> float:
        return self.g_n + self.g_s / 4

    @property
    def g2V0(self) -> float:
        return self.g2 * self.V0

    @property
    def g_mu_B(self) -> float:
        return self.g_mu * self.B

    def energy(self, k: int) -> float:
        k = abs(int(k))
        return self.eps.get(k, self.omega * (k + 1))

    def labels(self) -> list[int]:
        """Nonzero momentum labels ``+-1 .. +-k_max``."""
        return [s * k for k in range(1, self.k_max + 1) for s in (1, -1)]


def _w2(k: int) -> float:
    return 2.0 ** -abs(k)


def _wf(k: int) -> float:
    return 1.0 / math.factorial(abs(k))


def overlap_element(k: int, l: int, m: int, n: int) -> float:
    """``<k,l|m,n>`` in units of ``V0``; factorials of absolute labels."""
    if k + l != m + n:
        return 0.0
    s = abs(k + l)
    f = math.factorial
    return f(s) / (2**s * math.sqrt(f(abs(k)) * f(abs(l)) * f(abs(m)) * f(abs(n))))


# ---------------------------------------------------------------------------
# Hamiltonian assembly


def _gen(name: str, q: int) -> BosonPolynomial:
    return generator_polynomial(name, q)


def hamiltonian_terms(k_max: int, path: str = "modes") -> dict[object, BosonPolynomial]:
    """Exact polynomials multiplying each parameter in the reduced Hamiltonian.

    Keys: ``"eps0"``, ``("eps", k)`` for ``k = 1..k_max``, ``"g2V0"`` and
    ``"gmuB"``.  ``path='modes'`` assembles the mode-operator form;
    ``path='generators'`` assembles the same Hamiltonian from sector
    generators.  The two agree up to a multiple of the identity (see
    :func:`two_path_offset`).
    """
    if path not in ("modes", "generators"):
        raise ValueError("path must be 'modes' or 'generators'")
    labels = [s * k for k in range(1, k_max + 1) for s in (1, -1)]
    half = Fraction(1, 2)
    zero = BosonPolynomial()
    terms: dict[object, BosonPolynomial] = {"eps0": zero, "g2V0": zero, "gmuB": zero}
    for k in range(1, k_max + 1):
        terms[("eps", k)] = zero
    if path == "modes":
        na, nb = number("a", 0), number("b", 0)
        ad0, bd0, a0, b0 = create("a", 0), create("b", 0), annihilate("a", 0), annihilate("b", 0)
        terms["eps0"] = na + nb
        terms["gmuB"] = half * (nb - na)
        inter = half * (ad0 * ad0 * a0 * a0 + bd0 * bd0 * b0 * b0 + 2 * ad0 * bd0 * b0 * a0)
        for k in labels:
            nak, nbk = number("a", k), number("b", k)
            adk, bdk, ak, bk = create("a", k), create("b", k), annihilate("a", k), annihilate("b", k)
            am, bm, adm, bdm = annihilate("a", -k), annihilate("b", -k), create("a", -k), create("b", -k)
            terms[("eps", abs(k))] = terms[("eps", abs(k))] + nak + nbk
            terms["gmuB"] = terms["gmuB"] + half * (nbk - nak)
            w2 = Fraction(1, 2 ** abs(k))
            wf = Fraction(1, math.factorial(abs(k)))
            inter = inter + half * w2 * (
                4 * na * nak + 4 * nb * nbk + 2 * na * nbk + 2 * nb * nak
                + 2 * ad0 * b0 * bdk * ak + 2 * bd0 * a0 * adk * bk
            )
            inter = inter + half * wf * (
                ad0 * ad0 * am * ak + a0 * a0 * adk * adm + bd0 * bd0 * bm * bk + b0 * b0 * bdk * bdm
                + 2 * ad0 * bd0 * ak * bm + 2 * a0 * b0 * adk * bdm
            )
        terms["g2V0"] = inter
        return terms

    terms["eps0"] = 2 * _gen("E3", 0) - 1
    terms["gmuB"] = _gen("F3", 0)
    inter = 2 * (_gen("U+", 0) * _gen("U-", 0) + _gen("V+", 0) * _gen("V-", 0) + _gen("E+", 0) * _gen("E-", 0))
    for k in labels:
        terms[("eps", abs(k))] = terms[("eps", abs(k))] + _gen("E3", k)
        terms["gmuB"] = terms["gmuB"] + half * _gen("F3", k)
        w2 = Fraction(1, 2 ** abs(k))
        wf = Fraction(1, math.factorial(abs(k)))
        inter = inter + half * w2 * (
            6 * _gen("E3", 0) * (_gen("E3", k) + _gen("Q", k))
            + 2 * _gen("F3", 0) * (_gen("F3", k) + _gen("N3", k))
            + 2 * _gen("F-", 0) * (_gen("F+", k) + _gen("N+", k))
            + 2 * _gen("F+", 0) * (_gen("F-", k) + _gen("N-", k))
            - 3 * _gen("E3", k)
            - 3 * _gen("Q", k)
        )
        inter = inter + wf * (
            _gen("U+", 0) * _gen("U-", k) + _gen("U-", 0) * _gen("U+", k)
            + _gen("V+", 0) * _gen("V-", k) + _gen("V-", 0) * _gen("V+", k)
            + _gen("E-", 0) * _gen("E+", k) + _gen("E+", 0) * _gen("E-", k)
        )
    terms["g2V0"] = inter
    return terms


def two_path_offset(params: PhysicalParams) -> float:
    """Constant by which the generator assembly exceeds the mode assembly.

    Each label uses ``eps_k E3(k)`` where the mode form has
    ``eps_k (E3(k) + Q(k))``; summed over ``+-k`` this is ``2 eps_k``.
    """
    return sum(2 * params.energy(k) for k in range(1, params.k_max + 1))



def _parameter_weights(params: PhysicalParams) -> dict[object, float]:
    w: dict[object, float] = {"eps0": params.energy(0), "g2V0": params.g2V0, "gmuB": params.g_mu_B}
    for k in range(1, params.k_max + 1):
        w[("eps", k)] = params.energy(k)
    return w


def full_modes(k_max: int):
    modes = list(sector_modes(0))
    for k in range(1, k_max + 1):
        modes += list(sector_modes(k))
    return tuple(modes)



def reduced_hamiltonian(params: PhysicalParams, cfg: FockSpaceConfig, path: str = "modes") -> OperatorMatrix:
    """Matrix of the reduced Hamiltonian on ``cfg``.

    ``cfg`` must house the zero-sector modes and all modes up to ``k_max``.
    The dimension guard of ``cfg`` applies at construction.
    """
    for m in full_modes(params.k_max):
        cfg.index(m)
    weights = _parameter_weights(params)
    total = None
    for key, poly in hamiltonian_terms(params.k_max, path).items():
        if weights[key] == 0 or poly.is_zero():
            continue
        term = lift(poly, cfg) * weights[key]
        total = term if total is None else total + term
    if total is None:
        return lift(BosonPolynomial(), cfg)
    return total


# ---------------------------------------------------------------------------
# Mean-field coefficients


@dataclass(frozen=True)
class SectorCoefficients:
    """Coefficients of the sector Hamiltonian ``H_q``.

    ``eps`` is the single-particle energy of the sector; it fixes the
    coefficient ``alpha - eps`` of ``Q`` and ``f10``.
    """

    alpha: float
    beta: float
    gamma: complex = 0j
    rho: complex = 0j
    sigma: complex = 0j
    tau: complex = 0j
    beta_prime: float = 0.0
    eps: float = 0.0

    def as_vector(self) -> np.ndarray:
        vals = [self.alpha, self.beta, self.gamma, self.rho, self.sigma, self.tau, self.beta_prime]
        return np.array(vals, dtype=complex)

    @classmethod
    def from_vector(cls, x: np.ndarray, eps: float) -> SectorCoefficients:
        x = np.asarray(x, dtype=complex)
        return cls(float(x[0].real), float(x[1].real), complex(x[2]), complex(x[3]), complex(x[4]),
                   complex(x[5]), float(x[6].real), eps)


@dataclass(frozen=True)
class MeanValues:
    """Expectation values ``<X(label)>`` keyed by ``(name, label)``.

    Only plus-generators and self-adjoint ones are stored; minus-partners are
    the complex conjugates.
    """

    values: Mapping[tuple[str, int], complex]

    def __getitem__(self, key: tuple[str, int]) -> complex:
        name, label = key
        if name.endswith("-"):
            return complex(np.conj(self.get(name[:-1] + "+", label)))
        return self.get(name, label)

    def get(self, name: str, label: int) -> complex:
        if (name, label) in self.values:
            return complex(self.values[(name, label)])
        return complex(_vacuum_mean(name, label))

    @classmethod
    def vacuum(cls) -> MeanValues:
        return cls({})


def _vacuum_mean(name: str, label: int) -> float:
    poly = generator_polynomial(name, label)
    return float(poly.constant())


def w_state_means(v: Mapping[int, CoherentParams], k_max: int) -> MeanValues:
    """Exact generator means in ``prod_q W(xi_q)|00>`` (adjoint action)."""
    out: dict[tuple[str, int], complex] = {}
    for q in range(0, k_max + 1):
        vq = v.get(q, CoherentParams())
        qs = quadratic_space(q)
        gen = w_generator(vq, q)
        labels = (0,) if q == 0 else (q, -q)
        names = [n for n in MEAN_NAMES if q != 0 or n in SO32_NAMES]
        ident = qs.index[IDENTITY]
        for label in labels:
            for n in names:
                y = qs.conjugate(gen, qs.combination({(n, label): 1.0}))
                out[(n, label)] = complex(y[ident])
    return MeanValues(out)


def coefficients_from_means(params: PhysicalParams, mv: MeanValues) -> dict[int, SectorCoefficients]:
    """Coefficients of ``H_0`` and ``H_k`` (``k = 1..k_max``) from generator means."""
    g = params.g2V0
    labels = params.labels()
    m = mv.__getitem__
    alpha0 = 2 * params.energy(0) + 3 * g * sum(_w2(k) * (m(("E3", k)) + m(("Q", k))) for k in labels)
    beta0 = params.g_mu_B + g * sum(_w2(k) * (m(("F3", k)) + m(("N3", k))) for k in labels)
    rho0 = g * (2 * m(("U+", 0)) + sum(_wf(k) * m(("U+", k)) for k in labels))
    gamma0 = g * sum(_w2(k) * (m(("F+", k)) + m(("N+", k))) for k in labels)
    sigma0 = g * (2 * m(("V+", 0)) + sum(_wf(k) * m(("V+", k)) for k in labels))
    tau0 = g * (2 * m(("E+", 0)) + sum(_wf(k) * m(("E+", k)) for k in labels))
    out = {0: SectorCoefficients(alpha0.real, beta0.real, gamma0, rho0, sigma0, tau0, 0.0, params.energy(0))}
    for k in range(1, params.k_max + 1):
        eps = params.energy(k)
        beta = params.g_mu_B / 2 + g * _w2(k) * m(("F3", 0)).real
        out[k] = SectorCoefficients(
            alpha=eps + g * _w2(k) * (3 * m(("E3", 0)).real - 1.5),
            beta=beta,
            gamma=g * _w2(k) * m(("F+", 0)),
            rho=g * _wf(k) * m(("U+", 0)),
            sigma=g * _wf(k) * m(("V+", 0)),
            tau=g * _wf(k) * m(("E+", 0)),
            beta_prime=beta - params.g_mu_B / 2,
            eps=eps,
        )
    return out


def sector_hamiltonian(q: int, c: SectorCoefficients) -> dict[tuple[str, int], complex]:
    """Generator coefficients of ``H_q``."""
    cj = np.conj
    h = {
        ("E3", q): c.alpha,
        ("F3", q): c.beta,
        ("F-", q): c.gamma,
        ("F+", q): cj(c.gamma),
        ("U-", q): c.rho,
        ("U+", q): cj(c.rho),
        ("V-", q): c.sigma,
        ("V+", q): cj(c.sigma),
        ("E-", q): c.tau,
        ("E+", q): cj(c.tau),
    }
    if q != 0:
        h[("Q", q)] = c.alpha - c.eps
        h[("N3", q)] = c.beta_prime
        h[("N-", q)] = c.gamma
        h[("N+", q)] = cj(c.gamma)
    return {k: complex(v) for k, v in h.items()}


def e_star(params: PhysicalParams, coeffs: Mapping[int, SectorCoefficients], mv: MeanValues) -> float:
    """Constant ``E_*`` of the mean-field Hamiltonian, with ``gamma^ast`` read as ``conj(gamma_0)``."""
    c0 = coeffs[0]
    m = mv.__getitem__
    val = (
        params.energy(0)
        + c0.alpha * m(("E3", 0))
        + c0.beta * m(("F3", 0))
        + c0.gamma * m(("F-", 0))
        + np.conj(c0.gamma) * m(("F+", 0))
        + c0.rho * m(("U-", 0))
        + c0.sigma * m(("V-", 0))
        + c0.tau * m(("E-", 0))
    )
    for k in params.labels():
        ck = coeffs[abs(k)]
        val += ck.rho * m(("U-", k)) + ck.sigma * m(("V-", k)) + ck.tau * m(("E-", k))
    return float(np.real(val))


# ---------------------------------------------------------------------------
# Transformed Hamiltonian


class FValues(NamedTuple):
    f1: complex
    f2: complex
    f3: complex
    f4: complex
    f5: complex
    f6: complex
    f7: complex
    f8: complex
    f9: complex
    f10: complex

    def generator_coefficients(self, q: int) -> dict[str, complex]:
        """Coefficients over the sector generators implied by the values."""
        cj = np.conj
        out = {
            "E3": self.f1, "F3": self.f2, "E+": self.f3, "E-": cj(self.f3), "F+": self.f4, "F-": cj(self.f4),
            "U+": self.f5, "U-": cj(self.f5), "V+": self.f6, "V-": cj(self.f6),
        }
        if q != 0:
            out.update({"D+": self.f7, "D-": cj(self.f7), "N+": self.f8, "N-": cj(self.f8),
                        "N3": self.f9, "Q": self.f10})
        return out


def f_functions(q: int, c: SectorCoefficients, v: CoherentParams, form: str = "working") -> FValues:
    """Coefficients of ``W^dag H_q W`` over the sector generators.

    ``form='printed'`` evaluates the reference expressions literally.  The
    default ``'working'`` form differs only in ``f7``, where the ``gamma``
    bracket carries an extra ``sin(Theta)`` (the printed ``f7`` does not
    reproduce the transformed Hamiltonian once ``Theta != 0`` and
    ``gamma != 0``).
    """
    if form not in ("working", "printed"):
        raise ValueError("form must be 'working' or 'printed'")
    al, be, ga, rho, sig, tau = c.alpha, c.beta, c.gamma, c.rho, c.sigma, c.tau
    bp = 0.0 if q == 0 else c.beta_prime
    r, P, T, F = v.r, v.psi, v.theta, v.phi
    S = math.sinh(2 * r)
    sh2, ch2 = math.sinh(r) ** 2, math.cosh(r) ** 2
    sT, cT, s2T = math.sin(T), math.cos(T), math.sin(2 * T)
    cj = np.conj
    e = lambda x: np.exp(1j * x)  # noqa: E731

    f1 = al * math.cosh(2 * r) + 0.5 * (sig * e(P - F) + cj(sig) * e(F - P) - rho * e(P + F) - cj(rho) * e(-(F + P))) * S * sT \
        + (tau * e(P) + cj(tau) * e(-P)) * S * cT / SQRT2
    f2 = be * (1 + 2 * sT**2 * sh2) + 0.5 * (sig * e(P - F) + cj(sig) * e(F - P) + rho * e(P + F) + cj(rho) * e(-(F + P))) * S * sT \
        + sh2 * s2T * (ga * e(-F) + cj(ga) * e(F)) / SQRT2
    f3 = 0.5 * (ga * e(P - F) - cj(ga) * e(P + F)) * S * sT + cj(tau) * ch2 + tau * sh2 * math.cos(2 * T) * e(2 * P) \
        + (sig * e(2 * P - F) - rho * e(2 * P + F)) * sh2 * s2T / SQRT2 + al * S * cT * e(P) / SQRT2
    f4 = cj(ga) * (ch2 + cT**2 * sh2) - ga * sh2 * sT**2 * e(-2 * F) + (rho * e(P) + cj(sig) * e(-P)) * S * cT / SQRT2 \
        + 0.5 * (tau * e(P - F) - cj(tau) * e(-(P + F))) * S * sT + be * sh2 * s2T * e(-F) / SQRT2
    f5 = 0.5 * (be - al) * S * sT * e(P + F) + cj(rho) * ch2 + ga * S * cT * e(P) / SQRT2 \
        + (rho * sT**2 * e(2 * (P + F)) + sig * cT**2 * e(2 * P) - tau * s2T * e(2 * P + F) / SQRT2) * sh2
    f6 = 0.5 * (al + be) * S * sT * e(P - F) + cj(sig) * ch2 + cj(ga) * S * cT * e(P) / SQRT2 \
        + (rho * cT**2 * e(2 * P) + sig * sT**2 * e(2 * (P - F)) + tau * s2T * e(2 * P - F) / SQRT2) * sh2
    if q == 0:
        f7 = f8 = f9 = f10 = 0.0
    else:
        bracket = sT if form == "working" else 1.0
        f7 = -bp * S * cT * e(P) / SQRT2 + 0.5 * bracket * (ga * e(-F) + cj(ga) * e(F)) * S * e(P)
        f8 = -bp * sh2 * s2T * e(-F) / SQRT2 + ga * sh2 * sT**2 * e(-2 * F) + cj(ga) * (1 + sh2 * sT**2)
        f9 = bp * (1 + 2 * sh2 * cT**2) - (ga * e(-F) + cj(ga) * e(F)) * sh2 * s2T / SQRT2
        f10 = c.alpha - c.eps
    return FValues(*(complex(x) for x in (f1, f2, f3, f4, f5, f6, f7, f8, f9, f10)))


def exact_f_functions(q: int, c: SectorCoefficients, v: CoherentParams) -> tuple[FValues, float]:
    """``f1..f10`` from the adjoint action, with the decomposition residual."""
    qs = quadratic_space(q)
    x = qs.combination(sector_hamiltonian(q, c))
    y = qs.conjugate(w_generator(v, q), x)
    names = SO32_NAMES if q == 0 else ALL_NAMES
    coef, resid = qs.decompose(y, names, q)
    g = lambda n: complex(coef.get(n, 0.0))  # noqa: E731
    if q == 0:
        vals = (g("E3"), g("F3"), g("E+"), g("F+"), g("U+"), g("V+"), 0, 0, 0, 0)
    else:
        vals = (g("E3"), g("F3"), g("E+"), g("F+"), g("U+"), g("V+"), g("D+"), g("N+"), g("N3"), g("Q"))
    return FValues(*(complex(x) for x in vals)), resid


# ---------------------------------------------------------------------------
# Diagonalization


@dataclass(frozen=True)
class SectorSolution:
    """Solved coherent parameters of one sector and its excitation energy."""

    q: int
    params: CoherentParams
    energy: float
    beta: float
    f10: float
    case: str
    notes: tuple[str, ...] = ()

    @property
    def r(self) -> float:
        return self.params.r


def _scale(c: SectorCoefficients) -> float:
    return max(1.0, abs(c.alpha), abs(c.tau), abs(c.beta))


def _squeeze(c: SectorCoefficients, theta: float, q: int) -> tuple[float, float]:
    sec = 1.0 / math.cos(theta)
    disc = c.alpha**2 - 2 * abs(c.tau) ** 2 * sec**2
    if disc <= 0 or abs(c.alpha) == 0:
        raise UnstableSectorError(
            f"sector {q}: alpha^2 - 2|tau|^2 sec^2(Theta) = {disc:.6g} <= 0, excitation energy imaginary", q
        )
    t = -SQRT2 * abs(c.tau) / (c.alpha * math.cos(theta))
    return 0.5 * math.atanh(t), math.sqrt(disc)


def solve_case_B0(c: SectorCoefficients, theta: float, q: int = 0, tol: float = 1e-9) -> SectorSolution:
    """Zero-field branch: ``Theta`` is an input; ``beta = gamma = 0`` required.

    The printed relation between ``sigma`` and ``rho`` holds for the signed
    amplitudes ``s, p`` in ``sigma = s e^{-i(Psi-Phi)}``,
    ``rho = p e^{-i(Psi+Phi)}``: ``s = -p = |tau| tan(Theta) / sqrt2``.
    ``Phi`` is read off ``sigma`` (zero when ``sigma`` vanishes).
    """
    scale = _scale(c)
    if abs(c.beta) > tol * scale or abs(c.gamma) > tol * scale:
        raise CaseMismatchError(f"sector {q}: B=0 branch needs beta = gamma = 0 (beta={c.beta:.3g}, |gamma|={abs(c.gamma):.3g})")
    if q != 0 and abs(c.beta_prime) > tol * scale:
        raise CaseMismatchError(f"sector {q}: B=0 branch needs beta' = 0")
    psi = -np.angle(c.tau) if abs(c.tau) > 0 else 0.0
    s_exp = abs(c.tau) * math.tan(theta) / SQRT2
    if abs(c.sigma) > tol * scale:
        phi = float(np.angle(c.sigma)) + psi - (math.pi if s_exp < 0 else 0.0)
    else:
        phi = 0.0
    sig_exp = s_exp * np.exp(-1j * (psi - phi))
    rho_exp = -s_exp * np.exp(-1j * (psi + phi))
    if abs(c.sigma - sig_exp) > tol * scale or abs(c.rho - rho_exp) > tol * scale:
        raise CaseMismatchError(
            f"sector {q}: sigma/rho do not satisfy s = -p = |tau| tan(Theta)/sqrt2 at Theta={theta:.6g}"
        )
    r, energy = _squeeze(c, theta, q)
    v = CoherentParams(r, psi, theta, phi)
    notes = ("signed r kept; (r, Psi) is equivalent to (-r, Psi + pi)",)
    return SectorSolution(q, v, energy, c.beta, (c.alpha - c.eps) if q else 0.0, "B=0", notes)


def solve_case_Bnonzero(c: SectorCoefficients, q: int, tol: float = 1e-9) -> SectorSolution:
    """Finite-field branch: ``Theta = 0`` and ``rho = sigma = gamma = 0`` required."""
    scale = _scale(c)
    bad = {n: abs(x) for n, x in (("rho", c.rho), ("sigma", c.sigma), ("gamma", c.gamma)) if abs(x) > tol * scale}
    if bad:
        raise CaseMismatchError(f"sector {q}: B!=0 branch needs |rho| = |sigma| = |gamma| = 0, got {bad}")
    psi = -np.angle(c.tau) if abs(c.tau) > 0 else 0.0
    r, energy = _squeeze(c, 0.0, q)
    v = CoherentParams(r, psi, 0.0, 0.0)
    return SectorSolution(q, v, energy, c.beta, (c.alpha - c.eps) if q else 0.0, "B!=0")


def solve_sector(c: SectorCoefficients, q: int, field_on: bool, theta: float = 0.0) -> SectorSolution:
    if field_on:
        return solve_case_Bnonzero(c, q)
    return solve_case_B0(c, theta, q)


@dataclass(frozen=True)
class DiagonalizationResult:
    sectors: Mapping[int, SectorSolution]
    e_star: float
    iterations: int = 0
    residual: float = 0.0

    def params(self) -> dict[int, CoherentParams]:
        return {q: s.params for q, s in self.sectors.items()}


@dataclass(frozen=True)
class SolverOptions:
    damping: float = 0.5
    max_iter: int = 500
    tol: float = 1e-10

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ConfigurationError(f"damping must lie in (0, 1], got {self.damping}")
        if self.max_iter < 1 or not self.tol > 0:
            raise ConfigurationError("max_iter >= 1 and tol > 0 required")


def _stack(coeffs: Mapping[int, SectorCoefficients]) -> np.ndarray:
    return np.concatenate([coeffs[q].as_vector() for q in sorted(coeffs)])


def self_consistent_solve(
    params: PhysicalParams,
    seed: Mapping[int, CoherentParams] | None = None,
    opts: SolverOptions = SolverOptions(),
) -> tuple[DiagonalizationResult, MeanValues, dict[int, SectorCoefficients]]:
    """Damped fixed-point iteration of means -> coefficients -> solution -> means.

    The residual is the max-norm change of the stacked coefficient vector.
    Zero field uses the ``B = 0`` branch with each sector's ``Theta`` taken
    from the seed; finite field uses the ``B != 0`` branch.

    Raises
    ------
    IterationLimitError
        No convergence within ``opts.max_iter`` iterations.
    UnstableSectorError, CaseMismatchError
        Propagated from the sector solves.
    """
    seed = dict(seed or {})
    state = {q: seed.get(q, CoherentParams()) for q in range(params.k_max + 1)}
    thetas = {q: state[q].theta for q in state}
    field_on = params.g_mu_B != 0
    coeffs = coefficients_from_means(params, w_state_means(state, params.k_max))
    resid = math.inf
    for it in range(1, opts.max_iter + 1):
        sols = {q: solve_sector(coeffs[q], q, field_on, thetas[q]) for q in sorted(coeffs)}
        state = {q: s.params for q, s in sols.items()}
        mapped = coefficients_from_means(params, w_state_means(state, params.k_max))
        diff = _stack(mapped) - _stack(coeffs)
        resid = float(np.max(np.abs(diff)))
        log.debug("iteration %d residual %.3e", it, resid)
        if resid < opts.tol:
            coeffs = mapped
            sols = {q: solve_sector(coeffs[q], q, field_on, thetas[q]) for q in sorted(coeffs)}
            mv = w_state_means({q: s.params for q, s in sols.items()}, params.k_max)
            res = DiagonalizationResult(sols, e_star(params, coeffs, mv), it, resid)
            return res, mv, coeffs
        x = _stack(coeffs) + opts.damping * diff
        coeffs = {q: SectorCoefficients.from_vector(x[7 * i : 7 * i + 7], coeffs[q].eps) for i, q in enumerate(sorted(coeffs))}
    raise IterationLimitError(f"no convergence in {opts.max_iter} iterations (residual {resid:.3e})", resid, opts.max_iter)


# ---------------------------------------------------------------------------
# Numeric verification of a diagonalization


@dataclass
class DiagonalReport:
    lines: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    off_diagonal: dict[int, float] = field(default_factory=dict)
    charge_commutator: dict[int, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def text(self) -> str:
        return "\n".join(self.lines)


def verify_diagonal(
    result: DiagonalizationResult,
    coeffs: Mapping[int, SectorCoefficients],
    cutoff: int = 10,
    margin: int = 2,
    tol: float = 1e-6,
    commutator_tol: float = 1e-10,
    pad: int = 60,
) -> DiagonalReport:
    """Check numerically that ``W^dag H_q W`` lies in the span of ``E3, F3, Q``.

    The transformed Hamiltonian is evaluated between check states by
    :class:`~so32bec.states.ConjugationOracle`: all interior states of the
    zero sector at the given cutoff and margin, and the k-sector interior
    states of total occupation at most three.  The residual is the norm of
    the part outside ``span{E3, F3, Q, 1}`` relative to the whole block.
    ``[H_k, Q_k]`` is checked on the interior of a cutoff-``cutoff`` space.
    """
    rep = DiagonalReport()
    for q, sol in sorted(result.sectors.items()):
        h = sector_hamiltonian(q, coeffs[q])
        names = {n: c for (n, _), c in h.items()}
        mt = None if q == 0 else 3
        oracle = ConjugationOracle.interior(sol.params, q, cutoff, margin, max_total=mt, pad=pad)
        block = oracle.conjugated_block(names)
        keep = ("E3", "F3") if q == 0 else ("E3", "F3", "Q")
        coef, resid = oracle.decompose(block, keep)
        rel = resid / max(np.linalg.norm(block), 1e-300)
        rep.off_diagonal[q] = rel
        rep.lines.append(f"sector {q}: off-diagonal residual {rel:.3e} (edge weight {oracle.edge_weight:.1e})")
        if rel > tol:
            rep.failures.append(f"sector {q} off-diagonal residual {rel:.3e} > {tol:g}")
        if q != 0:
            cfg = FockSpaceConfig.uniform(sector_modes(q), min(cutoff, 8))
            hm = combination_matrix(h, cfg)
            qm = lift(generator_polynomial("Q", q), cfg)
            p = interior_projector(cfg, margin)
            norm = hm.commutator(qm).sandwich(p).norm()
            rep.charge_commutator[q] = norm
            rep.lines.append(f"sector {q}: |[H, Q]| on interior {norm:.3e}")
            if norm > commutator_tol:
                rep.failures.append(f"sector {q} charge commutator {norm:.3e}")
    return rep
