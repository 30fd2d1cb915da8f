"""Numeric verification suites shared by the CLI and the test-suite."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np

from .boson import commutator
from .catalog import ALL_NAMES, SO32_NAMES, generator_polynomial, sector_modes
from .fock import FockSpaceConfig, interior_projector, lift
from .meanfield import SectorCoefficients, exact_f_functions, f_functions, sector_hamiltonian
from .states import (
    TRANSFORM_NAMES,
    CoherentParams,
    ConjugationOracle,
    DisplacementParams,
    MomentSet,
    closed_form_transform,
    brute_force_moments,
    closed_form_moments,
    dw_state,
    exact_transform,
    sector_cfg,
)

__all__ = [
    "CheckLine",
    "lift_agreement",
    "transform_names",
    "transform_oracle",
    "transform_errors",
    "adjoint_transform_errors",
    "f_function_errors",
    "moment_errors",
    "random_coefficients",
    "random_params",
]


@dataclass
class CheckLine:
    """One verified identity: a label, a status and the measured residual."""

    label: str
    residual: float
    tol: float
    status: str = field(default="")

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.residual <= self.tol else "FAIL"

    @property
    def ok(self) -> bool:
        return self.status != "FAIL"

    def line(self) -> str:
        return f"{self.label}: {self.status} residual={self.residual:.3e} tol={self.tol:.1e}"


def lift_agreement(q: int, cutoff: int = 8, margin: int = 2, names: Iterable[str] | None = None) -> dict[tuple[str, str], float]:
    """``|P [X, Y] P - P lift([X, Y]_symbolic) P|`` for all generator pairs of a sector."""
    names = tuple(names) if names is not None else (SO32_NAMES if q == 0 else ALL_NAMES)
    cfg = FockSpaceConfig.uniform(sector_modes(q), cutoff)
    p = interior_projector(cfg, margin)
    polys = {n: generator_polynomial(n, q) for n in names}
    mats = {n: lift(polys[n], cfg) for n in names}
    out = {}
    for x, y in combinations(names, 2):
        numeric = mats[x].commutator(mats[y]).sandwich(p)
        symbolic = lift(commutator(polys[x], polys[y]), cfg).sandwich(p)
        out[(x, y)] = (numeric - symbolic).norm()
    return out


def transform_names(q: int) -> tuple[str, ...]:
    return tuple(n for n in TRANSFORM_NAMES if q != 0 or n[0] != "N")


def transform_oracle(v: CoherentParams, q: int, cutoff: int = 12, margin: int = 2) -> ConjugationOracle:
    """Oracle over the interior check states used for the transform checks.

    The zero sector uses every interior state; momentum sectors use the
    interior states of total occupation at most three.
    """
    if q == 0:
        return ConjugationOracle.interior(v, 0, cutoff, margin, pad=90)
    return ConjugationOracle.interior(v, q, cutoff, margin, max_total=3, pad=40)


def _closed_block(oracle: ConjugationOracle, coeffs: Mapping[str, complex]) -> np.ndarray:
    coeffs = dict(coeffs)
    const = coeffs.pop("1", 0.0)
    return oracle.combination_block(coeffs, const)


def transform_errors(
    v: CoherentParams, q: int, oracle: ConjugationOracle, form: str = "working", names: Iterable[str] | None = None
) -> dict[str, float]:
    """Relative block error of each closed-form transform against the oracle."""
    out = {}
    for n in names or transform_names(q):
        num = oracle.conjugated_block({n: 1.0})
        closed = _closed_block(oracle, closed_form_transform(n, v, q, form))
        out[n] = float(np.linalg.norm(num - closed) / np.linalg.norm(num))
    return out


def adjoint_transform_errors(v: CoherentParams, q: int, form: str = "working") -> dict[str, float]:
    """Max coefficient difference between closed-form and adjoint-action transforms."""
    out = {}
    for n in transform_names(q):
        a = closed_form_transform(n, v, q, form)
        b = exact_transform(n, v, q)
        keys = set(a) | set(b)
        out[n] = max(abs(a.get(k, 0) - b.get(k, 0)) for k in keys)
    return out


def f_function_errors(
    q: int, c: SectorCoefficients, v: CoherentParams, oracle: ConjugationOracle | None = None, form: str = "working"
) -> dict[str, float]:
    """Compare the closed-form ``f`` values with the adjoint action and, optionally, the oracle.

    Returns the max coefficient error against the adjoint action (``"adjoint"``)
    and, with an oracle, the max error of the generator-basis decomposition of
    the numeric transformed Hamiltonian (``"oracle"``).
    """
    f = f_functions(q, c, v, form)
    exact, const = exact_f_functions(q, c, v)
    out = {"adjoint": float(max(abs(a - b) for a, b in zip(f, exact)))}
    if oracle is not None:
        h = {n: coef for (n, _), coef in sector_hamiltonian(q, c).items()}
        block = oracle.conjugated_block(h)
        fitted, _ = oracle.decompose(block)
        target = f.generator_coefficients(q)
        keys = set(target) | {k for k in fitted if k != "1"}
        err = max(abs(fitted.get(k, 0) - target.get(k, 0)) for k in keys)
        out["oracle"] = float(err)
    return out


def moment_errors(
    v: CoherentParams, d: DisplacementParams, cutoff: int, gate: float = 1e-8
) -> tuple[MomentSet, MomentSet, float]:
    """Closed-form and oracle moments of the zero-sector DW state and their max difference."""
    closed = closed_form_moments(v, d)
    oracle = brute_force_moments(dw_state(v, d, sector_cfg(0, cutoff), gate=gate))
    return closed, oracle, float(np.max(np.abs(closed.as_array() - oracle.as_array())))


def random_coefficients(rng: np.random.Generator, q: int, eps: float = 1.0) -> SectorCoefficients:
    """Random sector coefficients: real ``alpha, beta, beta'`` and complex ``gamma, rho, sigma, tau``."""
    cplx = lambda: complex(rng.normal(), rng.normal())  # noqa: E731
    return SectorCoefficients(
        alpha=float(rng.uniform(1.0, 3.0)),
        beta=float(rng.normal()),
        gamma=cplx(),
        rho=cplx(),
        sigma=cplx(),
        tau=cplx(),
        beta_prime=0.0 if q == 0 else float(rng.normal()),
        eps=eps,
    )


def random_params(rng: np.random.Generator, r: float) -> CoherentParams:
    psi, theta, phi = rng.uniform(0, 2 * np.pi, size=3)
    return CoherentParams(r, float(psi), float(theta), float(phi))
