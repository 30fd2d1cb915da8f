"""Truncated multimode Fock space: ladder matrices, lifting, exponentials, states.

Operators are stored as ``scipy.sparse`` CSR matrices tagged with the
:class:`FockSpaceConfig` they act on.  Matrix exponentials are exact dense
exponentials computed block by block over the connected components of the
generator's sparsity graph (quadratic boson generators conserve parities and
momentum imbalances, so the blocks stay small).

Basis ordering is the Kronecker order of ``cfg.modes``: the last mode varies
fastest.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .boson import BosonPolynomial, ModeIndex
from .errors import ConfigurationError, DegenerateStateError

__all__ = [
    "FockSpaceConfig",
    "OperatorMatrix",
    "StateVector",
    "ladder_matrix",
    "number_matrix",
    "identity",
    "lift",
    "mat_exp",
    "exp_apply",
    "expectation",
    "norm_leakage",
    "interior_projector",
    "vacuum",
    "basis_state",
]

log = logging.getLogger(__name__)

DEFAULT_MAX_DIM = 40_000


@dataclass(frozen=True)
class FockSpaceConfig:
    """Ordered modes with a per-mode occupation cutoff ``n_max``.

    Two optional constraints select a subspace of the product basis:
    ``max_total`` caps the total occupation, and ``charge`` (integer weights
    per mode) with ``charge_range`` keeps states whose weighted occupation
    lies in the closed window.  Quadratic sector operators conserve both the
    parity of the total and the momentum imbalance, so constrained spaces
    give large effective cutoffs at modest dimension.
    """

    modes: tuple[ModeIndex, ...]
    cutoffs: tuple[int, ...]
    max_total: int | None = None
    charge: tuple[int, ...] | None = None
    charge_range: tuple[int, int] | None = None
    max_dim: int = field(default=DEFAULT_MAX_DIM, compare=False)

    def __post_init__(self):
        modes = tuple(ModeIndex(*m) for m in self.modes)
        cutoffs = tuple(int(c) for c in self.cutoffs)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "cutoffs", cutoffs)
        if len(set(modes)) != len(modes):
            raise ConfigurationError(f"duplicate modes in {modes}")
        if len(cutoffs) != len(modes):
            raise ConfigurationError("one cutoff per mode required")
        if any(c < 1 for c in cutoffs):
            raise ConfigurationError(f"cutoffs must be >= 1, got {cutoffs}")
        if (self.charge is None) != (self.charge_range is None):
            raise ConfigurationError("charge weights and charge_range go together")
        if self.charge is not None:
            object.__setattr__(self, "charge", tuple(int(w) for w in self.charge))
            object.__setattr__(self, "charge_range", tuple(int(c) for c in self.charge_range))
            if len(self.charge) != len(modes):
                raise ConfigurationError("one charge weight per mode required")
        if self.max_total is None and self.charge is None and self.full_dim > self.max_dim:
            raise ConfigurationError(
                f"Fock dimension {self.full_dim} exceeds the configured maximum {self.max_dim}"
            )
        if self.dim > self.max_dim:
            raise ConfigurationError(
                f"Fock dimension {self.dim} exceeds the configured maximum {self.max_dim}"
            )

    @classmethod
    def uniform(cls, modes: Iterable[ModeIndex], cutoff: int, **kw) -> FockSpaceConfig:
        modes = tuple(modes)
        return cls(modes, (cutoff,) * len(modes), **kw)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def full_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    @property
    def constrained(self) -> bool:
        return self.max_total is not None or self.charge is not None

    @property
    def dim(self) -> int:
        if not self.constrained:
            return self.full_dim
        return len(self.occupations)

    def index(self, m: ModeIndex) -> int:
        try:
            return self.modes.index(ModeIndex(*m))
        except ValueError:
            raise ConfigurationError(f"mode {tuple(m)} is not part of this Fock space") from None

    @cached_property
    def occupations(self) -> np.ndarray:
        """``(dim, n_modes)`` integer array of basis-state occupations, Kronecker order."""
        if not self.constrained:
            return np.indices(self.dims).reshape(len(self.dims), -1).T
        occ = np.zeros((1, 0), dtype=np.int64)
        cap = self.max_total
        for c in self.cutoffs:
            vals = np.arange(c + 1)
            occ = np.hstack([np.repeat(occ, c + 1, axis=0), np.tile(vals, len(occ))[:, None]])
            if cap is not None:
                occ = occ[occ.sum(axis=1) <= cap]
            if len(occ) > 50 * self.max_dim:
                raise ConfigurationError("constrained basis enumeration too large")
        if self.charge is not None:
            q = occ @ np.asarray(self.charge)
            lo, hi = self.charge_range
            occ = occ[(q >= lo) & (q <= hi)]
        return occ

    @cached_property
    def _keys(self) -> np.ndarray:
        return np.ravel_multi_index(tuple(self.occupations.T), self.dims).astype(np.int64)

    def lookup(self, occ: np.ndarray) -> np.ndarray:
        """Basis positions of occupation rows; ``-1`` where a row is outside the space."""
        occ = np.atleast_2d(np.asarray(occ, dtype=np.int64))
        out = np.full(len(occ), -1, dtype=np.int64)
        inside = np.all((occ >= 0) & (occ <= np.asarray(self.cutoffs)), axis=1)
        if not inside.any():
            return out
        keys = np.ravel_multi_index(tuple(occ[inside].T), self.dims)
        pos = np.searchsorted(self._keys, keys)
        pos = np.minimum(pos, len(self._keys) - 1)
        hit = self._keys[pos] == keys
        out[np.flatnonzero(inside)[hit]] = pos[hit]
        return out

    def basis_index(self, occ: Sequence[int]) -> int:
        i = int(self.lookup(np.asarray(occ)[None, :])[0])
        if i < 0:
            raise ConfigurationError(f"occupation {tuple(occ)} is not in this Fock space")
        return i


def _check_same(x: FockSpaceConfig, y: FockSpaceConfig):
    if x != y:
        raise ConfigurationError("operands live on different Fock spaces")


class OperatorMatrix:
    """Sparse complex operator on a truncated Fock space."""

    __array_priority__ = 100

    def __init__(self, data, cfg: FockSpaceConfig):
        m = sp.csr_matrix(data, dtype=complex)
        if m.shape != (cfg.dim, cfg.dim):
            raise ConfigurationError(f"matrix shape {m.shape} does not match dimension {cfg.dim}")
        self.data = m
        self.cfg = cfg

    def toarray(self) -> np.ndarray:
        return self.data.toarray()

    def __add__(self, other):
        if isinstance(other, OperatorMatrix):
            _check_same(self.cfg, other.cfg)
            return OperatorMatrix(self.data + other.data, self.cfg)
        return OperatorMatrix(self.data + other * sp.identity(self.cfg.dim), self.cfg)

    __radd__ = __add__

    def __neg__(self):
        return OperatorMatrix(-self.data, self.cfg)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        if isinstance(c, OperatorMatrix):
            raise TypeError("use @ for operator products")
        return OperatorMatrix(self.data * c, self.cfg)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return OperatorMatrix(self.data / c, self.cfg)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            _check_same(self.cfg, other.cfg)
            return OperatorMatrix(self.data @ other.data, self.cfg)
        if isinstance(other, StateVector):
            _check_same(self.cfg, other.cfg)
            return StateVector(self.data @ other.data, self.cfg)
        return NotImplemented

    def dag(self) -> OperatorMatrix:
        return OperatorMatrix(self.data.conj().T, self.cfg)

    def norm(self) -> float:
        """Frobenius norm."""
        return float(sp.linalg.norm(self.data))

    def commutator(self, other: OperatorMatrix) -> OperatorMatrix:
        return self @ other - other @ self

    def sandwich(self, projector: OperatorMatrix) -> OperatorMatrix:
        return projector @ self @ projector

    def __repr__(self) -> str:
        return f"OperatorMatrix(dim={self.cfg.dim}, nnz={self.data.nnz})"


class StateVector:
    """Dense complex vector on a truncated Fock space."""

    def __init__(self, data, cfg: FockSpaceConfig):
        v = np.asarray(data, dtype=complex).reshape(-1)
        if v.shape != (cfg.dim,):
            raise ConfigurationError(f"state length {v.shape[0]} does not match dimension {cfg.dim}")
        self.data = v
        self.cfg = cfg

    def norm2(self) -> float:
        return float(np.vdot(self.data, self.data).real)

    def normalized(self) -> StateVector:
        n2 = self.norm2()
        if n2 == 0:
            raise DegenerateStateError("zero-norm state")
        return StateVector(self.data / np.sqrt(n2), self.cfg)

    def overlap(self, other: StateVector) -> complex:
        _check_same(self.cfg, other.cfg)
        return complex(np.vdot(self.data, other.data))

    def amplitude(self, occ: Sequence[int]) -> complex:
        return complex(self.data[self.cfg.basis_index(occ)])

    def occupation_probabilities(self) -> np.ndarray:
        return (np.abs(self.data) ** 2).reshape(self.cfg.dims)

    def __repr__(self) -> str:
        return f"StateVector(dim={self.cfg.dim}, norm2={self.norm2():.12g})"


def _monomial_matrix(creators, annihilators, cfg: FockSpaceConfig) -> sp.csr_matrix:
    """Matrix of ``prod(a^dag) prod(a)`` restricted to the basis of ``cfg``."""
    occ = cfg.occupations
    new = occ.copy()
    amp = np.ones(len(occ))
    for pos, k in Counter(cfg.index(m) for m in annihilators).items():
        n = new[:, pos]
        for j in range(k):
            amp = amp * np.sqrt(np.clip(n - j, 0, None))
        new[:, pos] = n - k
    for pos, k in Counter(cfg.index(m) for m in creators).items():
        n = new[:, pos]
        for j in range(1, k + 1):
            amp = amp * np.sqrt(np.clip(n + j, 0, None))
        new[:, pos] = n + k
    rows = cfg.lookup(new)
    keep = (rows >= 0) & (amp != 0)
    cols = np.flatnonzero(keep)
    return sp.csr_matrix((amp[keep].astype(complex), (rows[keep], cols)), shape=(cfg.dim, cfg.dim))


def ladder_matrix(m: ModeIndex, kind: str, cfg: FockSpaceConfig) -> OperatorMatrix:
    """Annihilation (``kind='annihilate'``) or creation matrix for mode ``m``."""
    cfg.index(m)
    if kind == "annihilate":
        return OperatorMatrix(_monomial_matrix((), (m,), cfg), cfg)
    if kind == "create":
        return OperatorMatrix(_monomial_matrix((m,), (), cfg), cfg)
    raise ValueError(f"kind must be 'create' or 'annihilate', got {kind!r}")


def number_matrix(m: ModeIndex, cfg: FockSpaceConfig) -> OperatorMatrix:
    pos = cfg.index(m)
    return OperatorMatrix(sp.diags(cfg.occupations[:, pos].astype(complex), format="csr"), cfg)


def identity(cfg: FockSpaceConfig) -> OperatorMatrix:
    return OperatorMatrix(sp.identity(cfg.dim, format="csr", dtype=complex), cfg)


def vacuum(cfg: FockSpaceConfig) -> StateVector:
    v = np.zeros(cfg.dim, dtype=complex)
    v[cfg.basis_index([0] * len(cfg.modes))] = 1.0
    return StateVector(v, cfg)


def basis_state(occ: Sequence[int], cfg: FockSpaceConfig) -> StateVector:
    v = np.zeros(cfg.dim, dtype=complex)
    v[cfg.basis_index(occ)] = 1.0
    return StateVector(v, cfg)


def lift(p: BosonPolynomial, cfg: FockSpaceConfig) -> OperatorMatrix:
    """Matrix of a normal-ordered polynomial on the truncated space.

    Each normal-ordered monomial is applied directly to the basis, so the
    result is the exact operator compressed to the space (``P X P``), with no
    intermediate truncation even on constrained spaces.
    """
    for m in p.modes():
        cfg.index(m)
    total = sp.csr_matrix((cfg.dim, cfg.dim), dtype=complex)
    for mono, c in p.items():
        total = total + float(c) * _monomial_matrix(mono.creators, mono.annihilators, cfg)
    return OperatorMatrix(total, cfg)


def _blocks(a: sp.csr_matrix) -> tuple[int, np.ndarray]:
    pattern = (abs(a) + abs(a.T)).tocsr()
    return connected_components(pattern, directed=False)


def mat_exp(a: OperatorMatrix, tol: float = 1e-12) -> OperatorMatrix:
    """``exp(a)`` computed as dense exponentials of its decoupled blocks.

    ``tol`` is accepted for interface symmetry; the Pade exponential used per
    block is accurate to machine precision for the norms met here.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_blocks, labels = _blocks(a.data)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(n_blocks + 1))
    rows, cols, vals = [], [], []
    csr = a.data
    for b in range(n_blocks):
        idx = order[bounds[b] : bounds[b + 1]]
        if len(idx) == 1:
            block = np.exp(csr[idx[0], idx[0]]) * np.ones((1, 1), dtype=complex)
        else:
            block = scipy.linalg.expm(csr[idx][:, idx].toarray())
        block[np.abs(block) < 1e-300] = 0.0
        r, c = np.nonzero(block)
        rows.append(idx[r])
        cols.append(idx[c])
        vals.append(block[r, c])
    out = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=csr.shape,
    )
    return OperatorMatrix(out, a.cfg)


def exp_apply(a: OperatorMatrix, s: StateVector) -> StateVector:
    """``exp(a) @ s`` without forming the exponential."""
    _check_same(a.cfg, s.cfg)
    return StateVector(sp.linalg.expm_multiply(a.data.tocsc(), s.data), s.cfg)


def expectation(s: StateVector, a: OperatorMatrix) -> complex:
    """Normalized expectation ``<s|a|s> / <s|s>``."""
    _check_same(s.cfg, a.cfg)
    n2 = s.norm2()
    if n2 == 0:
        raise DegenerateStateError("expectation value in a zero-norm state")
    return complex(np.vdot(s.data, a.data @ s.data)) / n2


def norm_leakage(s: StateVector) -> float:
    """``|1 - <s|s>|`` for a state built from a unit-norm construction."""
    return abs(1.0 - s.norm2())


def interior_projector(cfg: FockSpaceConfig, margin: int) -> OperatorMatrix:
    """Projector onto basis states with every occupation ``<= n_max - margin``."""
    if margin < 0 or margin >= min(cfg.cutoffs):
        raise ConfigurationError(
            f"margin {margin} must satisfy 0 <= margin < min cutoff {min(cfg.cutoffs)}"
        )
    keep = np.all(cfg.occupations <= np.asarray(cfg.cutoffs) - margin, axis=1)
    if cfg.max_total is not None:
        keep &= cfg.occupations.sum(axis=1) <= cfg.max_total - margin
    return OperatorMatrix(sp.diags(keep.astype(float), format="csr"), cfg)
