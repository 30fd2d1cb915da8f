"""Complex linear algebra on the space of quadratic operators of one sector.

Quadratic polynomials in the sector modes (degree <= 2, plus the identity)
form a finite-dimensional space closed under commutators.  Conjugation by
``W = exp(G)`` with quadratic ``G`` is therefore ``exp(-ad_G)`` acting on
coefficient vectors: exact, with no Fock truncation.  The structure constants
come from the exact engine in :mod:`so32bec.boson`.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations_with_replacement, product
from typing import Mapping

import numpy as np
import scipy.linalg

from .boson import IDENTITY, BosonMonomial, BosonPolynomial, commutator
from .catalog import ALL_NAMES, SO32_NAMES, generator_polynomial, sector_modes

__all__ = ["QuadraticSpace", "quadratic_space"]


class QuadraticSpace:
    """Monomial basis of degree-<=2 normal-ordered operators on sector ``|q|``."""

    def __init__(self, q: int):
        self.q = abs(int(q))
        modes = sector_modes(self.q)
        monos = [IDENTITY]
        monos += [BosonMonomial.make(c, ()) for c in combinations_with_replacement(modes, 2)]
        monos += [BosonMonomial.make((), a) for a in combinations_with_replacement(modes, 2)]
        monos += [BosonMonomial.make((c,), (a,)) for c, a in product(modes, modes)]
        monos += [BosonMonomial.make((m,), ()) for m in modes]
        monos += [BosonMonomial.make((), (m,)) for m in modes]
        self.monomials = tuple(monos)
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self.dim = len(monos)
        self._ad_cache: dict[tuple[str, int], np.ndarray] = {}

    def vector(self, p: BosonPolynomial) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        for m, c in p.items():
            v[self.index[m]] += float(c)
        return v

    def combination(self, coeffs: Mapping[tuple[str, int], complex], constant: complex = 0) -> np.ndarray:
        """Vector of ``sum c * generator(name, label) + constant``."""
        v = np.zeros(self.dim, dtype=complex)
        v[self.index[IDENTITY]] += constant
        for (name, label), c in coeffs.items():
            if c:
                v += c * self.vector(generator_polynomial(name, label))
        return v

    def ad(self, name: str, label: int) -> np.ndarray:
        """Matrix of ``X -> [G, X]`` for catalog generator ``G = name(label)``."""
        key = (name, label)
        if key not in self._ad_cache:
            g = generator_polynomial(name, label)
            mat = np.zeros((self.dim, self.dim), dtype=complex)
            for j, m in enumerate(self.monomials):
                mat[:, j] = self.vector(commutator(g, BosonPolynomial.from_monomial(m)))
            self._ad_cache[key] = mat
        return self._ad_cache[key]

    def ad_combination(self, coeffs: Mapping[tuple[str, int], complex]) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for key, c in coeffs.items():
            if c:
                out += c * self.ad(*key)
        return out

    def conjugate(self, generator: Mapping[tuple[str, int], complex], x: np.ndarray) -> np.ndarray:
        """Coefficients of ``exp(-G) X exp(G)`` for ``G = sum c * generator``."""
        return scipy.linalg.expm(-self.ad_combination(generator)) @ x

    def generator_basis(self, names: tuple[str, ...] | None = None, label: int | None = None):
        if names is None:
            names = SO32_NAMES if self.q == 0 else ALL_NAMES
        label = self.q if label is None else label
        cols = [self.vector(generator_polynomial(n, label)) for n in names]
        cols.append(self.vector(BosonPolynomial.scalar(1)))
        return list(names) + ["1"], np.array(cols).T

    def decompose(self, x: np.ndarray, names: tuple[str, ...] | None = None, label: int | None = None):
        """Least-squares coefficients of ``x`` over the generator basis and the residual norm."""
        labels, basis = self.generator_basis(names, label)
        coef, *_ = np.linalg.lstsq(basis, x, rcond=None)
        resid = float(np.linalg.norm(basis @ coef - x))
        return dict(zip(labels, coef)), resid


@lru_cache(maxsize=None)
def quadratic_space(q: int) -> QuadraticSpace:
    return QuadraticSpace(abs(int(q)))
