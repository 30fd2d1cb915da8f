import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from so32bec.boson import BosonPolynomial, commutator, mode
from so32bec.catalog import ALL_NAMES, SO32_NAMES, generator_polynomial, sector_modes
from so32bec.errors import ConfigurationError, DegenerateStateError
from so32bec.fock import (
    FockSpaceConfig,
    OperatorMatrix,
    StateVector,
    basis_state,
    exp_apply,
    expectation,
    identity,
    interior_projector,
    ladder_matrix,
    lift,
    mat_exp,
    norm_leakage,
    number_matrix,
    vacuum,
)
from so32bec.states import CoherentParams, DisplacementParams, dw_state, sector_cfg, vacuum_leakage

A0 = mode("a", 0)
B0 = mode("b", 0)


def single(n_max):
    return FockSpaceConfig((A0,), (n_max,))


class TestConfig:
    def test_dimension(self):
        cfg = FockSpaceConfig((A0, B0), (3, 4))
        assert cfg.dim == 20

    def test_max_total_prunes(self):
        cfg = FockSpaceConfig((A0, B0), (3, 3), max_total=2)
        assert cfg.dim == 6
        assert cfg.occupations.sum(axis=1).max() == 2

    def test_charge_window(self):
        cfg = FockSpaceConfig((A0, B0), (3, 3), charge=(1, -1), charge_range=(0, 0))
        assert all(a == b for a, b in cfg.occupations)

    def test_dimension_guard(self):
        with pytest.raises(ConfigurationError):
            FockSpaceConfig.uniform(sector_modes(1), 20, max_dim=1000)

    @pytest.mark.parametrize("bad", [((A0, A0), (2, 2)), ((A0,), (0,)), ((A0, B0), (2,))])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ConfigurationError):
            FockSpaceConfig(*bad)

    def test_lookup_outside(self):
        cfg = FockSpaceConfig((A0, B0), (2, 2), max_total=2)
        assert list(cfg.lookup(np.array([[1, 1], [2, 1]]))) == [cfg.basis_index([1, 1]), -1]


class TestLadder:
    def test_annihilate_entries(self):
        a = ladder_matrix(A0, "annihilate", single(2)).toarray()
        np.testing.assert_allclose(a, np.diag([1, np.sqrt(2)], 1))

    def test_number(self):
        cfg = single(2)
        n = ladder_matrix(A0, "create", cfg) @ ladder_matrix(A0, "annihilate", cfg)
        np.testing.assert_allclose(n.toarray(), np.diag([0, 1, 2]))
        np.testing.assert_allclose(number_matrix(A0, cfg).toarray(), n.toarray())

    def test_ccr_fails_only_at_top(self):
        cfg = single(4)
        a, ad = ladder_matrix(A0, "annihilate", cfg), ladder_matrix(A0, "create", cfg)
        c = (a @ ad - ad @ a).toarray()
        np.testing.assert_allclose(c[:4, :4], np.eye(4))
        assert c[4, 4] == pytest.approx(-4)

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            ladder_matrix(A0, "destroy", single(2))


class TestLift:
    def test_identity(self):
        cfg = sector_cfg(0, 3)
        np.testing.assert_allclose(lift(BosonPolynomial.scalar(1), cfg).toarray(), np.eye(cfg.dim))

    def test_e3_diagonal(self):
        cfg = sector_cfg(0, 4)
        occ = cfg.occupations
        expected = np.diag((occ[:, 0] + occ[:, 1] + 1) / 2)
        np.testing.assert_allclose(lift(generator_polynomial("E3", 0), cfg).toarray(), expected)

    @pytest.mark.parametrize("q", [0, 1])
    def test_generator_commutators_on_interior(self, q):
        names = SO32_NAMES if q == 0 else ALL_NAMES
        cfg = sector_cfg(q, 6 if q else 8)
        p = interior_projector(cfg, 2)
        polys = {n: generator_polynomial(n, q) for n in names}
        mats = {n: lift(polys[n], cfg) for n in names}
        for x in names:
            for y in names:
                diff = (mats[x].commutator(mats[y]) - lift(commutator(polys[x], polys[y]), cfg)).sandwich(p)
                assert diff.norm() < 1e-10, (x, y)

    @given(st.sampled_from(ALL_NAMES))
    def test_adjoint_is_conjugate_transpose(self, name):
        cfg = sector_cfg(1, 4)
        m = lift(generator_polynomial(name, 1), cfg)
        adj_name = name[:-1] + {"+": "-", "-": "+"}.get(name[-1], name[-1])
        np.testing.assert_allclose(m.dag().toarray(), lift(generator_polynomial(adj_name, 1), cfg).toarray())


class TestMatExp:
    def test_zero(self):
        cfg = sector_cfg(0, 3)
        np.testing.assert_allclose(mat_exp(lift(BosonPolynomial(), cfg)).toarray(), np.eye(cfg.dim))

    def test_diagonal_phase(self):
        cfg = single(5)
        u = mat_exp(number_matrix(A0, cfg) * 0.7j).toarray()
        np.testing.assert_allclose(u, np.diag(np.exp(0.7j * np.arange(6))), atol=1e-14)

    @given(st.integers(0, 2**32 - 1))
    def test_antihermitian_gives_unitary(self, seed):
        rng = np.random.default_rng(seed)
        cfg = sector_cfg(0, 4)
        x = rng.normal(size=(cfg.dim, cfg.dim)) + 1j * rng.normal(size=(cfg.dim, cfg.dim))
        a = OperatorMatrix(0.3 * (x - x.conj().T), cfg)
        u = mat_exp(a)
        np.testing.assert_allclose((u @ mat_exp(-a)).toarray(), np.eye(cfg.dim), atol=1e-10)
        np.testing.assert_allclose((u.dag() @ u).toarray(), np.eye(cfg.dim), atol=1e-10)

    def test_exp_apply_matches(self):
        cfg = sector_cfg(0, 5)
        g = lift(generator_polynomial("E+", 0) - generator_polynomial("E-", 0), cfg) * 0.3
        s = vacuum(cfg)
        np.testing.assert_allclose(exp_apply(g, s).data, mat_exp(g).data @ s.data, atol=1e-12)


class TestExpectation:
    def test_vacuum_number(self):
        cfg = sector_cfg(0, 3)
        assert expectation(vacuum(cfg), number_matrix(A0, cfg)) == 0

    def test_coherent_number(self):
        z = 0.8
        s = dw_state(CoherentParams(), DisplacementParams(z, 0.0, 0.4, 0.0), sector_cfg(0, 20))
        assert expectation(s, number_matrix(A0, s.cfg)).real == pytest.approx(z**2, abs=1e-10)

    @given(st.integers(0, 2**32 - 1))
    def test_hermitian_real_and_linear(self, seed):
        rng = np.random.default_rng(seed)
        cfg = sector_cfg(0, 3)
        x = rng.normal(size=(cfg.dim, cfg.dim)) + 1j * rng.normal(size=(cfg.dim, cfg.dim))
        h1, h2 = OperatorMatrix(x + x.conj().T, cfg), number_matrix(B0, cfg)
        s = StateVector(rng.normal(size=cfg.dim) + 1j * rng.normal(size=cfg.dim), cfg)
        e1, e2 = expectation(s, h1), expectation(s, h2)
        assert abs(e1.imag) < 1e-12
        assert expectation(s, h1 * 2.0 + h2) == pytest.approx(2 * e1 + e2)

    def test_zero_state(self):
        cfg = sector_cfg(0, 2)
        with pytest.raises(DegenerateStateError):
            expectation(StateVector(np.zeros(cfg.dim), cfg), identity(cfg))


class TestLeakage:
    def test_vacuum(self):
        assert norm_leakage(vacuum(sector_cfg(0, 3))) == 0

    def test_small_at_moderate_squeezing(self):
        assert vacuum_leakage(CoherentParams(0.5, 0.3), 0, sector_cfg(0, 12)) < 1e-8

    def test_large_when_under_resolved(self):
        assert vacuum_leakage(CoherentParams(2.0), 0, sector_cfg(0, 4)) > 0.01


class TestInteriorProjector:
    def test_margin_zero(self):
        cfg = sector_cfg(0, 3)
        np.testing.assert_allclose(interior_projector(cfg, 0).toarray(), np.eye(cfg.dim))

    def test_single_mode(self):
        np.testing.assert_allclose(interior_projector(single(3), 1).toarray(), np.diag([1, 1, 1, 0]))

    def test_projected_ccr(self):
        cfg = single(6)
        a, ad = ladder_matrix(A0, "annihilate", cfg), ladder_matrix(A0, "create", cfg)
        p = interior_projector(cfg, 2)
        np.testing.assert_allclose((a @ ad - ad @ a).sandwich(p).toarray(), p.toarray())

    def test_margin_must_fit(self):
        with pytest.raises(ConfigurationError):
            interior_projector(single(3), 3)


def test_basis_state_amplitude():
    cfg = sector_cfg(0, 3)
    s = basis_state([2, 1], cfg)
    assert s.amplitude([2, 1]) == 1 and s.norm2() == 1
