import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from so32bec.errors import CaseMismatchError, ConfigurationError, IterationLimitError, UnstableSectorError
from so32bec.fock import FockSpaceConfig
from so32bec.meanfield import (
    DiagonalizationResult,
    MeanValues,
    PhysicalParams,
    SectorCoefficients,
    SolverOptions,
    coefficients_from_means,
    e_star,
    exact_f_functions,
    f_functions,
    full_modes,
    hamiltonian_terms,
    overlap_element,
    reduced_hamiltonian,
    sector_hamiltonian,
    self_consistent_solve,
    solve_case_B0,
    solve_case_Bnonzero,
    two_path_offset,
    verify_diagonal,
    w_state_means,
)
from so32bec.states import CoherentParams
from so32bec.verification import random_coefficients, random_params

WEAK = PhysicalParams.from_g2(0.05, B=0.3, k_max=2)


class TestParams:
    def test_couplings(self):
        p = PhysicalParams(g_n=1.0, g_s=2.0, V0=3.0)
        assert (p.g1, p.g2, p.g2V0) == (1.25, 1.5, 4.5)

    def test_energies(self):
        p = PhysicalParams(omega=2.0, eps={-3: 0.5})
        assert (p.energy(0), p.energy(-2), p.energy(3)) == (2.0, 6.0, 0.5)

    def test_labels(self):
        assert PhysicalParams(k_max=2).labels() == [1, -1, 2, -2]

    @pytest.mark.parametrize("kw", [{"V0": 0.0}, {"k_max": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            PhysicalParams(**kw)

    def test_solver_options(self):
        with pytest.raises(ConfigurationError):
            SolverOptions(damping=0.0)


@pytest.mark.parametrize(
    "klmn, want",
    [((0, 0, 0, 0), 1.0), ((1, -1, 0, 0), 1.0), ((1, 0, 1, 0), 0.5), ((1, 1, 2, 0), 0.5 / math.sqrt(2)), ((1, 0, 0, 0), 0.0)],
)
def test_overlap_element(klmn, want):
    assert overlap_element(*klmn) == pytest.approx(want)


class TestHamiltonian:
    @pytest.mark.parametrize("k_max", [1, 2])
    def test_two_paths_differ_by_constant(self, k_max):
        modes, gens = hamiltonian_terms(k_max, "modes"), hamiltonian_terms(k_max, "generators")
        p = PhysicalParams.from_g2(0.7, B=0.4, k_max=k_max)
        offset = 0.0
        for key in modes:
            diff = gens[key] - modes[key]
            assert diff.degree() <= 0
            offset += float(diff.constant().real if hasattr(diff.constant(), "real") else diff.constant()) * (
                p.energy(key[1]) if isinstance(key, tuple) else 0.0
            )
        assert offset == pytest.approx(two_path_offset(p))

    def test_two_paths_on_matrices(self):
        p = PhysicalParams.from_g2(0.4, B=0.2, k_max=1)
        cfg = FockSpaceConfig.uniform(full_modes(1), 2)
        a = reduced_hamiltonian(p, cfg, "modes")
        b = reduced_hamiltonian(p, cfg, "generators")
        diff = (b - a).toarray()
        np.testing.assert_allclose(diff, two_path_offset(p) * np.eye(cfg.dim), atol=1e-12)

    @pytest.mark.parametrize("path", ["modes", "generators"])
    def test_hermitian(self, path):
        for poly in hamiltonian_terms(2, path).values():
            assert (poly - poly.dag()).is_zero()

    def test_free_theory_is_diagonal(self):
        p = PhysicalParams(k_max=1)
        cfg = FockSpaceConfig.uniform(full_modes(1), 2)
        h = reduced_hamiltonian(p, cfg).toarray()
        assert np.count_nonzero(h - np.diag(np.diag(h))) == 0
        want = cfg.occupations @ np.array([p.energy(m.sector) for m in cfg.modes])
        np.testing.assert_allclose(np.diag(h).real, want)

    def test_field_splits_species(self):
        cfg = FockSpaceConfig.uniform(full_modes(1), 1)
        h0 = reduced_hamiltonian(PhysicalParams(k_max=1), cfg).toarray()
        h1 = reduced_hamiltonian(PhysicalParams(k_max=1, B=0.5), cfg).toarray()
        shift = np.diag(h1 - h0).real
        occ = cfg.occupations
        sign = np.array([1 if m.species == "b" else -1 for m in cfg.modes])
        np.testing.assert_allclose(shift, 0.25 * occ @ sign)


class TestCoefficients:
    def test_vacuum(self):
        c = coefficients_from_means(WEAK, MeanValues.vacuum())
        assert c[0].alpha == 2.0 and c[0].beta == pytest.approx(0.3)
        assert c[1].alpha == pytest.approx(2.0) and c[1].beta == pytest.approx(0.15)
        assert all(c[q].tau == 0 for q in c)

    def test_squeezed_zero_sector(self):
        p = PhysicalParams.from_g2(0.2, k_max=1)
        r, psi = 0.3, 0.7
        mv = w_state_means({0: CoherentParams(r, psi)}, 1)
        c = coefficients_from_means(p, mv)
        e_plus = mv[("E+", 0)]
        assert abs(e_plus) == pytest.approx(math.sinh(2 * r) / (2 * math.sqrt(2)))
        assert c[1].tau == pytest.approx(0.2 * e_plus)
        assert c[1].alpha == pytest.approx(2.0 + 0.1 * (3 * mv[("E3", 0)].real - 1.5))
        assert c[1].alpha - 2.0 == pytest.approx(0.3 * math.sinh(r) ** 2)

    def test_zero_field_gives_zero_beta(self):
        p = PhysicalParams.from_g2(0.2, k_max=1)
        c = coefficients_from_means(p, w_state_means({0: CoherentParams(0.4, 0.2), 1: CoherentParams(0.1)}, 1))
        assert c[0].beta == pytest.approx(0) and c[1].beta == pytest.approx(0)

    def test_sector_hamiltonian_hermitian_pairs(self):
        c = SectorCoefficients(2.0, 0.1, 0.2 + 0.1j, 0.3j, 0.4, 0.5 - 0.2j, 0.05, 1.0)
        h = sector_hamiltonian(1, c)
        for base in ("F", "U", "V", "E", "N"):
            assert h[(base + "+", 1)] == pytest.approx(np.conj(h[(base + "-", 1)]))
        assert h[("Q", 1)] == 1.0

    def test_e_star_free(self):
        p = PhysicalParams(k_max=1)
        mv = MeanValues.vacuum()
        assert e_star(p, coefficients_from_means(p, mv), mv) == pytest.approx(2.0)


class TestFFunctions:
    def test_r_zero(self):
        c = SectorCoefficients(2.0, 0.1, 0.2 + 0.1j, 0.3j, 0.4, 0.5 - 0.2j, 0.05, 1.0)
        f = f_functions(1, c, CoherentParams(0.0, 0.4, 0.3, 0.2))
        assert f[:6] == pytest.approx([2.0, 0.1, np.conj(c.tau), np.conj(c.gamma), np.conj(c.rho), np.conj(c.sigma)])
        assert f.f7 == 0 and f.f8 == pytest.approx(np.conj(c.gamma)) and f.f9 == pytest.approx(0.05)
        assert f.f10 == pytest.approx(1.0)

    def test_zero_sector_tail(self):
        rng = np.random.default_rng(1)
        f = f_functions(0, random_coefficients(rng, 0), random_params(rng, 0.4))
        assert f[6:] == (0, 0, 0, 0)

    @pytest.mark.parametrize("q", [0, 1, 2])
    @given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.6))
    def test_working_matches_adjoint_action(self, q, seed, r):
        rng = np.random.default_rng(seed)
        c, v = random_coefficients(rng, q, eps=1.5), random_params(rng, r)
        exact, resid = exact_f_functions(q, c, v)
        assert resid < 1e-10
        np.testing.assert_allclose(np.array(f_functions(q, c, v)), np.array(exact), atol=1e-10)

    def test_printed_f7_differs(self):
        rng = np.random.default_rng(3)
        c, v = random_coefficients(rng, 1), random_params(rng, 0.5)
        printed = f_functions(1, c, v, form="printed")
        exact, _ = exact_f_functions(1, c, v)
        assert abs(printed.f7 - exact.f7) > 1e-3
        assert printed[:6] == pytest.approx(exact[:6], abs=1e-10)

    def test_printed_f7_agrees_without_gamma(self):
        c = SectorCoefficients(2.0, 0.1, 0j, 0.3j, 0.4, 0.5, 0.05, 1.0)
        v = CoherentParams(0.4, 0.3, 0.9, 0.2)
        assert f_functions(1, c, v, "printed").f7 == pytest.approx(exact_f_functions(1, c, v)[0].f7, abs=1e-12)


class TestSectorSolves:
    def test_b0_basic(self):
        sol = solve_case_B0(SectorCoefficients(2.0, 0.0, tau=1.0), 0.0)
        assert sol.r == pytest.approx(-0.44068679, abs=1e-8)
        assert sol.energy == pytest.approx(math.sqrt(2))

    def test_b0_no_tau(self):
        sol = solve_case_B0(SectorCoefficients(3.0, 0.0), 0.0)
        assert (sol.r, sol.energy) == (0.0, 3.0)

    def test_b0_theta(self):
        theta = 0.4
        s = math.tan(theta) / math.sqrt(2)
        psi = 0.0
        c = SectorCoefficients(3.0, 0.0, rho=-s, sigma=s, tau=1.0)
        sol = solve_case_B0(c, theta)
        assert sol.energy == pytest.approx(math.sqrt(9 - 2 / math.cos(theta) ** 2))
        assert sol.params.psi == pytest.approx(psi) and sol.params.theta == theta

    def test_unstable(self):
        with pytest.raises(UnstableSectorError) as exc:
            solve_case_B0(SectorCoefficients(1.0, 0.0, tau=1.0), 0.0, q=2)
        assert exc.value.sector == 2

    @pytest.mark.parametrize("c", [SectorCoefficients(2.0, 0.0, gamma=0.1), SectorCoefficients(2.0, 0.2)])
    def test_b0_mismatch(self, c):
        with pytest.raises(CaseMismatchError):
            solve_case_B0(c, 0.0)

    def test_b0_sigma_rho_relation(self):
        with pytest.raises(CaseMismatchError):
            solve_case_B0(SectorCoefficients(2.0, 0.0, sigma=0.3, tau=1.0), 0.0)

    def test_bnonzero_mismatch(self):
        with pytest.raises(CaseMismatchError):
            solve_case_Bnonzero(SectorCoefficients(2.0, 0.3, gamma=0.1, tau=1.0), 0)

    def test_bnonzero_diagonalizes(self):
        c = SectorCoefficients(2.0, 0.3, tau=1.0 * np.exp(0.7j), eps=1.0)
        sol = solve_case_Bnonzero(c, 0)
        rep = verify_diagonal(DiagonalizationResult({0: sol}, 0.0), {0: c})
        assert rep.ok, rep.failures
        assert rep.off_diagonal[0] < 1e-9

    def test_momentum_sector_diagonalizes(self):
        tau = math.tanh(0.6) * 2 / math.sqrt(2)
        c = SectorCoefficients(2.0, 0.2, tau=tau, eps=1.5)
        sol = solve_case_Bnonzero(c, 1)
        assert sol.r == pytest.approx(-0.3)
        rep = verify_diagonal(DiagonalizationResult({1: sol}, 0.0), {1: c})
        assert rep.ok, rep.failures

    def test_beta_prime_leaves_d_term(self):
        # f7 = -beta' sinh(2r) e^{i Psi} / sqrt2 at Theta = 0
        tau = math.tanh(0.6) * 2 / math.sqrt(2)
        c = SectorCoefficients(2.0, 0.2, tau=tau, beta_prime=0.05, eps=1.5)
        sol = solve_case_Bnonzero(c, 1)
        assert abs(f_functions(1, c, sol.params).f7) == pytest.approx(0.05 * math.sinh(0.6) / math.sqrt(2))
        assert not verify_diagonal(DiagonalizationResult({1: sol}, 0.0), {1: c}).ok

    def test_wrong_parameters_detected(self):
        c = SectorCoefficients(2.0, 0.3, tau=1.0, eps=1.0)
        wrong = solve_case_Bnonzero(SectorCoefficients(2.0, 0.3, tau=0.5, eps=1.0), 0)
        rep = verify_diagonal(DiagonalizationResult({0: wrong}, 0.0), {0: c})
        assert not rep.ok


class TestSelfConsistency:
    def test_free_theory(self):
        res, _, _ = self_consistent_solve(PhysicalParams(k_max=1))
        assert res.iterations == 1
        assert res.sectors[0].energy == pytest.approx(2.0)
        assert res.e_star == pytest.approx(2.0)

    def test_weak_coupling(self):
        res, mv, coeffs = self_consistent_solve(WEAK, {0: CoherentParams(0.5)})
        assert res.residual < 1e-10
        assert abs(res.sectors[0].r) < 1e-8
        again = coefficients_from_means(WEAK, w_state_means(res.params(), WEAK.k_max))
        for q in coeffs:
            np.testing.assert_allclose(again[q].as_vector(), coeffs[q].as_vector(), atol=1e-8)
        assert verify_diagonal(res, coeffs).ok

    def test_damping_independent(self):
        a, _, _ = self_consistent_solve(WEAK, {0: CoherentParams(0.5)}, SolverOptions(damping=0.5))
        b, _, _ = self_consistent_solve(WEAK, {0: CoherentParams(0.5)}, SolverOptions(damping=1.0))
        for q in a.sectors:
            assert a.sectors[q].energy == pytest.approx(b.sectors[q].energy, abs=1e-7)

    def test_iteration_limit(self):
        with pytest.raises(IterationLimitError) as exc:
            self_consistent_solve(WEAK, {0: CoherentParams(0.5)}, SolverOptions(max_iter=2))
        assert exc.value.iterations == 2 and exc.value.residual > 0

    def test_strong_coupling_unstable(self):
        with pytest.raises(UnstableSectorError) as exc:
            self_consistent_solve(PhysicalParams.from_g2(5.0, B=0.3, k_max=2), {0: CoherentParams(0.5)})
        assert exc.value.sector == 0
