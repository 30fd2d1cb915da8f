import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from so32bec.boson import annihilate, mode
from so32bec.errors import CutoffTooSmallError, DomainError
from so32bec.fock import expectation, identity, lift, number_matrix
from so32bec.quadratic import quadratic_space
from so32bec.states import (
    TRANSFORM_NAMES,
    CoherentParams,
    DisplacementParams,
    MomentSet,
    closed_form_transform,
    brute_force_moments,
    closed_form_moments,
    dw_leakage,
    dw_state,
    exact_transform,
    sector_cfg,
    transformed_ladder,
    w_matrix,
    w_state,
)
from so32bec.verification import adjoint_transform_errors, transform_errors, transform_oracle

angles = st.floats(0, 2 * math.pi, allow_nan=False)
radii = st.floats(0.05, 0.5)

# oracle values: brute-force moments at cutoff 40, frozen
DW_POINT_NA = 1.271540317408
DW_POINT_NA2 = 3.505169874994


class TestW:
    def test_identity_at_zero(self):
        cfg = sector_cfg(0, 4)
        np.testing.assert_allclose(w_matrix(CoherentParams(), 0, cfg).toarray(), np.eye(cfg.dim), atol=1e-15)

    def test_unitary(self):
        cfg = sector_cfg(0, 16)
        w = w_matrix(CoherentParams(0.3, 0.4, 0.7, 1.1), 0, cfg)
        np.testing.assert_allclose((w.dag() @ w).toarray(), np.eye(cfg.dim), atol=1e-10)

    def test_gate(self):
        with pytest.raises(CutoffTooSmallError) as exc:
            w_matrix(CoherentParams(2.0), 0, sector_cfg(0, 4))
        assert exc.value.leakage > 0.01

    def test_pair_support(self):
        s = w_state(CoherentParams(0.5, 0.9), 0, sector_cfg(0, 14))
        occ = s.cfg.occupations
        off = occ[:, 0] != occ[:, 1]
        assert np.max(np.abs(s.data[off])) < 1e-14
        assert np.sum(np.abs(s.data[~off]) ** 2) == pytest.approx(1)

    def test_momentum_sector_state(self):
        s = w_state(CoherentParams(0.3, 0.2, 0.4, 0.1), 1, sector_cfg(1, 8))
        n = sum(number_matrix(m, s.cfg) for m in s.cfg.modes[1:]) + number_matrix(s.cfg.modes[0], s.cfg)
        assert expectation(s, n).real == pytest.approx(4 * math.sinh(0.3) ** 2, rel=1e-7)


class TestLadder:
    def test_zero(self):
        a, b = transformed_ladder(CoherentParams())
        assert tuple(a) == (1, 0, 0) and tuple(b) == (1, 0, 0)

    def test_theta_half_pi(self):
        r, psi, phi = 0.4, 0.3, 1.2
        a, _ = transformed_ladder(CoherentParams(r, psi, math.pi / 2, phi))
        assert abs(a.c1) < 1e-15
        assert a.c2 == pytest.approx(-np.exp(1j * (phi + psi)) * math.sinh(r))

    @given(radii, angles, angles, angles)
    def test_matches_adjoint_action(self, r, psi, theta, phi):
        v = CoherentParams(r, psi, theta, phi)
        qs = quadratic_space(0)
        from so32bec.states import w_generator

        a, b = transformed_ladder(v)
        for species, other, t in (("a", "b", a), ("b", "a", b)):
            x = qs.vector(annihilate(species, 0))
            y = qs.conjugate(w_generator(v, 0), x)
            want = t.c0 * x + t.c1 * qs.vector(annihilate(other, 0).dag()) + t.c2 * qs.vector(annihilate(species, 0).dag())
            np.testing.assert_allclose(y, want, atol=1e-12)

    def test_matches_fock_matrices(self):
        v = CoherentParams(0.5, 0.7, 0.6, 1.3)
        cfg = sector_cfg(0, 40)
        w = w_matrix(v, 0, cfg)
        lhs = (w.dag() @ lift(annihilate("a", 0), cfg) @ w).toarray()
        t, _ = transformed_ladder(v)
        a = lift(annihilate("a", 0), cfg)
        bd = lift(annihilate("b", 0).dag(), cfg)
        rhs = (a * t.c0 + bd * t.c1 + a.dag() * t.c2).toarray()
        low = np.all(cfg.occupations <= 4, axis=1)
        np.testing.assert_allclose(lhs[np.ix_(low, low)], rhs[np.ix_(low, low)], atol=1e-8)


class TestClosedFormTransforms:
    def test_r_zero_is_identity(self):
        for name in TRANSFORM_NAMES:
            out = closed_form_transform(name, CoherentParams(0.0, 0.3, 0.2, 0.1), 1)
            assert out == {name: pytest.approx(1.0)}

    def test_e3_theta_zero(self):
        r, psi = 0.4, 0.9
        out = closed_form_transform("E3", CoherentParams(r, psi), 0)
        assert out["E3"] == pytest.approx(math.cosh(2 * r))
        assert out["E+"] == pytest.approx(np.exp(1j * psi) * math.sinh(2 * r) / math.sqrt(2))
        assert set(out) == {"E3", "E+", "E-"}

    @pytest.mark.parametrize("q", [0, 1])
    @given(radii, angles, angles, angles)
    def test_working_forms_match_adjoint_action(self, q, r, psi, theta, phi):
        errs = adjoint_transform_errors(CoherentParams(r, psi, theta, phi), q)
        assert max(errs.values()) < 1e-10

    def test_printed_n_forms_differ(self):
        v = CoherentParams(0.5, 0.8, 0.6, 1.4)
        errs = adjoint_transform_errors(v, 1, form="printed")
        assert errs["N+"] > 1e-3 and errs["N3"] > 1e-3
        assert max(e for n, e in errs.items() if n[0] != "N") < 1e-10

    @pytest.mark.parametrize("q", [0, 1])
    def test_f3_against_oracle(self, q):
        v = CoherentParams(0.5, 2.1, 0.8, 0.3)
        errs = transform_errors(v, q, transform_oracle(v, q), names=["F3"])
        assert errs["F3"] < 1e-6

    def test_domain(self):
        with pytest.raises(DomainError):
            closed_form_transform("N3", CoherentParams(0.1), 0)
        with pytest.raises(DomainError):
            closed_form_transform("Q", CoherentParams(0.1), 1)

    def test_exact_transform_of_charge_is_invariant(self):
        out = exact_transform("Q", CoherentParams(0.4, 0.1, 0.2, 0.3), 1)
        assert out.pop("Q") == pytest.approx(1.0)
        assert all(abs(c) < 1e-12 for c in out.values())


class TestDWState:
    def test_vacuum(self):
        cfg = sector_cfg(0, 3)
        s = dw_state(CoherentParams(), DisplacementParams(), cfg)
        assert s.amplitude([0, 0]) == pytest.approx(1)

    def test_displacement_only(self):
        d = DisplacementParams(0.7, 0.4, 0.3, 1.0)
        m = brute_force_moments(dw_state(CoherentParams(), d, sector_cfg(0, 20)))
        assert m.na == pytest.approx(0.49) and m.nb == pytest.approx(0.16)

    def test_squeezed_vacuum(self):
        r = 0.5
        m = brute_force_moments(w_state(CoherentParams(r), 0, sector_cfg(0, 16)))
        assert m.na == pytest.approx(math.sinh(r) ** 2, rel=1e-9)

    def test_gate_on_displacement(self):
        with pytest.raises(CutoffTooSmallError):
            dw_state(CoherentParams(0.25), DisplacementParams.symmetric(2.0, 0.0), sector_cfg(0, 16))

    def test_combined_leakage_exceeds_factor_gate(self):
        v, d = CoherentParams(0.5), DisplacementParams.symmetric(1.0, 0.0)
        assert dw_leakage(v, d, sector_cfg(0, 16)) > 1e-8
        dw_state(v, d, sector_cfg(0, 16))


class TestMoments:
    def test_dw_point_closed_form(self):
        m = closed_form_moments(CoherentParams(0.5), DisplacementParams.symmetric(1.0, 0.0))
        assert m.na == pytest.approx(1.27154, abs=1e-5)
        assert m.na2 == pytest.approx(3.50517, abs=1e-5)

    def test_dw_point_frozen_oracle(self):
        m = closed_form_moments(CoherentParams(0.5), DisplacementParams.symmetric(1.0, 0.0))
        assert m.na == pytest.approx(DW_POINT_NA, abs=1e-9)
        assert m.na2 == pytest.approx(DW_POINT_NA2, abs=1e-9)

    @pytest.mark.parametrize("z, r", [(0.5, 0.25), (1.0, 0.5), (2.0, 0.5)])
    def test_closed_equals_oracle_theta_zero(self, z, r):
        v, d = CoherentParams(r, 0.4), DisplacementParams.symmetric(z, 0.2)
        oracle = brute_force_moments(dw_state(v, d, sector_cfg(0, 40)))
        np.testing.assert_allclose(closed_form_moments(v, d).as_array(), oracle.as_array(), atol=1e-8)

    def test_z_zero_cross_moment(self):
        r, theta = 0.4, 0.7
        m = closed_form_moments(CoherentParams(r, 0.1, theta, 0.3), DisplacementParams())
        want = math.sinh(r) ** 4 + math.cosh(r) ** 2 * math.sinh(r) ** 2 * math.cos(theta) ** 2
        assert m.nanb == pytest.approx(want)

    def test_theta_nonzero_second_moment_discrepancy(self):
        # squeezed vacuum with Theta != 0: <n_a^2> = 2 s^4 + s^2 + s^2 c^2 sin^2 Theta
        r, theta = 0.4, 0.9
        s2, c2 = math.sinh(r) ** 2, math.cosh(r) ** 2
        v = CoherentParams(r, 0.0, theta, 0.0)
        oracle = brute_force_moments(w_state(v, 0, sector_cfg(0, 30)))
        assert oracle.na2 == pytest.approx(2 * s2**2 + s2 + s2 * c2 * math.sin(theta) ** 2, rel=1e-9)
        closed = closed_form_moments(v, DisplacementParams())
        assert closed.na2 != pytest.approx(oracle.na2, rel=1e-3)

    def test_vacuum(self):
        m = brute_force_moments(dw_state(CoherentParams(), DisplacementParams(), sector_cfg(0, 3)))
        assert np.all(m.as_array() == 0)

    def test_coherent(self):
        m = brute_force_moments(dw_state(CoherentParams(), DisplacementParams(1.0, 0.0), sector_cfg(0, 24)))
        assert (m.na, m.na2) == (pytest.approx(1.0), pytest.approx(2.0))

    @given(radii, angles, angles, angles, st.floats(0, 1.5), angles)
    def test_variance_nonnegative(self, r, psi, theta, phi, z, delta):
        m = brute_force_moments(dw_state(CoherentParams(r, psi, theta, phi), DisplacementParams(z, z, delta, delta), sector_cfg(0, 22), gate=1e-6))
        assert m.var_a >= -1e-12 and m.var_b >= -1e-12


def test_momentset_variance():
    m = MomentSet(1.0, 2.0, 3.0, 5.0, 2.0)
    assert (m.var_a, m.var_b) == (2.0, 1.0)
