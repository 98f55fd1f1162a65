import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meanforce.bath import DiscreteBath, reorg_moments
from meanforce.errors import DegeneracyError, NotPositiveError, ValidityGateError
from meanforce.exact import SingleOscillatorModel, exact_equilibrium
from meanforce.mean_force import (
    _prepare,
    dissipator_superoperator,
    hmf_exponential,
    hmf_from_reduced_numerator,
    hmf_high_temperature,
    hmf_second_order,
    hmf_weak,
    mfg_numerator,
    mfg_weak,
    semigroup_map,
    state_from_hmf,
)
from meanforce.operators import (
    SIGMA_X,
    SIGMA_Z,
    commutator,
    gibbs_state,
    hermitian_defect,
    matrix_exp_hermitian,
    trace_distance,
)

from conftest import loglog_slope, random_hermitian

LAMS = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
MODEL = SingleOscillatorModel()
HS, COUPLINGS, BATH = MODEL.h_s, MODEL.couplings, MODEL.bath


def weak_args(lam, beta=1.0):
    return HS, COUPLINGS, BATH, beta, lam


class TestMfgWeak:
    def test_zero_coupling_is_gibbs(self):
        np.testing.assert_allclose(mfg_weak(*weak_args(0.0)), gibbs_state(HS, 1.0), atol=1e-15)

    def test_order_against_exact(self):
        d = [trace_distance(exact_equilibrium(SingleOscillatorModel(lam=lam), 1.0).rho, mfg_weak(*weak_args(lam)))
             for lam in LAMS]
        assert loglog_slope(LAMS, d) == pytest.approx(4.0, abs=0.3)

    def test_commuting_coupling_stays_diagonal(self):
        rho = mfg_weak(HS, [SIGMA_Z], BATH, 1.0, 0.3)
        assert abs(rho[0, 1]) < 1e-14

    def test_unit_trace(self):
        assert np.trace(mfg_weak(*weak_args(0.4))).real == pytest.approx(1.0, abs=1e-14)

    def test_expanded_normalization_agrees_to_fourth_order(self):
        d = [np.max(np.abs(mfg_weak(*weak_args(lam)) - mfg_weak(*weak_args(lam), normalization="expanded")))
             for lam in LAMS[1:]]
        assert loglog_slope(LAMS[1:], d) > 3.7

    def test_not_psd_is_reported(self):
        hs = np.diag([-0.77, 0.42, 0.86]).astype(complex)
        a = np.array([[1.29, -0.52 + 0.41j, 0.48 - 0.59j],
                      [-0.52 - 0.41j, 1.57, -0.09 + 1.03j],
                      [0.48 + 0.59j, -0.09 - 1.03j, 1.03]])
        with pytest.raises(NotPositiveError, match="perturbative"):
            mfg_weak(hs, [a], DiscreteBath.single_mode(5.3, 1.0), 2.0, 3.0)

    def test_bad_normalization(self):
        with pytest.raises(ValueError):
            mfg_weak(*weak_args(0.1), normalization="other")

    def test_coupling_count_checked(self):
        with pytest.raises(ValueError, match="coupling"):
            mfg_weak(HS, COUPLINGS * 2, BATH, 1.0, 0.1)


class TestHmfWeak:
    def test_zero_coupling(self):
        res = hmf_weak(*weak_args(0.0))
        np.testing.assert_allclose(res.h_mf, HS)
        assert res.z_mf == pytest.approx(1.0)

    def test_hermitian(self):
        assert hermitian_defect(hmf_weak(*weak_args(0.5, 2.0)).h_mf) < 1e-9

    def test_state_matches_mfg_to_fourth_order(self):
        d = [trace_distance(state_from_hmf(hmf_weak(*weak_args(lam)).h_mf, 1.0), mfg_weak(*weak_args(lam)))
             for lam in LAMS]
        assert loglog_slope(LAMS, d) >= 3.7

    def test_diagonal_part_commutes_with_system(self):
        _, bohr, table = _prepare(HS, COUPLINGS, BATH, 1.0)
        assert np.max(np.abs(commutator(HS, hmf_second_order(bohr, table, 1.0, "diagonal")))) < 1e-9

    def test_offdiagonal_part_shifts_eigenvalues_at_fourth_order(self):
        _, bohr, table = _prepare(HS, COUPLINGS, BATH, 1.0)
        off = hmf_second_order(bohr, table, 1.0, "offdiagonal")
        d = []
        for lam in LAMS:
            h = hmf_weak(*weak_args(lam)).h_mf
            d.append(np.max(np.abs(np.linalg.eigvalsh(h) - np.linalg.eigvalsh(h - lam**2 * off))))
        assert loglog_slope(LAMS, d) == pytest.approx(4.0, abs=0.3)

    def test_partition_ratio(self):
        res = hmf_weak(*weak_args(0.2))
        z_s = np.sum(np.exp(-np.linalg.eigvalsh(HS)))
        assert res.z_mf == pytest.approx(np.sum(np.exp(-np.linalg.eigvalsh(res.h_mf))) / z_s, rel=1e-12)

    def test_unknown_part(self):
        _, bohr, table = _prepare(HS, COUPLINGS, BATH, 1.0)
        with pytest.raises(ValueError):
            hmf_second_order(bohr, table, 1.0, "upper")

    @given(st.integers(0, 2**32 - 1), st.floats(0.2, 3.0))
    @settings(max_examples=15, deadline=None)
    def test_hermitian_random_systems(self, seed, beta):
        rng = np.random.default_rng(seed)
        hs = random_hermitian(rng, 3)
        couplings = [random_hermitian(rng, 3) for _ in range(2)]
        bath = DiscreteBath(np.array([3.7, 9.1]), rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
        spread = np.ptp(np.linalg.eigvalsh(hs))
        if spread > 3.5:  # keep Bohr frequencies clear of the modes
            hs = hs * 3.0 / spread
        assert hermitian_defect(hmf_weak(hs, couplings, bath, beta, 0.2).h_mf) < 1e-9


class TestExponential:
    def test_zero_coupling(self):
        form = hmf_exponential(*weak_args(0.0))
        np.testing.assert_allclose(form.hs_prime, HS)
        np.testing.assert_allclose(form.h_mf, HS)
        assert np.all(form.r == 0)

    def test_close_to_direct_form(self):
        d = [np.max(np.abs(hmf_exponential(*weak_args(lam)).h_mf - hmf_weak(*weak_args(lam)).h_mf)) for lam in LAMS]
        assert loglog_slope(LAMS, d) >= 3.7

    def test_spectrum_of_shifted_hamiltonian(self):
        form = hmf_exponential(*weak_args(0.4))
        np.testing.assert_allclose(np.linalg.eigvalsh(form.h_mf), np.linalg.eigvalsh(form.hs_prime), atol=1e-12)
        assert hermitian_defect(form.r) < 1e-9

    def test_multiplicity_change_rejected(self):
        # a degenerate level split by the diagonal correction
        hs = np.diag([0.0, 0.0, 1.0]).astype(complex)
        a = np.array([[1, 0, 0.3], [0, -1, 0.2], [0.3, 0.2, 0.5]], dtype=complex)
        with pytest.raises(DegeneracyError, match="multiplicities"):
            hmf_exponential(hs, [a], BATH, 1.0, 0.5)
        hmf_weak(hs, [a], BATH, 1.0, 0.5)  # the direct form proceeds


class TestHighTemperature:
    MOMENTS = reorg_moments(BATH.scaled(0.5))

    @pytest.mark.parametrize("variant", ["general", "semigroup", "single_coupling"])
    def test_infinite_temperature_limit(self, variant):
        lam = self.MOMENTS[0].real
        expect = HS - lam[0, 0] * COUPLINGS[0] @ COUPLINGS[0]
        h = hmf_high_temperature(HS, COUPLINGS, self.MOMENTS, 1e-9, variant).h_mf
        np.testing.assert_allclose(h, expect, atol=1e-8)

    def test_general_vs_semigroup_second_order(self):
        betas = [0.4, 0.2, 0.1, 0.05]
        d = [np.max(np.abs(hmf_high_temperature(HS, COUPLINGS, self.MOMENTS, b, "general").h_mf
                           - hmf_high_temperature(HS, COUPLINGS, self.MOMENTS, b, "semigroup").h_mf)) for b in betas]
        assert loglog_slope(betas, d) == pytest.approx(2.0, abs=0.2)

    def test_single_coupling_suppresses_offdiagonal(self):
        vals, vecs = np.linalg.eigh(COUPLINGS[0])
        prev = np.inf
        for reorg in (0.5, 5.0, 50.0):
            h = hmf_high_temperature(HS, COUPLINGS, (np.array([[reorg]]), np.array([[0.0]])), 1.0, "single_coupling").h_mf
            off = abs((vecs.conj().T @ h @ vecs)[0, 1])
            assert off < prev
            prev = off
        assert prev < 1e-8

    def test_single_coupling_formula(self):
        h = hmf_high_temperature(HS, [SIGMA_X], (np.array([[0.3]]), np.array([[0.0]])), 2.0, "single_coupling").h_mf
        # in the sigma_x eigenbasis H_S is purely off-diagonal, so only the damping acts
        expect = -0.3 * np.eye(2) + 0.5 * np.exp(-2.0 * 0.3 * 4 / 6) * SIGMA_Z
        np.testing.assert_allclose(h, expect, atol=1e-14)

    def test_single_coupling_degenerate(self):
        with pytest.raises(DegeneracyError):
            hmf_high_temperature(HS, [np.eye(2)], self.MOMENTS, 1.0, "single_coupling")

    def test_pointer_basis(self):
        p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        lam = np.diag([0.2, 0.4])
        hs = HS + 0.3 * SIGMA_X
        h = hmf_high_temperature(hs, [p0, p1], (lam, np.zeros((2, 2))), 1.5, "pointer_basis").h_mf
        expect = np.array([[-0.5 - 0.2, 0.3 * np.exp(-1.5 * 0.6 / 6)], [0.3 * np.exp(-1.5 * 0.6 / 6), 0.5 - 0.4]])
        np.testing.assert_allclose(h, expect, atol=1e-14)

    def test_pointer_basis_matches_general_at_first_order(self):
        p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        lam = np.diag([0.2, 0.4])
        hs = HS + 0.3 * SIGMA_X
        d = []
        betas = [0.2, 0.1, 0.05]
        for b in betas:
            a = hmf_high_temperature(hs, [p0, p1], (lam, np.zeros((2, 2))), b, "pointer_basis").h_mf
            g = hmf_high_temperature(hs, [p0, p1], (lam, np.zeros((2, 2))), b, "general").h_mf
            d.append(np.max(np.abs(a - g)))
        assert loglog_slope(betas, d) > 1.8

    def test_pointer_basis_needs_diagonal_coupling(self):
        p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        with pytest.raises(ValidityGateError):
            hmf_high_temperature(HS, [p0, p1], (np.full((2, 2), 0.1), np.zeros((2, 2))), 1.0, "pointer_basis")
        with pytest.raises(ValidityGateError):
            hmf_high_temperature(HS, [SIGMA_X, p1], (np.diag([0.1, 0.1]), np.zeros((2, 2))), 1.0, "pointer_basis")

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            hmf_high_temperature(HS, COUPLINGS, self.MOMENTS, 1.0, "fancy")

    def test_accuracy_improves_at_high_temperature(self):
        lam = np.sqrt(0.2 * 1.5)
        moments = reorg_moments(BATH.scaled(lam))
        betas = [0.05, 0.1, 0.2, 0.4]
        d = [trace_distance(exact_equilibrium(SingleOscillatorModel(lam=lam), b).rho,
                            state_from_hmf(hmf_high_temperature(HS, COUPLINGS, moments, b, "single_coupling").h_mf, b))
             for b in betas]
        assert loglog_slope(betas, d) >= 2.7

    def test_semigroup_map_preserves_hermiticity(self, rng):
        couplings = [random_hermitian(rng, 3) for _ in range(2)]
        x = random_hermitian(rng, 3)
        lam = np.array([[0.5, 0.1], [0.1, 0.3]])
        assert hermitian_defect(semigroup_map(couplings, lam, 0.7, x)) < 1e-10

    def test_dissipator_trace_preserving(self, rng):
        couplings = [random_hermitian(rng, 3)]
        sup = dissipator_superoperator(couplings, np.array([[0.7]]))
        y = (sup @ random_hermitian(rng, 3).reshape(-1)).reshape(3, 3)
        assert abs(np.trace(y)) < 1e-12


class TestNumerator:
    def test_gibbs_numerator(self):
        for beta in (1.0, 2.0):
            np.testing.assert_allclose(hmf_from_reduced_numerator(matrix_exp_hermitian(HS, -beta), beta), HS, atol=1e-14)

    def test_weak_numerator_matches_exact(self):
        d = []
        for lam in LAMS[2:]:
            num, shift = mfg_numerator(*weak_args(lam))
            h = hmf_from_reduced_numerator(num, 1.0, shift)
            d.append(np.max(np.abs(h - exact_equilibrium(SingleOscillatorModel(lam=lam), 1.0).h_mf)))
        assert loglog_slope(LAMS[2:], d) == pytest.approx(4.0, abs=0.3)

    def test_numerator_hmf_matches_weak_hmf(self):
        d = []
        for lam in LAMS:
            num, shift = mfg_numerator(*weak_args(lam))
            d.append(np.max(np.abs(hmf_from_reduced_numerator(num, 1.0, shift) - hmf_weak(*weak_args(lam)).h_mf)))
        assert loglog_slope(LAMS, d) >= 3.7

    def test_non_positive(self):
        with pytest.raises(NotPositiveError):
            hmf_from_reduced_numerator(np.diag([1.0, -0.1]), 1.0)


def test_state_from_hmf_is_gibbs():
    np.testing.assert_allclose(state_from_hmf(HS, 1.0), gibbs_state(HS, 1.0))
