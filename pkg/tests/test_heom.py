import numpy as np
import pytest

from meanforce.bath import DrudeLorentzBath
from meanforce.errors import ConvergenceError, ValidityGateError
from meanforce.heom import (
    build_hierarchy,
    converge_depth,
    drude_pole_coefficients,
    heom_steady_state,
    max_trace_distance,
    propagate_heom,
)
from meanforce.master_eq import build_redfield, propagate
from meanforce.operators import hermitian_defect
from meanforce.oracles import tcl2_trajectory

from conftest import loglog_slope

T50 = np.linspace(0, 50, 501)


def builder(qubit, reorg, beta):
    hs, a = qubit
    bath = DrudeLorentzBath(reorg, 0.5)
    return lambda depth: build_hierarchy(hs, a, bath, beta, depth)


class TestBuild:
    def test_gate(self, qubit):
        hs, a = qubit
        with pytest.raises(ValidityGateError, match="beta\\*gamma"):
            build_hierarchy(hs, a, DrudeLorentzBath(0.1, 0.5), 2.0, 4)

    def test_depth(self, qubit):
        hs, a = qubit
        with pytest.raises(ValueError):
            build_hierarchy(hs, a, DrudeLorentzBath(0.1, 0.5), 1.0, 0)

    def test_pole_coefficients(self):
        c_r, c_i = drude_pole_coefficients(DrudeLorentzBath(0.1, 0.5), 0.5)
        assert (c_r, c_i) == pytest.approx((0.4, -0.05))

    def test_uncoupled_is_unitary(self, qubit):
        hs, _ = qubit
        psi = np.array([1, 1]) / np.sqrt(2)
        rho0 = np.outer(psi, psi).astype(complex)
        traj = propagate_heom(builder(qubit, 0.0, 0.5)(3), rho0, np.linspace(0, 5, 11))
        for t, s in zip(traj.times, traj.states):
            u = np.diag(np.exp(-1j * np.diag(hs) * t))
            np.testing.assert_allclose(s, u @ rho0 @ u.conj().T, atol=1e-12)


class TestPropagate:
    def test_initial_state_returned(self, qubit, excited):
        traj = propagate_heom(builder(qubit, 0.1, 0.5)(4), excited, T50)
        np.testing.assert_array_equal(traj.states[0], excited)

    @pytest.mark.parametrize("reorg,beta", [(0.1, 0.5), (0.4, 1.0)])
    def test_trace_and_hermiticity(self, qubit, excited, reorg, beta):
        _, traj = converge_depth(builder(qubit, reorg, beta), excited, T50)
        assert np.max(np.abs(np.trace(traj.states, axis1=1, axis2=2) - 1)) < 1e-7
        assert max(hermitian_defect(s) for s in traj.states) < 1e-8

    @pytest.mark.parametrize("reorg,beta", [(0.1, 0.5), (0.1, 1.0), (0.4, 0.5), (0.4, 1.0)])
    def test_population_relaxes_monotonically(self, qubit, excited, reorg, beta):
        _, traj = converge_depth(builder(qubit, reorg, beta), excited, T50)
        assert np.all(np.diff(traj.populations()) <= 1e-12)

    def test_weak_limit_follows_time_local_second_order(self, qubit, excited):
        hs, a = qubit
        t = np.linspace(0, 10, 101)
        reorgs = [0.0005, 0.001, 0.002]
        d = []
        for r in reorgs:
            bath = DrudeLorentzBath(r, 0.5)
            heom = propagate_heom(build_hierarchy(hs, a, bath, 0.5, 4), excited, t)
            d.append(max_trace_distance(heom, tcl2_trajectory(hs, a, bath, 0.5, excited, t)))
        assert loglog_slope(reorgs, d) == pytest.approx(2.0, abs=0.15)

    def test_markovian_gap_is_first_order(self, qubit, excited):
        # the initial-slip offset between hierarchy and Bloch-Redfield is linear in the reorganization energy
        hs, a = qubit
        reorgs = [0.001, 0.003, 0.01]
        d = []
        for r in reorgs:
            bath = DrudeLorentzBath(r, 0.5)
            heom = propagate_heom(build_hierarchy(hs, a, bath, 0.5, 6), excited, T50)
            d.append(max_trace_distance(heom, propagate(build_redfield(hs, [a], bath, 0.5), excited, T50)))
        assert loglog_slope(reorgs, d) == pytest.approx(1.0, abs=0.25)


class TestConvergence:
    def test_uncoupled_converges_at_once(self, qubit, excited):
        k, _ = converge_depth(builder(qubit, 0.0, 0.5), excited, T50)
        assert k == 1

    @pytest.mark.parametrize("reorg,beta", [(0.1, 0.5), (0.4, 1.0)])
    def test_self_convergence(self, qubit, excited, reorg, beta):
        build = builder(qubit, reorg, beta)
        k, traj = converge_depth(build, excited, T50)
        assert max_trace_distance(traj, propagate_heom(build(k + 2), excited, T50)) < 1e-6
        assert max_trace_distance(propagate_heom(build(k - 1), excited, T50),
                                  propagate_heom(build(k + 1), excited, T50)) >= 1e-6

    def test_k_max(self, qubit, excited):
        with pytest.raises(ConvergenceError, match="K_max"):
            converge_depth(builder(qubit, 0.4, 0.5), excited, T50, k_max=6)

    def test_tol_positive(self, qubit, excited):
        with pytest.raises(ValueError):
            converge_depth(builder(qubit, 0.1, 0.5), excited, T50, tol=0.0)


class TestSteadyState:
    @pytest.mark.parametrize("beta", [0.5, 1.0])
    def test_weak_coupling_limit(self, qubit, beta):
        # the single-pole kernel has rate ratio (2/beta - w)/(2/beta + w) instead of exp(-beta w)
        r = (2 / beta - 1) / (2 / beta + 1)
        dev = [abs(heom_steady_state(builder(qubit, lam, beta)(8))[1, 1].real - r / (1 + r)) for lam in (1e-4, 1e-3)]
        assert dev[1] < 1e-3 and loglog_slope([1e-4, 1e-3], dev) == pytest.approx(1.0, abs=0.1)

    def test_long_time_limit(self, qubit, excited):
        build = builder(qubit, 0.4, 0.5)
        k, traj = converge_depth(build, excited, T50)
        ss = heom_steady_state(build(k))
        assert np.trace(ss) == pytest.approx(1.0)
        assert np.max(np.abs(traj.states[-1] - ss)) < 1e-3
