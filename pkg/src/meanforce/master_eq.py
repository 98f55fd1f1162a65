"""Bloch-Redfield master equations with a selectable reference Hamiltonian.

The generator is written in the GKLS-like form

    d rho/dt = -i[H_ref + H_LS, rho]
               + sum gamma_{mu nu}(w, w') (A_{nu w} rho A_{mu w'}^+ - {A_{mu w'}^+ A_{nu w}, rho}/2)

with ``gamma(w, w') = Gamma(w) + Gamma^*(w')`` and the Lamb shift built from
``(Gamma(w) - Gamma^*(w'))/2i``. Eigenoperators and Bohr frequencies are
taken with respect to ``H_ref``; passing a Hamiltonian of mean force instead
of ``H_S`` gives the refined equation.

Superoperators act on row-major vectorized density matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .bath import DrudeLorentzBath, gamma_half_fourier, reorg_moments
from .errors import ConvergenceError, DegeneracyError, MeanForceError, NotHermitianError, ValidityGateError
from .mean_force import (
    hmf_exponential,
    hmf_from_reduced_numerator,
    hmf_high_temperature,
    hmf_weak,
    mfg_numerator,
    pair_sum,
)
from .operators import (
    BohrDecomposition,
    bohr_decompose,
    check_density_matrix,
    check_hermitian,
    dagger,
    hermitian_defect,
    hermitize,
    spectral_decompose,
)

MODES = ("full", "secular")
REFINEMENTS = ("bare", "weak", "exponential", "high_t", "mfg_numerator")
RTOL = 1e-8
ATOL = 1e-10


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    def populations(self, level: int = 1) -> np.ndarray:
        return self.states[:, level, level].real

    def coherences(self, i: int = 0, j: int = 1) -> np.ndarray:
        return np.abs(self.states[:, i, j])


@dataclass(frozen=True)
class RedfieldGenerator:
    h_ref: np.ndarray
    h_ls: np.ndarray
    bohr: BohrDecomposition
    gamma: np.ndarray
    lamb: np.ndarray
    mode: str
    refined_with: str
    beta: float
    liouvillian: np.ndarray

    @property
    def rates(self) -> dict:
        """``{((mu, w), (nu, w')): gamma_{mu nu}(w, w')}`` for the retained terms."""
        w = self.bohr.frequencies
        out = {}
        for k in range(len(w)):
            for l in range(len(w)):
                if self.mode == "secular" and k != l:
                    continue
                for mu in range(self.gamma.shape[2]):
                    for nu in range(self.gamma.shape[3]):
                        out[((mu, float(w[k])), (nu, float(w[l])))] = complex(self.gamma[k, l, mu, nu])
        return out

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = rho.shape[0]
        return (self.liouvillian @ rho.reshape(-1)).reshape(d, d)


def commutator_super(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0])
    return np.kron(h, eye) - np.kron(eye, h.T)


def anticommutator_super(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0])
    return np.kron(h, eye) + np.kron(eye, h.T)


def gamma_matrix(bath, beta: float, omega: float) -> np.ndarray:
    if not isinstance(bath, DrudeLorentzBath):
        raise TypeError(
            "Bloch-Redfield rates need a continuum bath; the half-Fourier transform "
            "does not converge for a finite set of modes"
        )
    return np.array([[gamma_half_fourier(bath, beta, omega)]])


def _assemble(h_ref, bohr, gamma, lamb, mode):
    n = len(bohr.frequencies)
    if mode == "secular":
        mask = np.eye(n, dtype=bool)[:, :, None, None]
        gamma = np.where(mask, gamma, 0)
        lamb = np.where(mask, lamb, 0)
    h_ls = pair_sum(bohr, lamb)
    if hermitian_defect(h_ls) > 1e-10:
        raise NotHermitianError("Lamb-shift Hamiltonian is not Hermitian")
    h_ls = hermitize(h_ls)
    d = h_ref.shape[0]
    eye = np.eye(d)
    L = -1j * commutator_super(h_ref + h_ls)
    blocks = bohr.blocks
    for k in range(n):
        for l in range(n):
            for mu in range(blocks.shape[0]):
                for nu in range(blocks.shape[0]):
                    c = gamma[k, l, mu, nu]
                    if c == 0:
                        continue
                    a = blocks[nu, k]
                    bdag = dagger(blocks[mu, l])
                    prod = bdag @ a
                    L += c * (np.kron(a, bdag.T) - 0.5 * np.kron(prod, eye) - 0.5 * np.kron(eye, prod.T))
    return gamma, lamb, h_ls, L


def _check_superoperator(L, d, rng_seed=7):
    """Trace and Hermiticity preservation on a few Hermitian probes."""
    rng = np.random.default_rng(rng_seed)
    scale = max(1.0, np.max(np.abs(L)))
    for _ in range(3):
        x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        x = x + dagger(x)
        y = (L @ x.reshape(-1)).reshape(d, d)
        if abs(np.trace(y)) > 1e-10 * scale * np.max(np.abs(x)):
            raise MeanForceError("generator does not preserve the trace")
        if np.max(np.abs(y - dagger(y))) > 1e-10 * scale * np.max(np.abs(x)):
            raise MeanForceError("generator does not preserve Hermiticity")


def build_redfield(
    h_ref,
    couplings,
    bath,
    beta: float,
    mode: str = "full",
    refined_with: str = "bare",
) -> RedfieldGenerator:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if refined_with not in REFINEMENTS:
        raise ValueError(f"refined_with must be one of {REFINEMENTS}")
    if not beta > 0:
        raise ValueError("beta must be positive")
    h_ref = check_hermitian(h_ref, 1e-10, name="reference Hamiltonian")
    couplings = [check_hermitian(a, name=f"A_{i}") for i, a in enumerate(couplings)]
    if len(couplings) != bath.n_couplings:
        raise ValueError(f"bath describes {bath.n_couplings} coupling(s), got {len(couplings)}")
    h_ref = hermitize(h_ref)
    bohr = bohr_decompose(spectral_decompose(h_ref), couplings)
    w = bohr.frequencies
    big = np.array([gamma_matrix(bath, beta, x) for x in w])
    gamma = big[:, None] + np.conj(np.swapaxes(big, 1, 2))[None, :]
    lamb = (big[:, None] - np.conj(np.swapaxes(big, 1, 2))[None, :]) / 2j
    gamma, lamb, h_ls, L = _assemble(h_ref, bohr, gamma, lamb, mode)
    _check_superoperator(L, h_ref.shape[0])
    return RedfieldGenerator(h_ref, h_ls, bohr, gamma, lamb, mode, refined_with, beta, L)


def secularize(gen: RedfieldGenerator) -> RedfieldGenerator:
    """Drop every ``w != w'`` term from both the dissipator and the Lamb shift."""
    if gen.mode == "secular":
        return gen
    gamma, lamb, h_ls, L = _assemble(gen.h_ref, gen.bohr, gen.gamma, gen.lamb, "secular")
    return replace(gen, gamma=gamma, lamb=lamb, h_ls=h_ls, mode="secular", liouvillian=L)


def steady_state(gen: RedfieldGenerator, null_tol: float = 1e-9, residual_tol: float = 1e-10) -> np.ndarray:
    """Unique stationary state from the smallest right singular vector of the Liouvillian."""
    L = gen.liouvillian
    d = gen.h_ref.shape[0]
    _, s, vh = np.linalg.svd(L)
    if len(s) > 1 and s[-2] <= null_tol * max(1.0, s[0]):
        raise DegeneracyError(f"stationary state is not unique (second-smallest singular value {s[-2]:.2e})")
    rho = vh[-1].conj().reshape(d, d)
    rho = hermitize(rho / np.trace(rho))
    residual = np.linalg.norm(L @ rho.reshape(-1))
    if residual > residual_tol:
        raise ConvergenceError(f"steady-state residual {residual:.2e} exceeds {residual_tol:.0e}")
    return rho


def propagate(gen: RedfieldGenerator, rho0, t_grid) -> Trajectory:
    """Integrate the master equation with an adaptive 8th-order Runge-Kutta scheme."""
    rho0 = check_density_matrix(rho0, name="initial state")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be a non-empty increasing sequence")
    d = rho0.shape[0]
    L = gen.liouvillian
    if t.size == 1:
        return Trajectory(t, rho0[None].copy())
    sol = solve_ivp(lambda _t, y: L @ y, (t[0], t[-1]), rho0.reshape(-1).astype(complex),
                    method="DOP853", t_eval=t, rtol=RTOL, atol=ATOL)
    if not sol.success:
        raise ConvergenceError(f"integrator failed: {sol.message}")
    states = sol.y.T.reshape(-1, d, d)
    states = 0.5 * (states + np.conj(np.swapaxes(states, 1, 2)))
    return Trajectory(t, states)


def reference_hamiltonian(kind: str, h_s, couplings, bath, beta: float) -> np.ndarray:
    """Hamiltonian used to build a refined generator; ``bare`` returns ``h_s``."""
    try:
        if kind == "bare":
            return np.asarray(h_s, dtype=complex)
        if kind == "weak":
            return hmf_weak(h_s, couplings, bath, beta, 1.0).h_mf
        if kind == "exponential":
            return hmf_exponential(h_s, couplings, bath, beta, 1.0).h_mf
        if kind == "mfg_numerator":
            num, shift = mfg_numerator(h_s, couplings, bath, beta, 1.0)
            return hmf_from_reduced_numerator(num, beta, shift)
        if kind == "high_t":
            variant = "single_coupling" if len(couplings) == 1 else "general"
            return hmf_high_temperature(h_s, couplings, reorg_moments(bath), beta, variant).h_mf
    except MeanForceError as exc:
        raise ValidityGateError(f"could not build the {kind} Hamiltonian of mean force: {exc}") from exc
    raise ValueError(f"unknown refinement {kind!r}")
