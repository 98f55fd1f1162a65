"""Numerically exact reference for a qubit coupled to one harmonic oscillator.

The oscillator is truncated to ``N`` levels and the total Gibbs operator is
built from a full diagonalization. ``N`` grows until a 50 % larger truncation
changes the reduced state by less than ``tol`` in trace distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bath import DiscreteBath
from .errors import ConvergenceError
from .operators import SIGMA_X, SIGMA_Z, hermitize, matrix_log_hermitian, trace_distance

DEFAULT_TOL = 1e-10
DEFAULT_N_MAX = 1000


def system_hamiltonian(eps: float = 1.0) -> np.ndarray:
    return 0.5 * eps * SIGMA_Z


def coupling_operator() -> np.ndarray:
    return (SIGMA_Z - SIGMA_X) / np.sqrt(2)


@dataclass(frozen=True)
class SingleOscillatorModel:
    eps: float = 1.0
    omega_osc: float = 1.5
    g: float = 1.0
    lam: float = 0.0
    n_levels: int | None = None

    def __post_init__(self):
        if self.omega_osc <= 0:
            raise ValueError("oscillator frequency must be positive")
        if self.n_levels is not None and self.n_levels < 2:
            raise ValueError("need at least two oscillator levels")

    @property
    def h_s(self) -> np.ndarray:
        return system_hamiltonian(self.eps)

    @property
    def couplings(self) -> list:
        return [coupling_operator()]

    @property
    def bath(self) -> DiscreteBath:
        return DiscreteBath.single_mode(self.omega_osc, self.g)


def ladder(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


def build_total_hamiltonian(model: SingleOscillatorModel, n_levels: int | None = None) -> np.ndarray:
    n = n_levels or model.n_levels or default_levels(model, 1.0)
    a = ladder(n)
    h_b = model.omega_osc * np.diag(np.arange(n)).astype(complex)
    h = np.kron(model.h_s, np.eye(n)) + np.kron(np.eye(2), h_b)
    h += model.lam * model.g * np.kron(coupling_operator(), a + a.conj().T)
    return hermitize(h)


def default_levels(model: SingleOscillatorModel, beta: float, tol: float = DEFAULT_TOL) -> int:
    """Thermal tail below ``tol`` plus room for the coupling-induced displacement."""
    thermal = math.ceil(math.log(1 / tol) / (beta * model.omega_osc))
    shift = math.ceil(2 * (model.lam * model.g / model.omega_osc) ** 2 + 8 * abs(model.lam * model.g / model.omega_osc))
    return max(20, thermal + shift + 10)


@dataclass(frozen=True)
class ExactEquilibrium:
    rho: np.ndarray
    h_mf: np.ndarray
    n_levels: int
    truncation_change: float


def _reduced(model, beta, n):
    h = build_total_hamiltonian(model, n)
    e, v = np.linalg.eigh(h)
    w = np.exp(-beta * (e - e[0]))
    v = v.reshape(2, n, 2 * n)
    num = hermitize(np.einsum("ijn,n,kjn->ik", v, w, v.conj()))
    log_zb = -np.log(-np.expm1(-beta * model.omega_osc)) + np.log(-np.expm1(-beta * model.omega_osc * n))
    return num, float(e[0]), log_zb


def exact_equilibrium(
    model: SingleOscillatorModel,
    beta: float,
    tol: float = DEFAULT_TOL,
    n_max: int = DEFAULT_N_MAX,
) -> ExactEquilibrium:
    if not beta > 0:
        raise ValueError("beta must be positive")
    n = model.n_levels or default_levels(model, beta, tol)
    while True:
        n_big = math.ceil(1.5 * n)
        if n_big > n_max:
            raise ConvergenceError(f"oscillator truncation did not converge below N_max={n_max}")
        num_a, _, _ = _reduced(model, beta, n)
        num_b, e0, log_zb = _reduced(model, beta, n_big)
        rho_a = num_a / np.trace(num_a).real
        rho_b = num_b / np.trace(num_b).real
        change = trace_distance(rho_a, rho_b)
        if change < tol:
            break
        n *= 2
    # H_MF = -(1/beta) ln(Tr_B e^{-beta H} / Z_B) with the shifted numerator
    h_mf = -matrix_log_hermitian(num_b) / beta + (e0 + log_zb / beta) * np.eye(2)
    return ExactEquilibrium(hermitize(rho_b), hermitize(h_mf), n_big, change)


def exact_mean_force_state(model, beta: float, tol: float = DEFAULT_TOL, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    return exact_equilibrium(model, beta, tol, n_max).rho


def exact_hmf(model, beta: float, tol: float = DEFAULT_TOL, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    return exact_equilibrium(model, beta, tol, n_max).h_mf


def fixed_truncation_state(model: SingleOscillatorModel, beta: float, n_levels: int) -> np.ndarray:
    """Reduced state at a given truncation, without the convergence loop."""
    num, _, _ = _reduced(replace(model, n_levels=n_levels), beta, n_levels)
    return num / np.trace(num).real
