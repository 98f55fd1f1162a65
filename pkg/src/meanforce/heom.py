"""High-temperature hierarchical equations of motion for a Drude-Lorentz bath.

The bath correlation function is truncated to its single Drude pole,
``C(t) ~ (c_R + i c_I) exp(-gamma t)`` with ``c_R = 2 L / beta`` and
``c_I = -L gamma``, which is accurate while ``beta gamma < 1``. ADOs are
rescaled by ``sqrt(n! |c|^n)`` so every tier carries comparable norms:

    d r_n/dt = -(i H^x + n gamma) r_n
               - i sqrt((n+1)|c|) V^x r_{n+1}
               - i sqrt(n/|c|) (c_R V^x + i c_I V^o) r_{n-1}

with ``r_{K+1} = 0``. Propagation uses exact matrix exponentials of the
(small) hierarchy generator over each grid step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .bath import DrudeLorentzBath
from .errors import ConvergenceError, ValidityGateError
from .master_eq import Trajectory, anticommutator_super, commutator_super
from .operators import check_density_matrix, check_hermitian, hermitize, trace_distance

K_MAX = 40


@dataclass(frozen=True)
class Hierarchy:
    h_s: np.ndarray
    v: np.ndarray
    bath: DrudeLorentzBath
    beta: float
    depth: int
    generator: np.ndarray

    @property
    def dim(self) -> int:
        return self.h_s.shape[0]


def drude_pole_coefficients(bath: DrudeLorentzBath, beta: float) -> tuple[float, float]:
    return 2 * bath.reorg / beta, -bath.reorg * bath.cutoff


def build_hierarchy(h_s, v, bath: DrudeLorentzBath, beta: float, depth: int) -> Hierarchy:
    if not isinstance(bath, DrudeLorentzBath):
        raise TypeError("the hierarchy is defined for a Drude-Lorentz bath")
    if not beta > 0:
        raise ValueError("beta must be positive")
    if beta * bath.cutoff >= 1:
        raise ValidityGateError(
            f"high-temperature hierarchy needs beta*gamma < 1 (got {beta * bath.cutoff:g})"
        )
    if depth < 1:
        raise ValueError("hierarchy depth must be at least 1")
    h_s = hermitize(check_hermitian(h_s, name="H_S"))
    v = hermitize(check_hermitian(v, name="V"))
    d2 = h_s.shape[0] ** 2
    c_r, c_i = drude_pole_coefficients(bath, beta)
    mag = np.hypot(c_r, c_i)
    hx = commutator_super(h_s)
    vx = commutator_super(v)
    lower = c_r * vx + 1j * c_i * anticommutator_super(v)
    gen = np.zeros(((depth + 1) * d2,) * 2, dtype=complex)
    for n in range(depth + 1):
        s = slice(n * d2, (n + 1) * d2)
        gen[s, s] = -1j * hx - n * bath.cutoff * np.eye(d2)
        if mag == 0:
            continue
        if n < depth:
            gen[s, (n + 1) * d2:(n + 2) * d2] = -1j * np.sqrt((n + 1) * mag) * vx
        if n > 0:
            gen[s, (n - 1) * d2:n * d2] = -1j * np.sqrt(n / mag) * lower
    return Hierarchy(h_s, v, bath, beta, depth, gen)


def propagate_heom(h: Hierarchy, rho0, t_grid) -> Trajectory:
    """Reduced dynamics from a product initial state (all ADOs start at zero)."""
    rho0 = check_density_matrix(rho0, name="initial state")
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be a non-empty increasing sequence")
    d = h.dim
    y = np.zeros(h.generator.shape[0], dtype=complex)
    y[: d * d] = rho0.reshape(-1)
    states = np.empty((t.size, d, d), dtype=complex)
    states[0] = rho0
    cache = {}
    for i in range(1, t.size):
        dt = round(float(t[i] - t[i - 1]), 12)
        if dt not in cache:
            cache[dt] = expm(h.generator * dt)
        y = cache[dt] @ y
        if not np.all(np.isfinite(y)):
            raise ConvergenceError("hierarchy propagation produced non-finite values")
        states[i] = y[: d * d].reshape(d, d)
    states[1:] = 0.5 * (states[1:] + np.conj(np.swapaxes(states[1:], 1, 2)))
    return Trajectory(t, states)


def heom_steady_state(h: Hierarchy) -> np.ndarray:
    """Stationary physical state from the null vector of the full hierarchy."""
    _, s, vh = np.linalg.svd(h.generator)
    d = h.dim
    rho = vh[-1].conj()[: d * d].reshape(d, d)
    return hermitize(rho / np.trace(rho))


def max_trace_distance(a: Trajectory, b: Trajectory) -> float:
    return max(trace_distance(x, y) for x, y in zip(a.states, b.states))


def converge_depth(h_builder, rho0, t_grid, tol: float = 1e-6, k_max: int = K_MAX, k_start: int = 1):
    """Smallest depth ``K`` whose trajectory differs from depth ``K+2`` by less than ``tol``.

    ``h_builder(depth)`` must return a :class:`Hierarchy`. Returns ``(K, trajectory_K)``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    runs = {}

    def run(k):
        if k not in runs:
            runs[k] = propagate_heom(h_builder(k), rho0, t_grid)
        return runs[k]

    for k in range(k_start, k_max - 1):
        if max_trace_distance(run(k), run(k + 2)) < tol:
            return k, runs[k]
    raise ConvergenceError(f"hierarchy depth did not converge below K_max={k_max}")
