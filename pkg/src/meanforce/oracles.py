"""Brute-force quadrature of the defining integrals.

These deliberately avoid the closed forms in :mod:`meanforce.bath` and exist to
cross-check them (tests and the ``validate`` command).
"""

from __future__ import annotations

import numpy as np
from scipy import integrate

from .bath import DrudeLorentzBath, corr_imag_time

_QOPTS = dict(epsabs=1e-14, epsrel=1e-12)


def _split(c: np.ndarray) -> np.ndarray:
    return np.concatenate([c.real.ravel(), c.imag.ravel()])


def _join(v: np.ndarray, n: int) -> np.ndarray:
    return (v[: n * n] + 1j * v[n * n :]).reshape(n, n)


def c_hat_quadrature(bath, beta: float, omega: float) -> np.ndarray:
    """``int_0^beta C(b') exp(b' omega) db'`` by adaptive quadrature."""
    n = bath.n_couplings
    val, _ = integrate.quad_vec(lambda b: _split(corr_imag_time(bath, beta, b) * np.exp(b * omega)), 0.0, beta, **_QOPTS)
    return _join(val, n)


def g_quadrature(bath, beta: float, omega: float, omega_prime: float) -> np.ndarray:
    """Nested adaptive quadrature of the ordered double integral for ``G``."""
    n = bath.n_couplings

    def inner(b1):
        f = lambda b2: _split(np.exp(b1 * omega_prime - b2 * omega) * corr_imag_time(bath, beta, b1 - b2))
        val, _ = integrate.quad_vec(f, 0.0, b1, **_QOPTS)
        return val

    val, _ = integrate.quad_vec(inner, 0.0, beta, **_QOPTS)
    return _join(val, n)


def _occupations(beta, x):
    with np.errstate(over="ignore"):
        n = 1.0 / np.expm1(beta * x)
    return n, n + 1.0


def drude_s_quadrature(bath: DrudeLorentzBath, beta: float, omega: float) -> float:
    """Principal-value integral for ``S(omega)`` on the real frequency axis."""
    J = bath.spectral_density
    if omega == 0.0:
        val, _ = integrate.quad(lambda x: -bath.reorg / np.pi * 2 * bath.cutoff / (x * x + bath.cutoff**2), 0, np.inf, **_QOPTS)
        return val

    def jn(x):
        if x == 0.0:
            return 2 * bath.reorg / (np.pi * bath.cutoff * beta)
        return float(J(x)) * _occupations(beta, x)[0]

    def jn1(x):
        if x == 0.0:
            return 2 * bath.reorg / (np.pi * bath.cutoff * beta)
        return float(J(x)) * _occupations(beta, x)[1]

    w = abs(omega)
    cut = 4 * w + 20 * bath.cutoff + 40 / beta
    # the pole sits in the (n+1) term for omega > 0 and in the n term otherwise
    polar, regular = (jn1, jn) if omega > 0 else (jn, jn1)
    pv, _ = integrate.quad(polar, 0, cut, weight="cauchy", wvar=w, limit=400, epsabs=1e-14, epsrel=1e-12)
    pv_tail, _ = integrate.quad(lambda x: polar(x) / (x - w), cut, np.inf, limit=400, **_QOPTS)
    reg, _ = integrate.quad(lambda x: regular(x) / (x + w), 0, np.inf, limit=400, **_QOPTS)
    if omega > 0:
        return reg - (pv + pv_tail)
    return (pv + pv_tail) - reg


def drude_gamma_real(bath: DrudeLorentzBath, beta: float, omega: float) -> float:
    """``Re Gamma(omega) = pi J(omega) (n(omega) + 1)`` extended to omega <= 0."""
    if omega == 0.0:
        return 2 * bath.reorg / (beta * bath.cutoff)
    return float(np.pi * bath.spectral_density(omega) * (1.0 / np.expm1(beta * omega) + 1.0))


def tcl2_trajectory(h_s, v, bath: DrudeLorentzBath, beta: float, rho0, t_grid):
    """Time-local second-order dynamics with the single-pole high-temperature kernel.

    Uses the same correlation function as the hierarchy, with the half-sided
    transform cut at the current time, ``c (1 - exp(-(gamma - i w) t)) / (gamma - i w)``.
    Agrees with the hierarchy to second order in the reorganization energy,
    including the initial slip that a Markovian generator misses.
    """
    from .heom import drude_pole_coefficients
    from .master_eq import Trajectory, _assemble
    from .operators import bohr_decompose, spectral_decompose

    h_s = np.asarray(h_s, dtype=complex)
    bohr = bohr_decompose(spectral_decompose(h_s), [np.asarray(v, dtype=complex)])
    w = bohr.frequencies
    c_r, c_i = drude_pole_coefficients(bath, beta)
    c = c_r + 1j * c_i
    z = bath.cutoff - 1j * w

    def generator(t):
        big = (c * -np.expm1(-z * t) / z)[:, None, None]
        gamma = big[:, None] + np.conj(np.swapaxes(big, 1, 2))[None, :]
        lamb = (big[:, None] - np.conj(np.swapaxes(big, 1, 2))[None, :]) / 2j
        return _assemble(h_s, bohr, gamma, lamb, "full")[3]

    t = np.asarray(t_grid, dtype=float)
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    sol = integrate.solve_ivp(lambda s, y: generator(s) @ y, (t[0], t[-1]), rho0.reshape(-1),
                              t_eval=t, method="DOP853", rtol=1e-10, atol=1e-12)
    return Trajectory(t, sol.y.T.reshape(-1, d, d))
