"""Harmonic baths and their thermal coefficient functions.

Two bath descriptions are supported:

``DiscreteBath``
    A finite list of modes ``w_xi`` with complex couplings ``g[mu, xi]`` to each
    system operator ``A_mu``. Every frequency integral collapses to a mode sum.
``DrudeLorentzBath``
    The overdamped continuum ``J(w) = (L/pi) 2 w g / (w^2 + g^2)`` attached to
    a single coupling operator. Half-Fourier transforms of the real-time
    correlation function are summed over Matsubara poles in closed form.

Matrix-valued coefficients are indexed ``[mu, nu]`` and follow
``J_{mu nu}(w) = sum_xi conj(g_{mu xi}) g_{nu xi} delta(w - w_xi)``.

Coefficients implemented here (``n`` is the Bose-Einstein occupation)::

    C(b')    = int J (n+1) e^{-b' w} + J^T n e^{b' w}
    S(w)     = PV int J^T n / (w1 + w) - J (n+1) / (w1 - w)
    Chat(w)  = int_0^beta C(b') e^{b' w} db' = -[S(w) + e^{beta w} S^T(-w)]
    G(w, w') = int_0^beta db1 int_0^b1 db2 e^{b1 w' - b2 w} C(b1 - b2)
    Gamma(w) = int_0^inf C(it) e^{i w t} dt        (continuum only)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import integrate, special

from .errors import ResonanceError, ValidityGateError

RESONANCE_TOL = 1e-9
DIAGONAL_SWITCH = 1e-7


@dataclass(frozen=True)
class DiscreteBath:
    frequencies: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.frequencies, dtype=float))
        g = np.asarray(self.couplings, dtype=complex)
        if g.ndim == 1:
            g = g[None, :]
        if w.ndim != 1 or w.size == 0:
            raise ValueError("a discrete bath needs at least one mode")
        if np.any(w <= 0):
            raise ValueError("mode frequencies must be positive")
        if g.shape[1] != w.size:
            raise ValueError(f"couplings shape {g.shape} does not match {w.size} modes")
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "couplings", g)

    @classmethod
    def single_mode(cls, omega: float, g: complex) -> "DiscreteBath":
        return cls(np.array([omega]), np.array([[g]]))

    @property
    def n_couplings(self) -> int:
        return self.couplings.shape[0]

    def weights(self) -> np.ndarray:
        """``J[xi, mu, nu] = conj(g[mu, xi]) g[nu, xi]``."""
        g = self.couplings
        return np.einsum("mx,nx->xmn", g.conj(), g)

    def scaled(self, factor: float) -> "DiscreteBath":
        return DiscreteBath(self.frequencies, self.couplings * factor)


@dataclass(frozen=True)
class DrudeLorentzBath:
    reorg: float
    cutoff: float
    n_couplings: int = field(default=1, init=False)

    def __post_init__(self):
        if self.reorg < 0:
            raise ValueError("reorganization energy must be non-negative")
        if self.cutoff <= 0:
            raise ValueError("cutoff must be positive")

    def spectral_density(self, omega):
        omega = np.asarray(omega, dtype=float)
        return (self.reorg / np.pi) * 2 * omega * self.cutoff / (omega**2 + self.cutoff**2)

    def scaled(self, factor: float) -> "DrudeLorentzBath":
        return DrudeLorentzBath(self.reorg * factor**2, self.cutoff)


def bose_einstein(beta: float, omega):
    """``1 / (exp(beta omega) - 1)``; raises at the pole ``beta omega = 0``."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    x = beta * np.asarray(omega, dtype=float)
    if np.any(x == 0):
        raise ValueError("Bose-Einstein occupation has a pole at beta*omega = 0")
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(x)
    return float(out) if out.ndim == 0 else out


def _check_beta(beta):
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")


# ---------------------------------------------------------------- discrete


def _discrete_resonance(bath: DiscreteBath, omega: float) -> None:
    hit = np.abs(np.abs(omega) - bath.frequencies) <= RESONANCE_TOL * np.maximum(1.0, bath.frequencies)
    if np.any(hit):
        raise ResonanceError(
            f"frequency {omega!r} is resonant with bath mode {bath.frequencies[hit][0]!r}"
        )


def _discrete_s(bath: DiscreteBath, beta: float, omega: float, power: int) -> np.ndarray:
    _discrete_resonance(bath, omega)
    w = bath.frequencies
    n = bose_einstein(beta, w)
    J = bath.weights()
    JT = np.swapaxes(J, 1, 2)
    if power == 1:
        a = n / (w + omega)
        b = (n + 1) / (w - omega)
        return np.einsum("x,xmn->mn", a, JT) - np.einsum("x,xmn->mn", b, J)
    a = n / (w + omega) ** 2
    b = (n + 1) / (w - omega) ** 2
    return -np.einsum("x,xmn->mn", a, JT) - np.einsum("x,xmn->mn", b, J)


def corr_imag_time(bath, beta: float, beta_prime: float) -> np.ndarray:
    """Imaginary-time bath correlation ``C_{mu nu}(beta')`` for ``0 <= beta' <= beta``."""
    _check_beta(beta)
    if not 0 <= beta_prime <= beta:
        raise ValueError(f"beta_prime={beta_prime!r} outside [0, {beta!r}]")
    if isinstance(bath, DrudeLorentzBath):
        return np.array([[_drude_corr_imag_time(bath, beta, beta_prime)]], dtype=complex)
    w = bath.frequencies
    n = bose_einstein(beta, w)
    J = bath.weights()
    return np.einsum("x,xmn->mn", (n + 1) * np.exp(-beta_prime * w), J) + np.einsum(
        "x,xnm->mn", n * np.exp(beta_prime * w), J
    )


def _drude_corr_imag_time(bath: DrudeLorentzBath, beta, beta_prime):
    if beta_prime in (0.0, beta):
        raise ValueError("Drude-Lorentz C(beta') diverges at the endpoints of [0, beta]")

    def f(x):
        if x == 0.0:
            return 2 * bath.reorg / (np.pi * bath.cutoff * beta) * 2
        n = 1.0 / np.expm1(beta * x)
        return float(bath.spectral_density(x)) * ((n + 1) * np.exp(-beta_prime * x) + n * np.exp(beta_prime * x))

    val, _ = integrate.quad(f, 0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-11)
    return val


# ---------------------------------------------------------- Drude-Lorentz


def _matsubara_parts(bath: DrudeLorentzBath, beta: float):
    a = beta * bath.cutoff / (2 * np.pi)
    if abs(a - round(a)) < 1e-12 and round(a) >= 1:
        raise ResonanceError("beta*cutoff hits a Matsubara frequency; cot(beta*gamma/2) diverges")
    c0 = bath.reorg * bath.cutoff * (1 / np.tan(beta * bath.cutoff / 2) - 1j)
    pref = bath.reorg * bath.cutoff * beta / np.pi**2
    return a, c0, pref


def _matsubara_sum(a: float, b: complex, n_terms: int | None) -> complex:
    """``sum_{k>=1} k / ((k-a)(k+a)(k-b))``."""
    if n_terms is None:
        A = 1 / (2 * (a - b))
        B = -1 / (2 * (a + b))
        C = b / (b * b - a * a)
        return complex(-A * special.digamma(1 - a) - B * special.digamma(1 + a) - C * special.digamma(1 - b))
    k = np.arange(1, n_terms + 1, dtype=float)
    head = np.sum(k / ((k - a) * (k + a) * (k - b)))
    return complex(head + special.polygamma(1, n_terms + 1))


def _matsubara_sum_derivative(a: float, b: complex) -> complex:
    """Derivative of :func:`_matsubara_sum` with respect to ``b``."""
    dA = 1 / (2 * (a - b) ** 2)
    dB = 1 / (2 * (a + b) ** 2)
    C = b / (b * b - a * a)
    dC = -(a * a + b * b) / (b * b - a * a) ** 2
    trigamma = complex(mpmath.psi(1, 1 - b))
    return complex(
        -dA * special.digamma(1 - a) - dB * special.digamma(1 + a) - dC * special.digamma(1 - b) + C * trigamma
    )


def gamma_half_fourier(bath, beta: float, omega: float, n_matsubara: int | None = None) -> complex:
    """Half-sided Fourier transform ``int_0^inf C(it) e^{i omega t} dt``.

    Only defined for a continuum bath. ``n_matsubara=None`` sums all Matsubara
    poles exactly through digamma functions; an integer truncates the sum and
    adds a ``1/k^2`` tail estimate.
    """
    if not isinstance(bath, DrudeLorentzBath):
        raise TypeError("Gamma(omega) converges only for a continuum bath (use DrudeLorentzBath)")
    _check_beta(beta)
    if bath.reorg == 0:
        return 0j
    a, c0, pref = _matsubara_parts(bath, beta)
    b = 1j * beta * omega / (2 * np.pi)
    return complex(c0 / (bath.cutoff - 1j * omega) + pref * _matsubara_sum(a, b, n_matsubara))


def gamma_half_fourier_derivative(bath: DrudeLorentzBath, beta: float, omega: float) -> complex:
    _check_beta(beta)
    if bath.reorg == 0:
        return 0j
    a, c0, pref = _matsubara_parts(bath, beta)
    b = 1j * beta * omega / (2 * np.pi)
    db = 1j * beta / (2 * np.pi)
    return complex(1j * c0 / (bath.cutoff - 1j * omega) ** 2 + pref * _matsubara_sum_derivative(a, b) * db)


# ------------------------------------------------------------ public API


def s_function(bath, beta: float, omega: float) -> np.ndarray:
    """Principal-value coefficient ``S_{mu nu}(omega)`` (Lamb-shift kernel)."""
    _check_beta(beta)
    if isinstance(bath, DrudeLorentzBath):
        return np.array([[gamma_half_fourier(bath, beta, omega).imag]], dtype=complex)
    return _discrete_s(bath, beta, omega, 1)


def s_derivative(bath, beta: float, omega: float) -> np.ndarray:
    _check_beta(beta)
    if isinstance(bath, DrudeLorentzBath):
        return np.array([[gamma_half_fourier_derivative(bath, beta, omega).imag]], dtype=complex)
    return _discrete_s(bath, beta, omega, 2)


def c_hat(bath, beta: float, omega: float) -> np.ndarray:
    """``int_0^beta C(b') e^{b' omega} db'`` via the S-function identity."""
    return -(s_function(bath, beta, omega) + np.exp(beta * omega) * s_function(bath, beta, -omega).T)


def c_hat_derivative(bath, beta: float, omega: float) -> np.ndarray:
    e = np.exp(beta * omega)
    s_neg = s_function(bath, beta, -omega).T
    ds_neg = s_derivative(bath, beta, -omega).T
    return -s_derivative(bath, beta, omega) - beta * e * s_neg + e * ds_neg


def g_coeff(bath, beta: float, omega: float, omega_prime: float) -> np.ndarray:
    """Ordered double imaginary-time integral ``G_{mu nu}(omega, omega')``.

    Near coincidence the off-diagonal formula is 0/0, so below a relative gap of
    ``1e-7`` the limit ``beta Chat(w) - Chat'(w)`` is used instead.
    """
    delta = omega_prime - omega
    if abs(delta) < DIAGONAL_SWITCH * max(1.0, abs(omega), abs(omega_prime)):
        w = 0.5 * (omega + omega_prime)
        return beta * c_hat(bath, beta, w) - c_hat_derivative(bath, beta, w)
    return (np.exp(beta * delta) * c_hat(bath, beta, omega) - c_hat(bath, beta, omega_prime)) / delta


def reorg_moments(bath) -> tuple[np.ndarray, np.ndarray]:
    """``(Lambda, M)`` with ``Lambda = int J/w`` and ``M = int J``.

    For the Drude-Lorentz density ``M`` diverges logarithmically; it is returned
    as ``inf`` (real), which leaves ``Im M = 0`` well defined.
    """
    if isinstance(bath, DrudeLorentzBath):
        return np.array([[bath.reorg]], dtype=complex), np.array([[np.inf if bath.reorg > 0 else 0.0]], dtype=complex)
    J = bath.weights()
    lam = np.einsum("x,xmn->mn", 1.0 / bath.frequencies, J)
    m = J.sum(axis=0)
    return lam, m


@dataclass
class BathCoefficientTable:
    """Coefficients cached on the Bohr-frequency grid of one system.

    ``g[k, l]`` holds ``G_{mu nu}(frequencies[k], frequencies[l])``.
    """

    bath: object
    beta: float
    frequencies: np.ndarray
    g: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        self.frequencies = f
        self._chat = {}
        n = self.bath.n_couplings
        self.g = np.empty((f.size, f.size, n, n), dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            for k, w in enumerate(f):
                for l, wp in enumerate(f):
                    self.g[k, l] = self._g(w, wp)
        if not np.all(np.isfinite(self.g)):
            span = float(np.ptp(f)) if f.size else 0.0
            raise ValidityGateError(
                f"G coefficients overflow at beta={self.beta:g} over a Bohr-frequency span of {span:g}"
            )

    def chat(self, w: float) -> np.ndarray:
        key = float(w)
        if key not in self._chat:
            self._chat[key] = c_hat(self.bath, self.beta, key)
        return self._chat[key]

    def _g(self, w, wp):
        delta = wp - w
        if abs(delta) < DIAGONAL_SWITCH * max(1.0, abs(w), abs(wp)):
            return g_coeff(self.bath, self.beta, w, wp)
        return (np.exp(self.beta * delta) * self.chat(w) - self.chat(wp)) / delta


def thermal_factor(beta: float, x):
    """``x / (1 - exp(-beta x))`` with its ``1/beta`` limit handled by series."""
    x = np.asarray(x, dtype=float)
    y = beta * x
    small = np.abs(y) < 1e-6
    safe = np.where(small, 1.0, y)
    # far on the negative side expm1 overflows and the factor correctly tends to zero
    with np.errstate(over="ignore"):
        out = np.where(small, (1 + y / 2 + y * y / 12) / beta, x / -np.expm1(-safe))
    return float(out) if out.ndim == 0 else out


def high_temperature_corr(bath, beta: float, beta_prime: float) -> np.ndarray:
    """Leading high-temperature form ``2 Re L / beta + i (1 - 2 b'/beta) Im M``."""
    lam, m = reorg_moments(bath)
    return 2 * lam.real / beta + 1j * (1 - 2 * beta_prime / beta) * np.nan_to_num(m.imag)


__all__ = [
    "DiscreteBath",
    "DrudeLorentzBath",
    "BathCoefficientTable",
    "bose_einstein",
    "corr_imag_time",
    "s_function",
    "s_derivative",
    "c_hat",
    "c_hat_derivative",
    "g_coeff",
    "gamma_half_fourier",
    "gamma_half_fourier_derivative",
    "reorg_moments",
    "thermal_factor",
    "high_temperature_corr",
]
