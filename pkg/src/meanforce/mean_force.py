"""Equilibrium reduced states beyond the bare Gibbs state.

Weak-coupling results are second order in the coupling scale ``lam`` and are
assembled from the eigenoperators of the system Hamiltonian and the ``G``
coefficient table of the bath::

    X = sum_{mu nu} sum_{w w'} G_{mu nu}(w, w') A_{mu w'}^+ A_{nu w}

The high-temperature results are first order in ``beta`` and need only the
reorganization matrix ``Lambda`` and the first moment ``M`` of the bath.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .bath import BathCoefficientTable, thermal_factor
from .errors import DegeneracyError, NotHermitianError, NotPositiveError, ValidityGateError
from .operators import (
    BohrDecomposition,
    anticommutator,
    bohr_decompose,
    check_hermitian,
    dagger,
    gibbs_state,
    hermitian_defect,
    hermitize,
    matrix_exp_hermitian,
    matrix_log_hermitian,
    spectral_decompose,
)

HMF_HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-10
HIGH_T_VARIANTS = ("general", "semigroup", "single_coupling", "pointer_basis")


@dataclass(frozen=True)
class WeakCouplingResult:
    rho: np.ndarray
    h_mf: np.ndarray
    z_mf: float
    lam: float
    beta: float


@dataclass(frozen=True)
class HighTResult:
    h_mf: np.ndarray
    variant: str
    beta: float


class ExponentialForm(NamedTuple):
    hs_prime: np.ndarray
    r: np.ndarray
    h_mf: np.ndarray


def _prepare(HS, couplings, bath, beta, group_tol=None):
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    HS = check_hermitian(HS, name="H_S")
    couplings = [check_hermitian(a, name=f"A_{i}") for i, a in enumerate(couplings)]
    if len(couplings) != bath.n_couplings:
        raise ValueError(f"bath describes {bath.n_couplings} coupling(s), got {len(couplings)} operators")
    bohr = bohr_decompose(spectral_decompose(HS, group_tol), couplings)
    return HS, bohr, BathCoefficientTable(bath, beta, bohr.frequencies)


def pair_sum(bohr: BohrDecomposition, coeff: np.ndarray) -> np.ndarray:
    """``sum coeff[k, l, mu, nu] A_{mu, w_l}^+ A_{nu, w_k}`` over all indices."""
    blocks = bohr.blocks
    adag = np.conj(np.swapaxes(blocks, 2, 3))
    return np.einsum("klmn,mlij,nkjp->ip", coeff, adag, blocks, optimize=True)


def _frequency_gaps(bohr):
    w = bohr.frequencies
    return w[:, None] - w[None, :]


def correction_operator(bohr, table) -> np.ndarray:
    """The bracketed second-order term ``X`` of the mean-force Gibbs state."""
    return pair_sum(bohr, table.g)


def hmf_second_order(bohr, table, beta: float, part: str = "all") -> np.ndarray:
    """``H_MF^(2)``, optionally restricted to the ``w = w'`` ("diagonal") or other terms."""
    gaps = _frequency_gaps(bohr)
    weight = thermal_factor(beta, gaps)
    same = np.eye(len(bohr.frequencies), dtype=bool)
    if part == "diagonal":
        weight = np.where(same, weight, 0.0)
    elif part == "offdiagonal":
        weight = np.where(same, 0.0, weight)
    elif part != "all":
        raise ValueError(f"unknown part {part!r}")
    h2 = -pair_sum(bohr, weight[:, :, None, None] * table.g)
    defect = hermitian_defect(h2)
    if defect > HMF_HERMITIAN_TOL:
        raise NotHermitianError(f"second-order H_MF correction is not Hermitian (defect {defect:.2e})")
    return hermitize(h2)


def _require_psd(rho, what):
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -PSD_TOL:
        raise NotPositiveError(
            f"{what} has a negative eigenvalue {lo:.3e}; the coupling is outside the perturbative range"
        )


def mfg_weak(HS, couplings, bath, beta: float, lam: float, normalization: str = "trace") -> np.ndarray:
    """Second-order mean-force Gibbs state.

    ``normalization="trace"`` divides the assembled operator by its trace;
    ``"expanded"`` uses the perturbatively expanded ``1/Z_MF`` and is trace one
    only up to fourth order.
    """
    HS, bohr, table = _prepare(HS, couplings, bath, beta)
    rho0 = gibbs_state(HS, beta)
    if lam == 0:
        return rho0
    lam2 = lam * lam
    d = HS.shape[0]
    if normalization == "trace":
        body = rho0 @ (np.eye(d) + lam2 * correction_operator(bohr, table))
        rho = body / np.trace(body).real
    elif normalization == "expanded":
        n = len(bohr.frequencies)
        diag = np.zeros((n, n) + table.g.shape[2:], dtype=complex)
        off = table.g.copy()
        for k in range(n):
            diag[k, k] = table.g[k, k]
            off[k, k] = 0
        x_diag = pair_sum(bohr, diag)
        rho = rho0 @ (np.eye(d) + lam2 * (x_diag - np.trace(x_diag @ rho0) * np.eye(d)) + lam2 * pair_sum(bohr, off))
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    defect = hermitian_defect(rho)
    if defect > HMF_HERMITIAN_TOL:
        raise NotHermitianError(f"mean-force state is not Hermitian (defect {defect:.2e})")
    rho = hermitize(rho)
    _require_psd(rho, "second-order mean-force state")
    return rho


def mfg_numerator(HS, couplings, bath, beta: float, lam: float) -> tuple[np.ndarray, float]:
    """Unnormalized ``Tr_B exp(-beta H) / Z_B`` to second order.

    Returned as ``(numerator * exp(beta E0), E0)`` with ``E0`` the ground
    energy of ``H_S`` so that large ``beta`` does not underflow.
    """
    HS, bohr, table = _prepare(HS, couplings, bath, beta)
    e0 = float(np.linalg.eigvalsh(HS)[0])
    boltz = matrix_exp_hermitian(HS - e0 * np.eye(HS.shape[0]), -beta)
    body = boltz @ (np.eye(HS.shape[0]) + lam * lam * correction_operator(bohr, table))
    if hermitian_defect(body) > HMF_HERMITIAN_TOL:
        raise NotHermitianError("second-order numerator is not Hermitian")
    return hermitize(body), e0


def hmf_from_reduced_numerator(numerator, beta: float, shift: float = 0.0) -> np.ndarray:
    """``-(1/beta) ln(numerator) + shift`` for a positive-definite numerator."""
    if not beta > 0:
        raise ValueError("beta must be positive")
    return -matrix_log_hermitian(numerator) / beta + shift * np.eye(np.shape(numerator)[0])


def state_from_hmf(h_mf, beta: float) -> np.ndarray:
    return gibbs_state(h_mf, beta)


def _log_partition(H, beta):
    e = np.linalg.eigvalsh(hermitize(np.asarray(H)))
    return -beta * e[0] + np.log(np.sum(np.exp(-beta * (e - e[0]))))


def hmf_weak(HS, couplings, bath, beta: float, lam: float) -> WeakCouplingResult:
    """Second-order Hamiltonian of mean force ``H_S + lam^2 H_MF^(2)``."""
    HS, bohr, table = _prepare(HS, couplings, bath, beta)
    h_mf = HS + lam * lam * hmf_second_order(bohr, table, beta) if lam != 0 else HS.copy()
    with np.errstate(over="ignore"):
        z_mf = float(np.exp(_log_partition(h_mf, beta) - _log_partition(HS, beta)))
    return WeakCouplingResult(gibbs_state(h_mf, beta), h_mf, z_mf, lam, beta)


def hmf_exponential(HS, couplings, bath, beta: float, lam: float, group_tol: float | None = None) -> ExponentialForm:
    """Exponential form ``exp(i lam^2 R) H_S' exp(-i lam^2 R)``.

    ``H_S'`` adds the ``w = w'`` terms to ``H_S``; ``R`` is then built from the
    eigenoperators and Bohr frequencies of ``H_S'``.
    """
    HS, bohr, table = _prepare(HS, couplings, bath, beta, group_tol)
    lam2 = lam * lam
    hs_prime = hermitize(HS + lam2 * hmf_second_order(bohr, table, beta, part="diagonal"))
    if lam == 0:
        return ExponentialForm(HS.copy(), np.zeros_like(HS), HS.copy())
    spec_prime = spectral_decompose(hs_prime, group_tol)
    if spec_prime.multiplicities != bohr.spectral.multiplicities:
        raise DegeneracyError(
            "the diagonal correction changes eigenvalue multiplicities "
            f"{bohr.spectral.multiplicities} -> {spec_prime.multiplicities}"
        )
    bohr_p = bohr_decompose(spec_prime, [bohr_blocks_sum(bohr, mu) for mu in range(bohr.n_couplings)])
    table_p = BathCoefficientTable(table.bath, beta, bohr_p.frequencies)
    gaps = _frequency_gaps(bohr_p)
    same = np.eye(len(bohr_p.frequencies), dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        weight = np.where(same, 0.0, -1.0 / np.expm1(-beta * np.where(same, 1.0, gaps)))
    r = 1j * pair_sum(bohr_p, weight[:, :, None, None] * table_p.g)
    if hermitian_defect(r) > HMF_HERMITIAN_TOL:
        raise NotHermitianError("rotation generator R is not Hermitian")
    r = hermitize(r)
    u = matrix_exp_hermitian(r, 1j * lam2)
    return ExponentialForm(hs_prime, r, hermitize(u @ hs_prime @ dagger(u)))


def bohr_blocks_sum(bohr: BohrDecomposition, mu: int) -> np.ndarray:
    return bohr.blocks[mu].sum(axis=0)


# ----------------------------------------------------------- high temperature


def dissipator_superoperator(couplings, kossakowski) -> np.ndarray:
    """Row-major matrix of ``X -> sum c_{mu nu}(A_mu^+ X A_nu - {A_mu^+ A_nu, X}/2)``."""
    d = couplings[0].shape[0]
    eye = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for mu, a_mu in enumerate(couplings):
        for nu, a_nu in enumerate(couplings):
            c = kossakowski[mu, nu]
            if c == 0:
                continue
            ad = dagger(a_mu)
            prod = ad @ a_nu
            out += c * (np.kron(ad, a_nu.T) - 0.5 * np.kron(prod, eye) - 0.5 * np.kron(eye, prod.T))
    return out


def semigroup_map(couplings, kossakowski, t: float, x: np.ndarray) -> np.ndarray:
    """Apply ``exp(t L)`` for the FGKLS generator with Kossakowski matrix ``kossakowski``."""
    d = x.shape[0]
    sup = dissipator_superoperator(couplings, kossakowski)
    return (expm(t * sup) @ x.reshape(-1)).reshape(d, d)


def _high_t_common(HS, As, lam_re, m_im, beta):
    """Terms shared by the general and semigroup forms, excluding H_S itself."""
    d = HS.shape[0]
    out = np.zeros((d, d), dtype=complex)
    n = len(As)
    Ad = [dagger(a) for a in As]
    for mu in range(n):
        for nu in range(n):
            out -= lam_re[mu, nu] * Ad[mu] @ As[nu]
            out -= 1j * beta / 6 * m_im[mu, nu] * Ad[mu] @ As[nu]
    for m1 in range(n):
        for n1 in range(n):
            if lam_re[m1, n1] == 0:
                continue
            for m2 in range(n):
                for n2 in range(n):
                    c = lam_re[m1, n1] * lam_re[m2, n2]
                    if c == 0:
                        continue
                    out += beta / 3 * c * Ad[m1] @ As[n1] @ Ad[m2] @ As[n2]
                    out -= beta / 6 * c * Ad[m1] @ Ad[m2] @ anticommutator(As[n1], As[n2])
    return out


def hmf_high_temperature(HS, couplings, reorg_moments, beta: float, variant: str = "general") -> HighTResult:
    """High-temperature Hamiltonian of mean force.

    Parameters
    ----------
    reorg_moments
        ``(Lambda, M)`` as returned by :func:`meanforce.bath.reorg_moments`;
        only ``Re Lambda`` and ``Im M`` enter.
    variant
        ``general`` expands the dissipative term to first order in ``beta``;
        ``semigroup`` exponentiates it as ``Phi_{beta/3}(H_S)``;
        ``single_coupling`` is the closed form for one coupling operator with a
        non-degenerate spectrum; ``pointer_basis`` is the closed form for
        couplings that are projectors onto an orthonormal basis.
    """
    if variant not in HIGH_T_VARIANTS:
        raise ValueError(f"variant must be one of {HIGH_T_VARIANTS}, got {variant!r}")
    if not beta > 0:
        raise ValueError("beta must be positive")
    HS = check_hermitian(HS, name="H_S")
    As = [check_hermitian(a, name=f"A_{i}") for i, a in enumerate(couplings)]
    lam, m = (np.atleast_2d(np.asarray(x, dtype=complex)) for x in reorg_moments)
    if lam.shape != (len(As), len(As)):
        raise ValueError(f"Lambda has shape {lam.shape}, expected {(len(As),) * 2}")
    lam_re = lam.real
    m_im = np.nan_to_num(np.imag(m), nan=0.0, posinf=0.0, neginf=0.0)

    if variant == "single_coupling":
        h = _single_coupling(HS, As, lam_re, beta)
    elif variant == "pointer_basis":
        h = _pointer_basis(HS, As, lam_re, m_im, beta)
    else:
        if variant == "general":
            lead = HS + beta / 3 * (dissipator_superoperator(As, lam_re) @ HS.reshape(-1)).reshape(HS.shape)
        else:
            lead = semigroup_map(As, lam_re, beta / 3, HS)
        h = lead + _high_t_common(HS, As, lam_re, m_im, beta)
    if hermitian_defect(h) > HMF_HERMITIAN_TOL:
        raise NotHermitianError(f"high-temperature H_MF ({variant}) is not Hermitian")
    return HighTResult(hermitize(h), variant, beta)


def _single_coupling(HS, As, lam_re, beta):
    if len(As) != 1:
        raise ValidityGateError("single_coupling variant needs exactly one coupling operator")
    a_vals, a_vecs = np.linalg.eigh(hermitize(As[0]))
    span = max(a_vals[-1] - a_vals[0], 1.0)
    if np.any(np.diff(a_vals) <= 1e-9 * span):
        raise DegeneracyError("single_coupling variant needs a coupling operator with non-degenerate spectrum")
    lam1 = lam_re[0, 0]
    h = dagger(a_vecs) @ HS @ a_vecs
    damp = np.exp(-beta * lam1 * (a_vals[:, None] - a_vals[None, :]) ** 2 / 6)
    h = h * damp - lam1 * np.diag(a_vals**2)
    return a_vecs @ h @ dagger(a_vecs)


def _pointer_basis(HS, As, lam_re, m_im, beta):
    d = HS.shape[0]
    if len(As) != d:
        raise ValidityGateError("pointer_basis variant needs one rank-one projector per basis state")
    vecs = []
    for i, a in enumerate(As):
        vals, v = np.linalg.eigh(hermitize(a))
        if not (np.allclose(vals[:-1], 0, atol=1e-10) and abs(vals[-1] - 1) < 1e-10):
            raise ValidityGateError(f"coupling {i} is not a rank-one projector")
        vecs.append(v[:, -1])
    basis = np.column_stack(vecs)
    if not np.allclose(dagger(basis) @ basis, np.eye(d), atol=1e-10):
        raise ValidityGateError("pointer projectors are not mutually orthogonal")
    off = lam_re - np.diag(np.diag(lam_re))
    if np.any(np.abs(off) > 1e-12) or np.any(np.abs(m_im) > 1e-12):
        raise ValidityGateError("pointer_basis variant needs delta_{mu nu} bath couplings")
    lam_diag = np.diag(lam_re)
    h = dagger(basis) @ HS @ basis
    damp = np.exp(-beta * (lam_diag[:, None] + lam_diag[None, :]) / 6)
    np.fill_diagonal(damp, 1.0)
    h = h * damp - np.diag(lam_diag)
    return basis @ h @ dagger(basis)
