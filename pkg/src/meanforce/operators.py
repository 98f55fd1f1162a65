"""Dense Hermitian operator algebra.

Operators are plain complex ``numpy`` arrays. The helpers here validate the
Hermiticity contract at the library boundary, group degenerate eigenvalues,
split coupling operators into Bohr-frequency eigenoperators, and provide the
exponential/logarithm/partial-trace plumbing used by everything else.

Conventions
-----------
- Composite spaces are ordered system first: ``kron(system, bath)``.
- Eigenoperators satisfy ``[H, A_w] = -w A_w``, so ``A_w`` lowers the energy
  by ``w`` (``w > 0`` are emission frequencies).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import NotHermitianError, NotPositiveError

HERMITIAN_TOL = 1e-12
BLOCK_DROP_TOL = 1e-12
DEFAULT_GROUP_REL = 1e-9


def hermitian_defect(m: np.ndarray) -> float:
    """Max-abs anti-Hermitian part relative to the max-abs entry (inf for non-finite input)."""
    m = np.asarray(m)
    if not np.all(np.isfinite(m)):
        return float("inf")
    scale = np.max(np.abs(m)) if m.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)) / scale)


def check_hermitian(m, tol: float = HERMITIAN_TOL, name: str = "operator") -> np.ndarray:
    """Return ``m`` as a complex square array, raising if it is not Hermitian."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    defect = hermitian_defect(m)
    if defect > tol:
        raise NotHermitianError(f"{name} is not Hermitian (relative defect {defect:.3e})")
    return m


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def check_density_matrix(rho, tol: float = 1e-10, name: str = "state") -> np.ndarray:
    rho = check_hermitian(rho, max(tol, HERMITIAN_TOL), name)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise ValueError(f"{name} has trace {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(hermitize(rho))[0]
    if lo < -tol:
        raise NotPositiveError(f"{name} has negative eigenvalue {lo:.3e}")
    return rho


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def tensor_product(*ops) -> np.ndarray:
    """Kronecker product of the arguments, left factor outermost."""
    if not ops:
        raise ValueError("tensor_product needs at least one operator")
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues grouped into distinct levels with their eigenprojectors."""

    eigenvalues: np.ndarray
    projectors: tuple
    group_tol: float
    multiplicities: tuple = field(default=())

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def reconstruct(self) -> np.ndarray:
        return sum(e * p for e, p in zip(self.eigenvalues, self.projectors))


def _chain_groups(values: np.ndarray, tol: float) -> list[list[int]]:
    """Group indices of sorted ``values`` whose consecutive gaps are <= tol."""
    groups = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def spectral_decompose(H, group_tol: float | None = None) -> SpectralDecomposition:
    """Eigendecomposition with degeneracy grouping.

    ``group_tol`` defaults to ``1e-9`` times the spectral range. Values larger
    than half the range would merge everything into one level and are rejected.
    """
    H = check_hermitian(H, name="H")
    evals, evecs = np.linalg.eigh(hermitize(H))
    span = float(evals[-1] - evals[0])
    if group_tol is None:
        group_tol = DEFAULT_GROUP_REL * max(span, np.finfo(float).tiny)
        if span == 0.0:
            group_tol = DEFAULT_GROUP_REL * max(1.0, abs(evals[0]))
    if group_tol <= 0:
        raise ValueError("group_tol must be positive")
    if span > 0 and group_tol > 0.5 * span:
        raise ValueError(
            f"group_tol={group_tol:g} exceeds half the spectral range ({span:g}); "
            "this would merge distinct levels"
        )
    levels, projectors, mult = [], [], []
    for idx in _chain_groups(evals, group_tol):
        v = evecs[:, idx]
        levels.append(float(np.mean(evals[idx])))
        projectors.append(v @ v.conj().T)
        mult.append(len(idx))
    return SpectralDecomposition(np.array(levels), tuple(projectors), float(group_tol), tuple(mult))


@dataclass(frozen=True)
class BohrDecomposition:
    """Eigenoperators ``A_{mu w}`` of ``[H, .]`` for a list of couplings.

    ``blocks[mu, k]`` is the block at ``frequencies[k]``; blocks below the
    drop tolerance are stored as zeros and ``present[mu, k]`` is False.
    """

    frequencies: np.ndarray
    blocks: np.ndarray
    present: np.ndarray
    spectral: SpectralDecomposition

    @property
    def n_couplings(self) -> int:
        return self.blocks.shape[0]

    @property
    def operators(self) -> dict:
        out = {}
        for mu in range(self.blocks.shape[0]):
            for k, w in enumerate(self.frequencies):
                if self.present[mu, k]:
                    out[(mu, float(w))] = self.blocks[mu, k]
        return out

    def block(self, mu: int, omega: float, tol: float = 1e-9) -> np.ndarray:
        k = np.flatnonzero(np.abs(self.frequencies - omega) <= tol)
        if k.size == 0:
            return np.zeros_like(self.blocks[mu, 0])
        return self.blocks[mu, k[0]]


def bohr_decompose(spec: SpectralDecomposition, couplings, drop_tol: float = BLOCK_DROP_TOL) -> BohrDecomposition:
    """Split each coupling into ``sum_w A_w`` with ``A_w = sum P_e' A P_e`` over e - e' = w."""
    couplings = [np.asarray(a, dtype=complex) for a in couplings]
    if not couplings:
        raise ValueError("at least one coupling operator is required")
    d = spec.dim
    for i, a in enumerate(couplings):
        if a.shape != (d, d):
            raise ValueError(f"coupling {i} has shape {a.shape}, expected {(d, d)}")

    e = spec.eigenvalues
    pairs = [(a, b, e[a] - e[b]) for a in range(len(e)) for b in range(len(e))]
    diffs = np.array([p[2] for p in pairs])
    order = np.argsort(diffs, kind="stable")
    freq_groups = _chain_groups(diffs[order], 2.0 * spec.group_tol)

    freqs, members = [], []
    for grp in freq_groups:
        idx = order[grp]
        w = float(np.mean(diffs[idx]))
        if any(pairs[i][0] == pairs[i][1] for i in idx):
            w = 0.0
        freqs.append(w)
        members.append([pairs[i][:2] for i in idx])

    blocks = np.zeros((len(couplings), len(freqs), d, d), dtype=complex)
    for mu, a_mu in enumerate(couplings):
        for k, mem in enumerate(members):
            for a, b in mem:
                blocks[mu, k] += spec.projectors[b] @ a_mu @ spec.projectors[a]
    scale = np.array([max(1.0, np.max(np.abs(a))) for a in couplings])
    norms = np.max(np.abs(blocks), axis=(2, 3))
    present = norms >= drop_tol * scale[:, None]
    keep = present.any(axis=0)
    blocks = blocks[:, keep] * present[:, keep, None, None]
    return BohrDecomposition(np.array(freqs)[keep], blocks, present[:, keep], spec)


def _eigh(H):
    H = check_hermitian(H, name="H")
    return np.linalg.eigh(hermitize(H))


def matrix_exp_hermitian(H, scale: complex = 1.0) -> np.ndarray:
    """``exp(scale * H)`` through the eigendecomposition of Hermitian ``H``."""
    evals, evecs = _eigh(H)
    return (evecs * np.exp(scale * evals)) @ evecs.conj().T


def matrix_log_hermitian(M) -> np.ndarray:
    """Principal logarithm of a positive-definite Hermitian matrix."""
    evals, evecs = _eigh(M)
    if evals[0] <= 0:
        raise NotPositiveError(
            f"matrix logarithm needs a positive-definite argument (min eigenvalue {evals[0]:.3e})"
        )
    return hermitize((evecs * np.log(evals)) @ evecs.conj().T)


def gibbs_state(H, beta: float) -> np.ndarray:
    """``exp(-beta H) / Tr exp(-beta H)``, computed with a ground-energy shift."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    evals, evecs = _eigh(H)
    w = np.exp(-beta * (evals - evals[0]))
    w /= w.sum()
    return hermitize((evecs * w) @ evecs.conj().T)


def imaginary_time_conjugate(H0, V, beta_prime: float) -> np.ndarray:
    """``exp(b H0) V exp(-b H0)`` evaluated in the eigenbasis of ``H0``."""
    V = np.asarray(V, dtype=complex)
    evals, evecs = _eigh(H0)
    if V.shape != (len(evals), len(evals)):
        raise ValueError(f"V has shape {V.shape}, expected {(len(evals),) * 2}")
    v = evecs.conj().T @ V @ evecs
    v *= np.exp(beta_prime * (evals[:, None] - evals[None, :]))
    return evecs @ v @ evecs.conj().T


def partial_trace(m: np.ndarray, dim_sys: int, dim_bath: int) -> np.ndarray:
    """Trace out the second (bath) factor of ``m`` without state checks."""
    m = np.asarray(m)
    if m.shape != (dim_sys * dim_bath,) * 2:
        raise ValueError(f"cannot factor shape {m.shape} as {dim_sys}x{dim_bath}")
    return np.einsum("ijkj->ik", m.reshape(dim_sys, dim_bath, dim_sys, dim_bath))


def partial_trace_bath(rho_total, dim_sys: int, dim_bath: int) -> np.ndarray:
    rho_total = check_density_matrix(rho_total, name="total state")
    return hermitize(partial_trace(rho_total, dim_sys, dim_bath))


def trace_distance(rho, sigma) -> float:
    diff = hermitize(np.asarray(rho) - np.asarray(sigma))
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def population(rho, level: int = 1) -> float:
    return float(np.real(rho[level, level]))


def abs_coherence(rho, i: int = 0, j: int = 1) -> float:
    return float(abs(rho[i, j]))


# Pauli matrices in the (|0>, |1>) basis with sigma_z = |1><1| - |0><0|.
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
