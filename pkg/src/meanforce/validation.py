"""Invariant suite run by ``meanforce validate``.

Every check returns ``(passed, detail)``. ``generator_hook`` lets a caller
tamper with the Bloch-Redfield generators before they are checked, which is
how the suite is shown to catch a broken rate.
"""

from __future__ import annotations

import json
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .bath import DiscreteBath, DrudeLorentzBath, c_hat, g_coeff, s_function
from .exact import SingleOscillatorModel, coupling_operator, exact_equilibrium, system_hamiltonian
from .heom import build_hierarchy, propagate_heom
from .master_eq import build_redfield, reference_hamiltonian, steady_state
from .mean_force import hmf_exponential, hmf_high_temperature, hmf_weak
from .operators import (
    bohr_decompose,
    commutator,
    gibbs_state,
    hermitian_defect,
    matrix_exp_hermitian,
    matrix_log_hermitian,
    spectral_decompose,
    trace_distance,
)
from .oracles import c_hat_quadrature, drude_s_quadrature, g_quadrature, tcl2_trajectory

BETAS = (0.5, 1.0)
CUTOFF = 0.5


def _rand_herm(rng, d):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (x + x.conj().T) / 2


def check_bohr():
    rng = np.random.default_rng(11)
    worst = 0.0
    for d in (2, 3, 5):
        h = _rand_herm(rng, d)
        a = _rand_herm(rng, d)
        bohr = bohr_decompose(spectral_decompose(h), [a])
        total = bohr.blocks[0].sum(axis=0)
        worst = max(worst, np.max(np.abs(total - a)))
        for k, w in enumerate(bohr.frequencies):
            blk = bohr.blocks[0, k]
            worst = max(worst, np.max(np.abs(commutator(h, blk) + w * blk)))
    return worst < 1e-9, f"max residual {worst:.2e}"


def check_exp_log():
    rng = np.random.default_rng(12)
    worst = 0.0
    for d in (2, 4):
        x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        m = x @ x.conj().T + 0.1 * np.eye(d)
        back = matrix_exp_hermitian(matrix_log_hermitian(m))
        worst = max(worst, np.max(np.abs(back - m)) / np.max(np.abs(m)))
    return worst < 1e-9, f"relative error {worst:.2e}"


def _rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def check_coefficient_oracles():
    baths = [
        DiscreteBath.single_mode(1.5, 1.0),
        DiscreteBath(np.array([0.7, 2.3]), np.array([[0.4, 0.9 + 0.2j], [0.3j, -0.5]])),
    ]
    worst = 0.0
    for bath in baths:
        for w, wp in ((1.0, -1.0), (0.4, 0.0), (-2.0, -2.0)):
            worst = max(worst, _rel(c_hat(bath, 1.0, w), c_hat_quadrature(bath, 1.0, w)))
            worst = max(worst, _rel(g_coeff(bath, 1.0, w, wp), g_quadrature(bath, 1.0, w, wp)))
    return worst < 1e-8, f"max relative deviation {worst:.2e}"


def check_drude_lamb_shift():
    bath = DrudeLorentzBath(0.3, CUTOFF)
    worst = 0.0
    for beta in BETAS:
        for w in (-1.0, 0.5, 2.0):
            ref = drude_s_quadrature(bath, beta, w)
            worst = max(worst, abs(s_function(bath, beta, w)[0, 0].real - ref) / abs(ref))
    return worst < 1e-8, f"max relative deviation {worst:.2e}"


def _generators(hook):
    hs, a = system_hamiltonian(1.0), coupling_operator()
    out = []
    for beta in BETAS:
        bath = DrudeLorentzBath(0.1, CUTOFF)
        for kind in ("bare", "high_t"):
            h_ref = reference_hamiltonian(kind, hs, [a], bath, beta)
            for mode in ("full", "secular"):
                gen = build_redfield(h_ref, [a], bath, beta, mode=mode, refined_with=kind)
                out.append(hook(gen) if hook else gen)
    return out


def detailed_balance_defect(gen) -> float:
    w = gen.bohr.frequencies
    worst = 0.0
    for k, x in enumerate(w):
        if x <= 0:
            continue
        j = np.flatnonzero(np.isclose(w, -x, rtol=0, atol=1e-12 * max(1.0, abs(x))))
        if j.size == 0:
            continue
        up = gen.gamma[j[0], j[0]].real
        down = gen.gamma[k, k].real
        ratio = up / down
        worst = max(worst, float(np.max(np.abs(ratio / np.exp(-gen.beta * x) - 1))))
    return worst


def check_detailed_balance(hook=None):
    worst = max(detailed_balance_defect(g) for g in _generators(hook))
    return worst < 1e-8, f"max relative defect {worst:.2e}"


def check_generator_structure(hook=None):
    rng = np.random.default_rng(13)
    worst = 0.0
    for gen in _generators(hook):
        for _ in range(3):
            x = _rand_herm(rng, 2)
            y = gen.apply(x)
            worst = max(worst, abs(np.trace(y)), hermitian_defect(y))
    return worst < 1e-10, f"max trace/Hermiticity defect {worst:.2e}"


def check_secular_steady_states(hook=None):
    worst = 0.0
    for gen in _generators(hook):
        if gen.mode != "secular":
            continue
        worst = max(worst, trace_distance(steady_state(gen), gibbs_state(gen.h_ref, gen.beta)))
    return worst < 1e-8, f"max distance to the reference Gibbs state {worst:.2e}"


def check_exact_bare_limit():
    model = SingleOscillatorModel(lam=0.0)
    d = trace_distance(exact_equilibrium(model, 1.0).rho, gibbs_state(model.h_s, 1.0))
    return d < 1e-12, f"distance {d:.2e}"


def check_hmf_hermitian():
    model = SingleOscillatorModel(lam=0.3)
    worst = 0.0
    for beta in BETAS:
        for h in (
            hmf_weak(model.h_s, model.couplings, model.bath, beta, 0.3).h_mf,
            hmf_exponential(model.h_s, model.couplings, model.bath, beta, 0.3).h_mf,
            hmf_high_temperature(model.h_s, model.couplings, (np.array([[0.2]]), np.array([[0.3]])), beta).h_mf,
        ):
            worst = max(worst, hermitian_defect(h))
    return worst < 1e-9, f"max defect {worst:.2e}"


def check_heom_weak_limit():
    """Hierarchy minus the second-order time-local equation shrinks as reorg**2."""
    hs, a = system_hamiltonian(1.0), coupling_operator()
    t = np.linspace(0, 10, 101)
    rho0 = np.diag([0.0, 1.0]).astype(complex)
    dist, drift = [], 0.0
    for reorg in (0.0005, 0.001):
        bath = DrudeLorentzBath(reorg, CUTOFF)
        traj = propagate_heom(build_hierarchy(hs, a, bath, 0.5, 4), rho0, t)
        ref = tcl2_trajectory(hs, a, bath, 0.5, rho0, t)
        dist.append(max(trace_distance(x, y) for x, y in zip(traj.states, ref.states)))
        drift = max(drift, float(np.max(np.abs(np.trace(traj.states, axis1=1, axis2=2) - 1))))
    slope = float(np.log2(dist[1] / dist[0]))
    return slope > 1.8 and drift < 1e-7, f"order in reorg {slope:.2f}, trace drift {drift:.2e}"


CHECKS = {
    "bohr_decomposition": check_bohr,
    "exp_log_roundtrip": check_exp_log,
    "coefficient_oracles": check_coefficient_oracles,
    "drude_lamb_shift": check_drude_lamb_shift,
    "detailed_balance": check_detailed_balance,
    "generator_structure": check_generator_structure,
    "secular_steady_states": check_secular_steady_states,
    "exact_bare_limit": check_exact_bare_limit,
    "hmf_hermitian": check_hmf_hermitian,
    "heom_weak_limit": check_heom_weak_limit,
}
_HOOKED = {"detailed_balance", "generator_structure", "secular_steady_states"}


def run_validation(generator_hook=None, only=None) -> dict:
    results = []
    for name, fn in CHECKS.items():
        if only is not None and name not in only:
            continue
        start = time.perf_counter()
        try:
            ok, detail = fn(generator_hook) if name in _HOOKED else fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append({"name": name, "passed": bool(ok), "detail": detail,
                        "seconds": round(time.perf_counter() - start, 3)})
    return {"passed": all(r["passed"] for r in results), "checks": results}


def write_report(report: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2) + "\n")
    return path


def mutate_rate(factor: float = 1.01, index: int = 0):
    """Hook that scales one diagonal rate ``gamma(w, w)`` by ``factor``."""

    def hook(gen):
        g = gen.gamma.copy()
        g[index, index] *= factor
        return replace(gen, gamma=g)

    return hook
