"""Scenario runners behind the command line: equilibrium sweeps and dynamics comparisons.

Grid points are independent. They are dispatched to a process pool when more
than one job is requested and always collected in grid order, so the emitted
rows do not depend on scheduling.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .bath import DrudeLorentzBath, reorg_moments
from .config import DynamicsConfig, EquilibriumConfig
from .errors import ConvergenceError, MeanForceError
from .exact import SingleOscillatorModel, exact_equilibrium
from .heom import build_hierarchy, converge_depth, heom_steady_state
from .master_eq import build_redfield, propagate, reference_hamiltonian, steady_state
from .mean_force import hmf_exponential, hmf_high_temperature, hmf_weak, mfg_weak, state_from_hmf
from .operators import abs_coherence, gibbs_state, population, trace_distance

EQUILIBRIUM_COLUMNS = (
    "method", "lambda", "beta", "omega", "population", "abs_coherence",
    "trace_distance_to_exact", "status", "message",
)
DYNAMICS_COLUMNS = (
    "method", "reorg", "beta", "t", "population", "abs_coherence",
    "trace_distance_to_heom", "status", "message",
)
SUMMARY_COLUMNS = (
    "method", "reorg", "beta", "integrated_trace_distance", "max_trace_distance",
    "steady_population", "steady_abs_coherence", "steady_trace_distance_to_target",
    "heom_depth", "status", "message",
)

# the failures a single approximation is allowed to have without stopping the run
RECOVERABLE = (MeanForceError, np.linalg.LinAlgError, FloatingPointError, OverflowError)


def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(row.get(c)) for c in columns])
    return path


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


def _observables(rho):
    return population(rho, 1), abs_coherence(rho, 0, 1)


# ---------------------------------------------------------------- equilibrium


def _approximate_state(method, model: SingleOscillatorModel, beta):
    hs, cps = model.h_s, model.couplings
    bath = model.bath
    if method == "bare_gibbs":
        return gibbs_state(hs, beta)
    if method == "mfg_weak":
        return mfg_weak(hs, cps, bath, beta, model.lam)
    if method == "hmf_weak":
        return hmf_weak(hs, cps, bath, beta, model.lam).rho
    if method == "hmf_exponential":
        return state_from_hmf(hmf_exponential(hs, cps, bath, beta, model.lam).h_mf, beta)
    if method == "hmf_high_t":
        moments = reorg_moments(bath.scaled(model.lam))
        return state_from_hmf(hmf_high_temperature(hs, cps, moments, beta, "single_coupling").h_mf, beta)
    raise ValueError(f"unknown method {method!r}")


def equilibrium_point(args):
    """All requested methods at one ``(omega, lambda, beta)`` grid point."""
    cfg, omega, lam, beta = args
    model = SingleOscillatorModel(eps=cfg.eps, omega_osc=omega, g=cfg.g, lam=lam)
    base = {"lambda": lam, "beta": beta, "omega": omega}
    exact_rho, exact_msg = None, ""
    try:
        exact_rho = exact_equilibrium(model, beta, tol=cfg.tol, n_max=cfg.n_max).rho
    except RECOVERABLE as exc:
        exact_msg = f"{type(exc).__name__}: {exc}"
    rows = []
    for method in cfg.methods:
        row = dict(base, method=method, status="ok", message="")
        try:
            if method == "exact":
                if exact_rho is None:
                    raise ConvergenceError(exact_msg)
                rho = exact_rho
            else:
                rho = _approximate_state(method, model, beta)
            p, c = _observables(rho)
            row.update(population=p, abs_coherence=c,
                       trace_distance_to_exact=trace_distance(rho, exact_rho) if exact_rho is not None else np.nan)
        except RECOVERABLE as exc:
            row.update(population=np.nan, abs_coherence=np.nan, trace_distance_to_exact=np.nan,
                       status="failed", message=f"{type(exc).__name__}: {exc}")
        rows.append(row)
    return rows


def equilibrium_grid(cfg: EquilibriumConfig):
    return [(cfg, w, lam, b) for w in cfg.omegas for b in cfg.betas for lam in cfg.lambdas]


def run_equilibrium(cfg: EquilibriumConfig, jobs: int = 1) -> list:
    out = []
    for rows in _map(equilibrium_point, equilibrium_grid(cfg), jobs):
        out.extend(rows)
    return out


# ------------------------------------------------------------------- dynamics


@dataclass(frozen=True)
class DynamicsPoint:
    rows: list
    summary: list
    heom_depth: int


def _parse_br(method):
    # br_<mode>_bare or br_<mode>_refined_<kind>
    parts = method.split("_", 2)
    mode, rest = parts[1], parts[2]
    return mode, ("bare" if rest == "bare" else rest[len("refined_"):])


def _integrated(t, dist):
    return float(np.sum(0.5 * (dist[1:] + dist[:-1]) * np.diff(t)))


def dynamics_point(args):
    """HEOM reference plus every requested master equation at one ``(reorg, beta)``."""
    cfg, reorg, beta = args
    from .exact import coupling_operator, system_hamiltonian

    hs = system_hamiltonian(cfg.eps)
    a = coupling_operator()
    bath = DrudeLorentzBath(reorg, cfg.cutoff)
    rho0 = np.diag([0.0, 1.0]).astype(complex)
    t = cfg.t_grid
    base = {"reorg": reorg, "beta": beta}

    # the reference is always needed for the distance columns
    depth, heom = converge_depth(lambda k: build_hierarchy(hs, a, bath, beta, k), rho0, t,
                                 tol=cfg.heom_tol, k_max=cfg.k_max)
    heom_ss = heom_steady_state(build_hierarchy(hs, a, bath, beta, depth))

    rows, summary = [], []

    def emit(method, traj, ss, target, status="ok", message=""):
        if traj is None:
            for ti in list(t) + [np.inf]:
                rows.append(dict(base, method=method, t=ti, population=np.nan, abs_coherence=np.nan,
                                 trace_distance_to_heom=np.nan, status=status, message=message))
            summary.append(dict(base, method=method, integrated_trace_distance=np.nan,
                                max_trace_distance=np.nan, steady_population=np.nan,
                                steady_abs_coherence=np.nan, steady_trace_distance_to_target=np.nan,
                                heom_depth=depth, status=status, message=message))
            return
        dist = np.array([trace_distance(x, y) for x, y in zip(traj.states, heom.states)])
        for ti, rho, di in zip(t, traj.states, dist):
            p, c = _observables(rho)
            rows.append(dict(base, method=method, t=ti, population=p, abs_coherence=c,
                             trace_distance_to_heom=di, status=status, message=message))
        p, c = _observables(ss)
        rows.append(dict(base, method=method, t=np.inf, population=p, abs_coherence=c,
                         trace_distance_to_heom=trace_distance(ss, heom_ss), status=status, message=message))
        summary.append(dict(base, method=method, integrated_trace_distance=_integrated(t, dist),
                            max_trace_distance=float(dist.max()), steady_population=p, steady_abs_coherence=c,
                            steady_trace_distance_to_target=trace_distance(ss, target) if target is not None else np.nan,
                            heom_depth=depth, status=status, message=message))

    for method in cfg.methods:
        if method == "heom":
            emit(method, heom, heom_ss, None)
            continue
        mode, kind = _parse_br(method)
        try:
            h_ref = reference_hamiltonian(kind, hs, [a], bath, beta)
            gen = build_redfield(h_ref, [a], bath, beta, mode=mode, refined_with=kind)
            traj = propagate(gen, rho0, t)
            ss = steady_state(gen)
            # the secular steady state should be the Gibbs state of the reference Hamiltonian
            target = gibbs_state(h_ref, beta) if mode == "secular" else None
            emit(method, traj, ss, target)
        except RECOVERABLE as exc:
            emit(method, None, None, None, "failed", f"{type(exc).__name__}: {exc}")
    return DynamicsPoint(rows, summary, depth)


def dynamics_grid(cfg: DynamicsConfig):
    return [(cfg, r, b) for r in cfg.reorgs for b in cfg.betas]


def run_dynamics(cfg: DynamicsConfig, jobs: int = 1):
    """Returns ``(trajectory rows, summary rows)``."""
    rows, summary = [], []
    for res in _map(dynamics_point, dynamics_grid(cfg), jobs):
        rows.extend(res.rows)
        summary.extend(res.summary)
    return rows, summary


def check_dynamics_gate(cfg: DynamicsConfig) -> None:
    from .errors import ValidityGateError

    for b in cfg.betas:
        if b * cfg.cutoff >= 1:
            raise ValidityGateError(f"HEOM reference needs beta*gamma < 1 (beta={b:g}, gamma={cfg.cutoff:g})")


# ------------------------------------------------------------------------ hmf


def hmf_table(cfg):
    """``[(label, {method: matrix or error string})]`` for every grid point."""
    out = []
    if isinstance(cfg, EquilibriumConfig):
        for w in cfg.omegas:
            for b in cfg.betas:
                for lam in cfg.lambdas:
                    model = SingleOscillatorModel(eps=cfg.eps, omega_osc=w, g=cfg.g, lam=lam)
                    mats = {}
                    for name, fn in (
                        ("exact", lambda: exact_equilibrium(model, b, tol=cfg.tol, n_max=cfg.n_max).h_mf),
                        ("hmf_weak", lambda: hmf_weak(model.h_s, model.couplings, model.bath, b, lam).h_mf),
                        ("hmf_exponential", lambda: hmf_exponential(model.h_s, model.couplings, model.bath, b, lam).h_mf),
                        ("hmf_high_t", lambda: hmf_high_temperature(
                            model.h_s, model.couplings, reorg_moments(model.bath.scaled(lam)), b, "single_coupling").h_mf),
                    ):
                        try:
                            mats[name] = fn()
                        except RECOVERABLE as exc:
                            mats[name] = f"{type(exc).__name__}: {exc}"
                    out.append((f"omega={fmt(w)} beta={fmt(b)} lambda={fmt(lam)}", mats))
        return out
    from .exact import coupling_operator, system_hamiltonian

    hs, a = system_hamiltonian(cfg.eps), coupling_operator()
    for r in cfg.reorgs:
        for b in cfg.betas:
            bath = DrudeLorentzBath(r, cfg.cutoff)
            mats = {}
            for kind in ("bare", "mfg_numerator", "weak", "exponential", "high_t"):
                try:
                    mats[kind] = reference_hamiltonian(kind, hs, [a], bath, b)
                except RECOVERABLE as exc:
                    mats[kind] = f"{type(exc).__name__}: {exc}"
            out.append((f"reorg={fmt(r)} beta={fmt(b)} gamma={fmt(cfg.cutoff)}", mats))
    return out


def format_matrix(m) -> str:
    if isinstance(m, str):
        return "  " + m
    lines = []
    for row in np.asarray(m):
        lines.append("  [" + ", ".join(f"{fmt(z.real)}{'+' if z.imag >= 0 else '-'}{fmt(abs(z.imag))}j" for z in row) + "]")
    return "\n".join(lines)


def with_tol(cfg, tol):
    """Override the scenario tolerance from the command line."""
    if tol is None:
        return cfg
    if isinstance(cfg, EquilibriumConfig):
        return replace(cfg, tol=tol)
    return replace(cfg, heom_tol=tol)
