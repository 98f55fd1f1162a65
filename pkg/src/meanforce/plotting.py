"""SVG rendering of scenario CSV files.

A plot spec says which column runs along the x axis, which columns split the
data into panels, which observables to draw and, optionally, named groups of
methods that go into separate files::

    x = "lambda"
    panels = ["omega", "beta"]
    observables = ["population", "abs_coherence"]

    [[group]]
    name = "full"
    methods = ["heom", "br_full_bare", "br_full_refined_high_t"]

One SVG is written per (group, observable, panel). Output is byte-stable for a
fixed input: the SVG hash salt is pinned and no date is embedded.
"""

from __future__ import annotations

import csv
import math
import sys
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .scenarios import fmt

STYLES = {
    "exact": dict(color="black", lw=1.2, ls="-"),
    "heom": dict(color="black", lw=1.2, ls="-"),
    "mfg_weak": dict(color="tab:blue", lw=1.2, ls="-."),
    "hmf_weak": dict(color="tab:green", lw=1.4, ls=":"),
    "hmf_exponential": dict(color="tab:orange", lw=1.0, ls="--"),
    "hmf_high_t": dict(color="tab:red", lw=2.4, ls="-"),
    "bare_gibbs": dict(color="tab:purple", lw=1.0, ls="--"),
}
_REFINED = {
    "bare": dict(color="tab:purple", lw=1.0, ls="--"),
    "mfg_numerator": dict(color="tab:blue", lw=1.2, ls="-."),
    "weak": dict(color="tab:green", lw=1.4, ls=":"),
    "high_t": dict(color="tab:red", lw=2.4, ls="-"),
}
LABELS = {
    "lambda": r"$\lambda$", "beta": r"$\beta$", "omega": r"$\Omega$", "reorg": r"$\Lambda$", "t": r"$t$",
    "population": r"$\langle 1|\rho|1\rangle$", "abs_coherence": r"$|\langle 0|\rho|1\rangle|$",
    "trace_distance_to_exact": "trace distance to exact", "trace_distance_to_heom": "trace distance to HEOM",
}


class PlotError(ValueError):
    pass


def style_for(method: str) -> dict:
    if method in STYLES:
        return STYLES[method]
    for kind, st in _REFINED.items():
        if method.endswith(kind):
            return st
    return dict(lw=1.0)


def read_rows(csv_path) -> list:
    with Path(csv_path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def load_plotspec(path) -> dict:
    try:
        return tomllib.loads(Path(path).read_text())
    except tomllib.TOMLDecodeError as exc:
        raise PlotError(f"{path}: {exc}") from exc


def _float(s):
    try:
        return float(s)
    except (TypeError, ValueError):
        return math.nan


def render_plots(csv_path, spec: dict, out_dir=None) -> list:
    """Render one SVG per (group, observable, panel); returns the written paths."""
    csv_path = Path(csv_path)
    rows = read_rows(csv_path)
    if not rows:
        raise PlotError(f"{csv_path} has no data rows")
    x = spec.get("x")
    if not x or x not in rows[0]:
        raise PlotError(f"plot spec x={x!r} is not a column of {csv_path.name}")
    panels = list(spec.get("panels", []))
    observables = list(spec.get("observables", ["population", "abs_coherence"]))
    for col in panels + observables:
        if col not in rows[0]:
            raise PlotError(f"column {col!r} not in {csv_path.name}")
    present = list(dict.fromkeys(r["method"] for r in rows))
    groups = spec.get("group") or [{"name": "", "methods": present}]
    out_dir = Path(out_dir) if out_dir is not None else csv_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)

    keys = sorted({tuple(_float(r[p]) for p in panels) for r in rows})
    written = []
    with matplotlib.rc_context({"svg.hashsalt": "meanforce", "svg.fonttype": "path"}):
        for group in groups:
            methods = [m for m in group.get("methods", present) if m in present]
            if not methods:
                continue
            for obs in observables:
                for key in keys:
                    fig = Figure(figsize=(4.0, 3.0))
                    ax = fig.add_subplot()
                    for m in methods:
                        pts = [(_float(r[x]), _float(r[obs])) for r in rows
                               if r["method"] == m and tuple(_float(r[p]) for p in panels) == key]
                        pts = sorted(p for p in pts if math.isfinite(p[0]))
                        if not pts:
                            continue
                        xs, ys = zip(*pts)
                        ax.plot(xs, ys, label=m, **style_for(m))
                    ax.set_xlabel(LABELS.get(x, x))
                    ax.set_ylabel(LABELS.get(obs, obs))
                    title = ", ".join(f"{LABELS.get(p, p)}={fmt(v)}" for p, v in zip(panels, key))
                    if group.get("name"):
                        title = f"{group['name']}: {title}" if title else group["name"]
                    ax.set_title(title, fontsize=9)
                    ax.legend(fontsize=6, frameon=False)
                    fig.tight_layout()
                    parts = [csv_path.stem] + ([group["name"]] if group.get("name") else []) + [obs]
                    parts += [f"{p}{fmt(v)}" for p, v in zip(panels, key)]
                    path = out_dir / ("_".join(parts) + ".svg")
                    fig.savefig(path, format="svg", metadata={"Date": None})
                    written.append(path)
    if not written:
        raise PlotError("nothing to plot for the given spec")
    return written


def default_equilibrium_spec(cfg) -> dict:
    x = "lambda" if len(cfg.lambdas) >= len(cfg.betas) else "beta"
    other = "beta" if x == "lambda" else "lambda"
    spec = {"x": x, "panels": ["omega", other], "observables": ["population", "abs_coherence"]}
    spec.update(cfg.plot)
    return spec


def default_dynamics_spec(cfg) -> dict:
    methods = list(cfg.methods)
    groups = []
    for mode in ("full", "secular"):
        ms = [m for m in methods if m == "heom" or m.startswith(f"br_{mode}_")]
        if len(ms) > ("heom" in ms):
            groups.append({"name": mode, "methods": ms})
    spec = {"x": "t", "panels": ["reorg", "beta"], "observables": ["population", "abs_coherence"],
            "group": groups or [{"name": "", "methods": methods}]}
    spec.update(cfg.plot)
    return spec
