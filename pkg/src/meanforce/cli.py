"""Command line entry point.

Exit codes: 0 success, 1 validation failure, 2 usage or configuration error,
3 validity-gate violation, 4 numerical failure of a reference calculation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, DynamicsConfig, EquilibriumConfig, load_config
from .errors import MeanForceError, ValidityGateError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_GATE = 3
EXIT_NUMERICAL = 4

log = logging.getLogger("meanforce")


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory (default: results)")
    common.add_argument("--jobs", type=_positive_int, default=1, help="worker processes for grid points")
    common.add_argument("--tol", type=_positive_float, default=None,
                        help="override the scenario tolerance (exact truncation or HEOM depth)")
    common.add_argument("-q", "--quiet", action="store_true", help="only print errors")

    p = argparse.ArgumentParser(prog="meanforce", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("equilibrium", "equilibrium sweep for the qubit plus single oscillator"),
        ("dynamics", "Bloch-Redfield variants against the HEOM reference"),
        ("hmf", "print Hamiltonians of mean force per approximation"),
    ):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("config", type=Path)
        if name != "hmf":
            sp.add_argument("--no-plots", action="store_true", help="skip SVG rendering")
    sub.add_parser("validate", parents=[common], help="run the invariant suite and write a JSON report")
    sp = sub.add_parser("plot", parents=[common], help="render SVGs from a scenario CSV")
    sp.add_argument("csv", type=Path)
    sp.add_argument("plotspec", type=Path)
    return p


def _load(path, expected):
    cfg = load_config(path)
    if not isinstance(cfg, expected):
        want = "single_oscillator" if expected is EquilibriumConfig else "drude_lorentz"
        raise ConfigError(f"this command needs a {want} scenario")
    return cfg


def cmd_equilibrium(args) -> int:
    from .scenarios import EQUILIBRIUM_COLUMNS, run_equilibrium, with_tol, write_csv

    cfg = with_tol(_load(args.config, EquilibriumConfig), args.tol)
    rows = run_equilibrium(cfg, jobs=args.jobs)
    path = write_csv(args.out / f"{cfg.name}.csv", EQUILIBRIUM_COLUMNS, rows)
    log.info("wrote %s (%d rows)", path, len(rows))
    if not args.no_plots:
        from .plotting import default_equilibrium_spec, render_plots

        svgs = render_plots(path, default_equilibrium_spec(cfg))
        log.info("rendered %d SVG files", len(svgs))
    failed = [r for r in rows if r["status"] != "ok"]
    for r in failed:
        log.warning("%s at lambda=%g beta=%g: %s", r["method"], r["lambda"], r["beta"], r["message"])
    if any(r["method"] == "exact" for r in failed):
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_dynamics(args) -> int:
    from .scenarios import (DYNAMICS_COLUMNS, SUMMARY_COLUMNS, check_dynamics_gate, run_dynamics,
                            with_tol, write_csv)

    cfg = with_tol(_load(args.config, DynamicsConfig), args.tol)
    check_dynamics_gate(cfg)
    rows, summary = run_dynamics(cfg, jobs=args.jobs)
    path = write_csv(args.out / f"{cfg.name}.csv", DYNAMICS_COLUMNS, rows)
    spath = write_csv(args.out / f"{cfg.name}_summary.csv", SUMMARY_COLUMNS, summary)
    log.info("wrote %s and %s", path, spath)
    if not args.no_plots:
        from .plotting import default_dynamics_spec, render_plots

        svgs = render_plots(path, default_dynamics_spec(cfg))
        log.info("rendered %d SVG files", len(svgs))
    for r in summary:
        if r["status"] != "ok":
            log.warning("%s at reorg=%g beta=%g: %s", r["method"], r["reorg"], r["beta"], r["message"])
    return EXIT_OK


def cmd_hmf(args) -> int:
    from .scenarios import format_matrix, hmf_table, with_tol

    cfg = with_tol(load_config(args.config), args.tol)
    for label, mats in hmf_table(cfg):
        print(f"# {label}")
        for name, m in mats.items():
            print(f"{name}:")
            print(format_matrix(m))
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_validation, write_report

    report = run_validation()
    path = write_report(report, args.out / "validation.json")
    for c in report["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['detail']}")
    log.info("wrote %s", path)
    return EXIT_OK if report["passed"] else EXIT_VALIDATION


def cmd_plot(args) -> int:
    from .plotting import load_plotspec, render_plots

    try:
        spec = load_plotspec(args.plotspec)
    except FileNotFoundError as exc:
        raise ConfigError(f"plot spec {str(args.plotspec)!r} not found") from exc
    if not args.csv.exists():
        raise ConfigError(f"CSV file {str(args.csv)!r} not found")
    for p in render_plots(args.csv, spec, args.out):
        print(p)
    return EXIT_OK


COMMANDS = {
    "equilibrium": cmd_equilibrium,
    "dynamics": cmd_dynamics,
    "hmf": cmd_hmf,
    "validate": cmd_validate,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    from .plotting import PlotError

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, PlotError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except ValidityGateError as exc:
        log.error("validity gate: %s", exc)
        return EXIT_GATE
    except MeanForceError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
