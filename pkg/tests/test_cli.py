import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from meanforce.cli import EXIT_CONFIG, EXIT_GATE, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, main
from meanforce.validation import CHECKS, mutate_rate, run_validation

ROOT = Path(__file__).resolve().parents[1]
DATA = Path(__file__).parent / "data"


def write(path, text):
    path.write_text(text)
    return path


EQ_TOML = """
[model]
kind = "single_oscillator"
omega = 1.5
[grid]
lambda = [0.0, 0.2]
beta = 1.0
[run]
methods = ["exact", "mfg_weak", "bare_gibbs"]
"""


class TestEquilibrium:
    def test_writes_csv_and_svgs(self, tmp_path):
        cfg = write(tmp_path / "eq.toml", EQ_TOML)
        assert main(["equilibrium", str(cfg), "--out", str(tmp_path / "o"), "-q"]) == EXIT_OK
        rows = list(csv.DictReader((tmp_path / "o" / "eq.csv").open()))
        assert len(rows) == 6 and {r["status"] for r in rows} == {"ok"}
        assert len(list((tmp_path / "o").glob("*.svg"))) == 2

    def test_golden_csv(self, tmp_path):
        assert main(["equilibrium", str(DATA / "fig2_small.toml"), "--out", str(tmp_path), "--no-plots", "-q"]) == 0
        new = list(csv.DictReader((tmp_path / "fig2_small.csv").open()))
        old = list(csv.DictReader((DATA / "fig2_small.csv").open()))
        assert [r["method"] for r in new] == [r["method"] for r in old]
        for a, b in zip(new, old):
            for col in ("population", "abs_coherence", "trace_distance_to_exact"):
                assert float(a[col]) == pytest.approx(float(b[col]), rel=1e-9, abs=1e-12)

    def test_exact_failure_is_numerical(self, tmp_path):
        cfg = write(tmp_path / "n.toml", EQ_TOML.replace("beta = 1.0", "beta = 0.05") + "n_max = 30\n")
        assert main(["equilibrium", str(cfg), "--out", str(tmp_path), "--no-plots", "-q"]) == EXIT_NUMERICAL
        assert "N_max" in (tmp_path / "n.csv").read_text()


class TestExitCodes:
    def test_empty_config(self, tmp_path):
        assert main(["equilibrium", str(write(tmp_path / "e.toml", "")), "-q"]) == EXIT_CONFIG

    def test_missing_config(self, tmp_path):
        assert main(["hmf", str(tmp_path / "none.toml"), "-q"]) == EXIT_CONFIG

    def test_wrong_scenario_kind(self):
        assert main(["dynamics", str(ROOT / "configs" / "fig1_lambda_sweep.toml"), "-q"]) == EXIT_CONFIG

    def test_heom_gate(self, tmp_path):
        cfg = write(tmp_path / "g.toml", '[model]\nkind = "drude_lorentz"\nbeta = 2.0\n[time]\nt_max = 1.0\ndt = 0.5\n')
        assert main(["dynamics", str(cfg), "--out", str(tmp_path), "-q"]) == EXIT_GATE

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
        with pytest.raises(SystemExit):
            main(["equilibrium", "x.toml", "--jobs", "0"])

    def test_plot_errors(self, tmp_path):
        spec = write(tmp_path / "p.toml", 'x = "t"\n')
        assert main(["plot", str(tmp_path / "none.csv"), str(spec), "-q"]) == EXIT_CONFIG
        empty = write(tmp_path / "e.csv", "method,t,population\n")
        assert main(["plot", str(empty), str(spec), "-q"]) == EXIT_CONFIG
        assert main(["plot", str(empty), str(tmp_path / "none.toml"), "-q"]) == EXIT_CONFIG


class TestCommands:
    def test_dynamics(self, tmp_path):
        cfg = write(tmp_path / "d.toml", '[model]\nkind = "drude_lorentz"\nreorg = 0.05\n[time]\nt_max = 1.0\n'
                                         'dt = 0.5\n[run]\nmethods = ["heom", "br_full_bare", "br_secular_refined_high_t"]\n')
        assert main(["dynamics", str(cfg), "--out", str(tmp_path), "-q", "--tol", "1e-5"]) == EXIT_OK
        summary = list(csv.DictReader((tmp_path / "d_summary.csv").open()))
        assert [r["method"] for r in summary] == ["heom", "br_full_bare", "br_secular_refined_high_t"]
        assert len(list(tmp_path.glob("d_*.svg"))) == 4

    def test_hmf(self, capsys):
        assert main(["hmf", str(ROOT / "configs" / "dynamics_weak_coupling.toml"), "-q"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("# reorg=0.01 beta=0.5 gamma=0.5") and "high_t:" in out

    def test_plot(self, tmp_path, capsys):
        spec = ROOT / "configs" / "plots" / "beta_sweep.toml"
        assert main(["plot", str(DATA / "fig2_small.csv"), str(spec), "--out", str(tmp_path), "-q"]) == EXIT_OK
        assert len(capsys.readouterr().out.split()) == 2

    def test_module_entry_point(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "meanforce.cli", "equilibrium", str(tmp_path / "x.toml")],
                             capture_output=True, text=True)
        assert res.returncode == EXIT_CONFIG and "not found" in res.stderr


class TestValidate:
    def test_clean_build_passes(self, tmp_path, capsys):
        assert main(["validate", "--out", str(tmp_path), "-q"]) == EXIT_OK
        report = json.loads((tmp_path / "validation.json").read_text())
        assert report["passed"] and [c["name"] for c in report["checks"]] == list(CHECKS)
        assert capsys.readouterr().out.count("PASS") == len(CHECKS)

    def test_one_percent_rate_mutation_is_caught(self):
        report = run_validation(generator_hook=mutate_rate(1.01), only={"detailed_balance"})
        assert not report["passed"]

    def test_mutation_of_other_rate_is_caught(self):
        assert not run_validation(generator_hook=mutate_rate(1.01, index=2), only={"detailed_balance"})["passed"]

    def test_crashing_check_fails(self):
        def hook(gen):
            raise RuntimeError("boom")
        report = run_validation(generator_hook=hook, only={"generator_structure"})
        assert not report["passed"] and "boom" in report["checks"][0]["detail"]

    def test_failure_exit_code(self, tmp_path, monkeypatch):
        monkeypatch.setitem(CHECKS, "always_fails", lambda: (False, "forced"))
        assert main(["validate", "--out", str(tmp_path), "-q"]) == EXIT_VALIDATION
