"""CLI contract: subcommands, exit codes, CSV determinism, figure emission."""

import hashlib
import os

import pytest

from harnack_lab.cli import main

POWER = "kind=power beta=0.2 center=0 n=1"
CONST = "kind=constant c=1 n=1"


def sha(path):
    return hashlib.sha256(open(path, "rb").read()).hexdigest()


class TestWeightsCmd:
    def test_writes_csv(self, tmp_path):
        rc = main(["weights", "--weight", POWER, "--balls", "both",
                   "--count", "6", "--seed", "3", "--out", str(tmp_path)])
        assert rc == 0
        text = (tmp_path / "weights.csv").read_text()
        assert text.startswith("# seed=3\n")
        assert "duality_product" in text

    def test_constant_weight_zero_wbmo(self, tmp_path):
        rc = main(["weights", "--weight", CONST, "--count", "4",
                   "--out", str(tmp_path)])
        assert rc == 0
        lines = [l for l in (tmp_path / "weights.csv").read_text().splitlines()
                 if l and not l.startswith("#") and not l.startswith("center")]
        assert all(float(l.split(",")[-1]) == 0.0 for l in lines)

    def test_invalid_beta_exit_3(self, tmp_path, capsys):
        rc = main(["weights", "--weight", "kind=power beta=1.5 center=0 n=1",
                   "--out", str(tmp_path)])
        assert rc == 3
        assert "A_{1+1/n}" in capsys.readouterr().err

    def test_parse_error_exit_2(self, tmp_path):
        assert main(["weights", "--weight", "kind=power beta=x",
                     "--out", str(tmp_path)]) == 2
        assert main(["weights", "--out", str(tmp_path)]) == 2

    def test_spec_file(self, tmp_path):
        spec = tmp_path / "w.cfg"
        spec.write_text("[weight]\nkind=power beta=0.5 center=0 n=1\n")
        rc = main(["weights", "--spec", str(spec), "--out", str(tmp_path)])
        assert rc == 0


class TestGeometryCmd:
    def test_checks_pass(self, tmp_path):
        rc = main(["geometry", "--weight", POWER, "--pairs", "1500",
                   "--cylinder", "Y=(0,0) r=1 h=1", "--seed", "2",
                   "--out", str(tmp_path)])
        assert rc == 0
        text = (tmp_path / "geometry.csv").read_text()
        assert "sandwich" in text and "quasi_triangle" in text


class TestCoveringCmd:
    def test_random_gamma_passes(self, tmp_path):
        rc = main(["covering", "--weight", POWER, "--gamma", "random",
                   "--seed", "7", "--out", str(tmp_path)])
        assert rc == 0
        text = (tmp_path / "covering.csv").read_text()
        assert "passed_q0" in text

    def test_deterministic_bytes(self, tmp_path):
        args = ["covering", "--weight", POWER, "--seed", "9",
                "--out", str(tmp_path)]
        main(args)
        h1 = sha(tmp_path / "covering.csv")
        main(args)
        assert sha(tmp_path / "covering.csv") == h1

    def test_plots_flag(self, tmp_path):
        main(["covering", "--weight", CONST, "--seed", "1", "--plots",
              "--out", str(tmp_path)])
        assert (tmp_path / "covering.svg").exists()


class TestSolveCmd:
    def test_problem_file(self, tmp_path):
        prob = tmp_path / "p.cfg"
        prob.write_text(
            "[weight]\nkind=constant c=1 n=1\n"
            "[coefficients]\nkind=constant\n"
            "[grid]\nn=1 box=0,3.141592653589793 nx=32 t0=0 t1=0.1 nt=300\n"
            "[data]\ninitial=sin\nboundary=heat\nf=none\n")
        rc = main(["solve", "--problem", str(prob), "--bin",
                   "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "solution.csv").exists()
        assert (tmp_path / "solution.bin").read_bytes()[:4] == b"HLAB"

    def test_cfl_violation_exit_3(self, tmp_path):
        prob = tmp_path / "p.cfg"
        prob.write_text(
            "[weight]\nkind=constant c=1 n=1\n"
            "[grid]\nn=1 box=0,1 nx=64 t0=0 t1=1 nt=10\n"
            "[data]\ninitial=const:0\n")
        assert main(["solve", "--problem", str(prob),
                     "--out", str(tmp_path)]) == 3

    def test_missing_section_exit_2(self, tmp_path):
        prob = tmp_path / "p.cfg"
        prob.write_text("[weight]\nkind=constant c=1 n=1\n")
        assert main(["solve", "--problem", str(prob),
                     "--out", str(tmp_path)]) == 2


class TestExperimentCmds:
    def test_harnack_csv_and_plot(self, tmp_path):
        rc = main(["harnack", "--weight", POWER, "--count", "3", "--nx", "64",
                   "--seed", "5", "--plots", "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "harnack.csv").exists()
        assert (tmp_path / "ratios.svg").exists()

    def test_harnack_determinism(self, tmp_path):
        args = ["harnack", "--weight", POWER, "--count", "3", "--nx", "64",
                "--seed", "5", "--out", str(tmp_path)]
        main(args)
        h1 = sha(tmp_path / "harnack.csv")
        main(args)
        assert sha(tmp_path / "harnack.csv") == h1

    def test_harnack_spread_check(self, tmp_path):
        rc = main(["harnack", "--weight", CONST, "--count", "2", "--nx", "64",
                   "--scales", "0.5,1.0,2.0", "--max-spread", "1.25",
                   "--out", str(tmp_path)])
        assert rc == 0

    def test_growth_both(self, tmp_path):
        rc = main(["growth", "--weight", "kind=power beta=0.1 center=0 n=1",
                   "--count", "2", "--kind", "both", "--deltas", "0.05,0.2",
                   "--out", str(tmp_path)])
        assert rc == 0

    def test_growth_propup(self, tmp_path):
        rc = main(["growth", "--weight", POWER, "--count", "2",
                   "--kind", "propup", "--out", str(tmp_path)])
        assert rc == 0

    def test_liouville(self, tmp_path):
        rc = main(["liouville", "--weight", CONST, "--count", "2",
                   "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "liouville.csv").exists()

    def test_hoelder(self, tmp_path):
        rc = main(["hoelder", "--weight", POWER, "--count", "2",
                   "--out", str(tmp_path)])
        assert rc == 0

    def test_experiment_config_file(self, tmp_path):
        cfg = tmp_path / "h.cfg"
        cfg.write_text("[weight]\nkind=power beta=0.2 center=0 n=1\n"
                       "[ensemble]\ncount=2 seed=4 nx=64 scales=1.0\n")
        rc = main(["harnack", "--config", str(cfg), "--out", str(tmp_path)])
        assert rc == 0
        text = (tmp_path / "harnack.csv").read_text()
        assert text.count("\n") >= 3

    def test_beta_sweep(self, tmp_path):
        rc = main(["harnack", "--weight", CONST, "--beta-sweep", "0.05,0.2",
                   "--count", "2", "--nx", "48", "--out", str(tmp_path)])
        assert rc == 0
        text = (tmp_path / "harnack_beta_sweep.csv").read_text()
        assert "max_ratio" in text

    def test_threads_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("HARNACK_LAB_THREADS", "2")
        args = ["harnack", "--weight", POWER, "--count", "4", "--nx", "64",
                "--seed", "5", "--threads", "1", "--out", str(tmp_path)]
        assert main(args) == 0
        h1 = sha(tmp_path / "harnack.csv")
        monkeypatch.delenv("HARNACK_LAB_THREADS")
        main(args)
        # report bytes identical regardless of scheduling
        assert sha(tmp_path / "harnack.csv") == h1


class TestParser:
    def test_unknown_command_exit_2(self):
        assert main(["frobnicate"]) == 2

    def test_seventeen_digit_floats(self, tmp_path):
        main(["weights", "--weight", POWER, "--count", "3",
              "--out", str(tmp_path)])
        body = [l for l in (tmp_path / "weights.csv").read_text().splitlines()
                if l and not l.startswith(("#", "center"))]
        val = body[0].split(",")[2]
        assert float(val) == float(f"{float(val):.17g}")
