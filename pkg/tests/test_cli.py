import json
import pathlib
import subprocess
import sys

import pytest

from mcft.cli import main

MODEL = str(pathlib.Path(__file__).resolve().parents[1] / "models" / "string.mcft")


def run_cli(*argv):
    """In-process CLI invocation capturing stdout."""
    import contextlib
    import io

    out = io.StringIO()
    err = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main(list(argv))
    return code, out.getvalue(), err.getvalue()


class TestDerive:
    def test_theta_line(self):
        code, out, _ = run_cli("derive", MODEL)
        assert code == 0
        assert (
            "Theta_L = (rho*y_t^2/2 - tau*y_x^2/2 + gamma*s_t) dt^dx + tau*y_x dt^dy"
            " + dt^ds_x + rho*y_t dx^dy - dx^ds_t" in out
        )
        assert "sigma_L = gamma dt" in out
        assert "rho*gamma*y_t + rho*y_tt - tau*y_xx = 0" in out

    def test_hamiltonian_outputs(self):
        code, out, _ = run_cli("derive", "--hamiltonian", MODEL)
        assert code == 0
        assert "H = p_t^2/(2*rho) - p_x^2/(2*tau) + gamma*s_t" in out
        assert "p_t = rho*y_t" in out and "p_x = -tau*y_x" in out

    def test_zero_lagrangian_theta(self, tmp_path):
        # L = 0 keeps only the action block: Theta_L = ds_t^dx - ds_x^dt
        p = tmp_path / "zero.mcft"
        p.write_text("coords t x\nfields y\nlagrangian 0*dy[t]\n")
        code, out, _ = run_cli("derive", str(p))
        assert code == 0
        assert "Theta_L = dt^ds_x - dx^ds_t" in out

    def test_parse_error_exit_2(self, tmp_path):
        p = tmp_path / "bad.mcft"
        p.write_text("coords t x\nlagrangian 1\n")
        code, _, err = run_cli("derive", str(p))
        assert code == 2
        assert "field" in err

    def test_singular_exit_3(self, tmp_path):
        p = tmp_path / "sing.mcft"
        p.write_text("coords t x\nfields y\nlagrangian dy[t]\n")
        code, _, err = run_cli("derive", "--hamiltonian", str(p))
        assert code == 3

    def test_missing_file_exit_2(self):
        code, _, err = run_cli("derive", "/nonexistent/file.mcft")
        assert code == 2


class TestCheckSymmetry:
    def test_field_shift(self):
        code, out, _ = run_cli("check-symmetry", MODEL, "Y")
        assert code == 0
        assert "strong-noether" in out
        assert "-tau*y_x dt - rho*y_t dx" in out

    def test_action_shift_damped(self):
        code, out, _ = run_cli("check-symmetry", MODEL, "S")
        assert code == 1
        assert "not-noether" in out
        assert "witness" in out

    def test_action_shift_undamped(self, tmp_path):
        p = tmp_path / "undamped.mcft"
        p.write_text(
            "coords t x\nfields y\nparams rho=1 tau=1\n"
            "lagrangian 0.5*(rho*dy[t]^2 - tau*dy[x]^2)\nsymmetry S: d/ds[t]\n"
        )
        code, out, _ = run_cli("check-symmetry", str(p), "S")
        assert code == 0
        assert "strong-noether" in out

    def test_unknown_name_exit_2(self):
        code, _, err = run_cli("check-symmetry", MODEL, "nope")
        assert code == 2


class TestCurrent:
    def test_current_output(self):
        code, out, _ = run_cli("current", MODEL, "Y")
        assert code == 0
        assert "xi_Y = -tau*y_x dt - rho*y_t dx" in out

    def test_warns_for_non_noether_but_still_computes(self):
        code, out, _ = run_cli("current", MODEL, "S")
        assert code == 0
        assert "xi_S = dx" in out
        assert "warning" in out


class TestSopde:
    def test_family(self):
        code, out, _ = run_cli("sopde", MODEL)
        assert code == 0
        assert "free component functions: A5, A7, B4, B5, B6, B7" in out
        assert "A4 = tau*B5/rho - gamma*y_t" in out

    def test_singular_exit_3(self, tmp_path):
        p = tmp_path / "sing.mcft"
        p.write_text("coords t x\nfields y\nlagrangian dy[t]\n")
        code, _, err = run_cli("sopde", str(p))
        assert code == 3


class TestVerifyLaw:
    def test_main_scenario_passes(self):
        code, out, _ = run_cli("verify-law", MODEL, "Y", "main")
        assert code == 0
        assert "PASS" in out

    def test_json_verdict(self):
        code, out, _ = run_cli("--json", "--seed", "1", "verify-law", MODEL, "Y", "main")
        assert code == 0
        rep = json.loads(out)
        assert rep["outputs"]["passed"] is True
        assert abs(rep["outputs"]["decay_fit"] - 0.1) <= 1e-3
        for r in rep["outputs"]["convergence_ratios"]:
            assert 3.2 <= r <= 4.8

    def test_zero_data_all_norms_zero(self, tmp_path):
        p = tmp_path / "quiet.mcft"
        p.write_text(
            "coords t x\nfields y\nparams rho=1 tau=1 gamma=0.1\n"
            "lagrangian 0.5*(rho*dy[t]^2 - tau*dy[x]^2) - gamma*s[t]\n"
            "symmetry Y: d/dy\n"
            "scenario quiet { bc periodic; grid nx=16 t=0.5; init y0 = 0; init v0 = 0; }\n"
        )
        code, out, _ = run_cli("--json", "verify-law", str(p), "Y", "quiet")
        assert code == 0
        rep = json.loads(out)
        assert all(n["l2"] == 0.0 for n in rep["outputs"]["norms"])

    def test_cfl_violation_exit_3(self, tmp_path):
        p = tmp_path / "cfl.mcft"
        p.write_text(
            "coords t x\nfields y\nparams rho=1 tau=1 gamma=0\n"
            "lagrangian 0.5*(rho*dy[t]^2 - tau*dy[x]^2)\nsymmetry Y: d/dy\n"
            "scenario hot { bc periodic; grid nx=16 cfl=2 t=1; init y0 = 0; init v0 = 0; }\n"
        )
        code, _, err = run_cli("verify-law", str(p), "Y", "hot")
        assert code == 3

    def test_unknown_scenario_exit_2(self):
        code, _, _ = run_cli("verify-law", MODEL, "Y", "nope")
        assert code == 2

    def test_non_noether_candidate_fails(self):
        code, out, _ = run_cli("verify-law", MODEL, "S", "main")
        assert code == 1
        assert "FAIL" in out


class TestSimulate:
    def test_summary_and_csv(self, tmp_path):
        csv = tmp_path / "traj.csv"
        code, out, _ = run_cli("--json", "simulate", MODEL, "main", "--csv", str(csv))
        assert code == 0
        rep = json.loads(out)
        assert rep["outputs"]["momentum"]["initial"] > 0
        lines = csv.read_text().splitlines()
        assert lines[0] == "t,x,value"
        assert len(lines) > 128


class TestDeterminism:
    def test_identical_seeds_byte_identical_json(self):
        _, a, _ = run_cli("--json", "--seed", "42", "check-symmetry", MODEL, "Y")
        _, b, _ = run_cli("--json", "--seed", "42", "check-symmetry", MODEL, "Y")
        assert a == b
        _, c, _ = run_cli("--json", "--seed", "42", "verify-law", MODEL, "Y", "main")
        _, d, _ = run_cli("--json", "--seed", "42", "verify-law", MODEL, "Y", "main")
        assert c == d

    def test_subprocess_byte_identical(self):
        cmd = [sys.executable, "-m", "mcft.cli", "--json", "--seed", "7", "derive", MODEL]
        a = subprocess.run(cmd, capture_output=True, check=True).stdout
        b = subprocess.run(cmd, capture_output=True, check=True).stdout
        assert a == b

    def test_schema_validation(self):
        import jsonschema

        schema = json.loads(
            (pathlib.Path(__file__).resolve().parents[1] / "src" / "mcft" / "schema" / "report.schema.json").read_text()
        )
        for argv in (
            ["--json", "derive", MODEL],
            ["--json", "check-symmetry", MODEL, "Y"],
            ["--json", "sopde", MODEL],
            ["--json", "verify-law", MODEL, "Y", "main"],
        ):
            _, out, _ = run_cli(*argv)
            jsonschema.validate(json.loads(out), schema)


class TestPaperSign:
    def test_flag_flips_prolonged_component(self, tmp_path):
        p = tmp_path / "lifted.mcft"
        p.write_text(
            "coords t x\nfields y\nparams rho=1 tau=1\n"
            "lagrangian 0.5*(rho*dy[t]^2 - tau*dy[x]^2)\nsymmetry T: t*d/dy\n"
        )
        _, out_flow, _ = run_cli("check-symmetry", str(p), "T")
        _, out_paper, _ = run_cli("--paper-sign", "check-symmetry", str(p), "T")
        assert "t d/dy + d/dy_t" in out_flow
        assert "t d/dy - d/dy_t" in out_paper
