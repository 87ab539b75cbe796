import csv
import io
import json
import math
import subprocess
import sys

import pytest

from plapeig.bounds import BoundReport
from plapeig.cli import OUTPUT_DIR_ENV, main
from plapeig.eigensolve import EigenResult
from plapeig.ptrig import pi_p

import oracles


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestExamples:
    def test_mu_flat_pi(self, capsys):
        code, out, err = run(capsys, "mu", "--p", "2", "--kappa", "0", "--diameter", "3.14159265")
        assert code == 0
        assert json.loads(out)["mu"] == pytest.approx(1.0, rel=1e-6)
        assert "mu_p" in err

    def test_mu_p3(self, capsys):
        code, out, _ = run(capsys, "mu", "--p", "3", "--kappa", "0", "--diameter", "1")
        assert code == 0
        assert json.loads(out)["mu"] == pytest.approx(2 * oracles.pi_p_quadrature(3) ** 3, rel=1e-6)

    def test_verify_sharpness(self, capsys):
        code, out, _ = run(capsys, "verify-sharpness", "--p", "3", "--kappa", "-1",
                           "--diameter", "1", "--grid", "4096")
        rec = json.loads(out)
        assert code == 0
        assert abs(rec["relative_margin"]) < 0.01 and rec["sharp"] is True

    def test_bounds_and_table(self, capsys):
        code, out, _ = run(capsys, "bounds", "--p", "3", "--kappa", "2")
        assert code == 0 and json.loads(out)["regime"] == "lichnerowicz-only"
        code, out, _ = run(capsys, "table", "--p", "2", "3", "--kappa", "-1", "1",
                           "--diameter", "1")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0 and len(rows) == 4

    def test_ptrig(self, capsys):
        code, out, err = run(capsys, "ptrig", "--p", "3", "--t", "0.7", "--format", "json")
        data = json.loads(out)
        assert code == 0 and data["pi_p"] == pytest.approx(pi_p(3))
        (row,) = data["values"]
        assert abs(row["sin_p"]) ** 3 + abs(row["cos_p"]) ** 3 == pytest.approx(1.0, abs=1e-10)

    def test_verify_lich(self, capsys):
        code, out, _ = run(capsys, "verify-lich", "--p", "2", "--kappa", "1", "--diameter", "4",
                           "--grid", "1024")
        assert code == 0 and json.loads(out)["holds"] is True

    def test_verify_gradient(self, capsys):
        code, out, _ = run(capsys, "verify-gradient", "--p", "2", "--kappa", "-1",
                           "--diameter", "1", "--grid", "512", "--seed", "3")
        rec = json.loads(out)
        assert code == 0 and rec["violations"] == 0 and rec["seed"] == 3

    def test_verify_bound_small(self, capsys, tmp_path):
        records = tmp_path / "runs.jsonl"
        code, out, err = run(capsys, "verify-bound", "--p", "2", "--kappa", "-1", "--diameter",
                             "1", "--grid", "256", "--seeds", "2", "--records", str(records),
                             "--format", "csv")
        assert code == 0
        (row,) = list(csv.DictReader(io.StringIO(out)))
        assert row["runs"] == "2" and row["violations"] == "0"
        assert len(records.read_text().splitlines()) == 2
        assert "adjusted violations" in err

    def test_verify_bound_campaign_file(self, capsys, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"p": [1.5], "kappa": -1, "D": 1, "N_list": [256],
                                    "seeds": [4]}))
        code, out, _ = run(capsys, "verify-bound", "--p", "2", "--kappa", "0", "--diameter", "1",
                           "--campaign", str(spec))
        assert code == 0 and json.loads(out)["p"] == 1.5


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ["mu", "--p", "1", "--kappa", "0", "--diameter", "1"],
        ["mu", "--p", "2", "--kappa", "0", "--diameter", "-1"],
        ["mu", "--p", "2", "--kappa", "nan", "--diameter", "1"],
        ["mu", "--p", "2", "--kappa", "0"],
        ["verify-sharpness", "--p", "2", "--kappa", "-1", "--diameter", "1", "--grid", "8"],
        ["nonsense"],
    ])
    def test_usage_errors_exit_one(self, argv, capsys):
        with pytest.raises(SystemExit) as err:
            main(argv)
        assert err.value.code == 1
        assert capsys.readouterr().err.strip().count("\n") <= 1

    def test_lich_wrong_regime(self, capsys):
        code, _, err = run(capsys, "verify-lich", "--p", "1.5", "--kappa", "1", "--diameter", "1")
        assert code == 1 and "p >= 2" in err

    def test_sharpness_wrong_regime(self, capsys):
        code, _, _ = run(capsys, "verify-sharpness", "--p", "3", "--kappa", "1", "--diameter", "1",
                         "--grid", "256")
        assert code == 1

    def test_verdict_failure_exit_two(self, capsys):
        # a very strict threshold turns the sharpness verdict red
        code, out, _ = run(capsys, "verify-sharpness", "--p", "3", "--kappa", "-1",
                           "--diameter", "1", "--grid", "256", "--threshold", "1e-12")
        assert code == 2 and json.loads(out)["sharp"] is False

    def test_numerical_failure_exit_three(self, capsys, monkeypatch):
        import plapeig.cli as cli
        from plapeig.eigensolve import BracketError

        def fail(*args, **kwargs):
            raise BracketError("no sign change")

        monkeypatch.setattr(cli, "mu_shoot", fail)
        code, _, err = run(capsys, "mu", "--p", "2", "--kappa", "-1", "--diameter", "1")
        assert code == 3 and "numerical failure" in err

    def test_console_script(self):
        proc = subprocess.run([sys.executable, "-m", "plapeig.cli", "mu", "--p", "2",
                               "--kappa", "0", "--diameter", "0"], capture_output=True, text=True)
        assert proc.returncode == 1 and proc.stdout == ""


class TestOutputs:
    def test_deterministic_bytes(self, capsys):
        argv = ["verify-gradient", "--p", "1.5", "--kappa", "-1", "--diameter", "1",
                "--grid", "256", "--seed", "7"]
        _, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert first == second

    def test_eigen_result_round_trip(self, capsys):
        _, out, _ = run(capsys, "mu", "--p", "2.5", "--kappa", "-1", "--diameter", "1.5")
        data = json.loads(out)
        assert EigenResult.from_json(data).to_json() == data

    def test_bound_report_round_trip(self, capsys):
        for argv in (["bounds", "--p", "3", "--kappa", "2", "--diameter", "1"],
                     ["bounds", "--p", "1.5", "--kappa", "-1", "--diameter", "1"]):
            _, out, _ = run(capsys, *argv)
            data = json.loads(out)
            assert BoundReport.from_json(data).to_json() == data

    def test_out_file_matches_stdout(self, capsys, tmp_path):
        target = tmp_path / "mu.json"
        _, out, _ = run(capsys, "mu", "--p", "2", "--kappa", "-1", "--diameter", "2",
                        "--out", str(target))
        assert target.read_text() == out

    def test_output_dir_env(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path))
        _, out, _ = run(capsys, "bounds", "--p", "2", "--kappa", "1", "--diameter", "1",
                        "--out", "sub/b.json")
        assert (tmp_path / "sub" / "b.json").read_text() == out

    def test_trajectory_csv(self, capsys, tmp_path):
        target = tmp_path / "phi.csv"
        code, _, _ = run(capsys, "mu", "--p", "2", "--kappa", "0", "--diameter", str(math.pi),
                         "--trajectory", str(target), "--samples", "21")
        rows = list(csv.DictReader(target.open()))
        assert code == 0 and len(rows) == 21
        assert list(rows[0]) == ["t", "theta", "log_r", "w", "dw"]
        for row in rows:
            assert float(row["w"]) == pytest.approx(math.sin(float(row["t"])), abs=1e-6)
