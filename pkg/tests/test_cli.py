import json
import subprocess
import sys

import pytest


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "wignersim", *args],
        capture_output=True,
        timeout=120,
    )


class TestTables:
    def test_assistant_about_f2_at_five_decimals(self):
        result = run_cli(
            "tables", "--preset", "fr", "--model", "ism",
            "--target", "f2", "--given", "a",
        )
        assert result.returncode == 0
        text = result.stdout.decode()
        assert "1.00000" in text and "0.20000" in text
        assert "0.80000" in text and "0.00000" in text
        # Columns ordered by the assistant's basis: o before f.
        header = text.splitlines()[1]
        assert header.index("A=o") < header.index("A=f")

    def test_collapse_column_for_tail_record(self):
        result = run_cli(
            "tables", "--preset", "fr", "--model", "clps:F1",
            "--target", "w", "--given", "f1", "--format", "json",
        )
        assert result.returncode == 0
        payload = json.loads(result.stdout)
        assert payload["columns"]["T"] == {
            "O": 0.0, "F": 1.0, "perp2": 0.0, "perp3": 0.0
        }
        assert payload["columns"]["H"]["F"] == pytest.approx(0.5)

    def test_no_collapse_w_table(self):
        result = run_cli(
            "tables", "--preset", "fr", "--model", "ism",
            "--target", "w", "--given", "f1", "--format", "csv",
        )
        lines = result.stdout.decode().splitlines()
        assert lines[0] == "W,F1=H,F1=T"
        assert lines[1] == "O,0.16667,0.16667"
        assert lines[2] == "F,0.83333,0.83333"

    def test_marginal_and_joint(self):
        marginal = run_cli("tables", "--preset", "fr", "--target", "w")
        assert b"0.16667" in marginal.stdout and b"0.83333" in marginal.stdout
        joint = run_cli("tables", "--preset", "fr", "--joint", "--format", "csv")
        assert b"F1=H,F2=U,A=o,W=O,0.02083" in joint.stdout

    def test_config_file_source(self, tmp_path):
        exported = run_cli("export-preset", "--preset", "fr")
        path = tmp_path / "fr.json"
        path.write_bytes(exported.stdout)
        result = run_cli(
            "tables", "--config", str(path), "--target", "f2", "--given", "a"
        )
        assert result.returncode == 0
        assert b"1.00000" in result.stdout

    def test_usage_errors_exit_2(self):
        assert run_cli("tables", "--target", "w").returncode == 2
        assert run_cli("tables", "--preset", "nope", "--target", "w").returncode == 2
        assert run_cli(
            "tables", "--preset", "fr", "--target", "w", "--digits", "99"
        ).returncode == 2
        assert run_cli("tables", "--preset", "fr").returncode == 2

    def test_impossible_conditioning_exits_3(self):
        result = run_cli(
            "tables", "--preset", "wigner-superposition",
            "--target", "f", "--given", "w", "--given-outcome", "phi-",
        )
        assert result.returncode == 3

    def test_bad_config_exits_2(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert run_cli(
            "tables", "--config", str(path), "--target", "w"
        ).returncode == 2


class TestCheck:
    def test_fr_subjective_collapse_exits_1(self):
        result = run_cli("check", "fr", "--f1-model", "clps", "--format", "json")
        assert result.returncode == 1
        payload = json.loads(result.stdout)
        assert payload["clash"]["time"] == "t4"
        assert payload["clash"]["slot"] == "w"
        assert payload["clash"]["deduced"] == "F"
        assert payload["clash"]["observed"] == "O"

    def test_fr_no_collapse_exits_0(self):
        assert run_cli("check", "fr", "--f1-model", "ism").returncode == 0

    def test_deutsch_exits_1_with_y_clash(self):
        result = run_cli("check", "deutsch")
        assert result.returncode == 1
        text = result.stdout.decode()
        assert "(t2, y)" in text and "y=1" in text

    def test_bad_scenario_exits_2(self):
        assert run_cli("check", "bell").returncode == 2


class TestSample:
    def test_halting_frequency_within_three_sigma(self):
        result = run_cli(
            "sample", "--preset", "fr", "--shots", "120000", "--seed", "7"
        )
        assert result.returncode == 0
        line = next(
            l for l in result.stdout.decode().splitlines() if l.startswith("halting")
        )
        freq = float(line.split("frequency=")[1].split()[0])
        p = 1 / 12
        sigma = (p * (1 - p) / 120000) ** 0.5
        assert abs(freq - p) < 3 * sigma

    def test_zero_shots_empty_histogram(self):
        result = run_cli("sample", "--preset", "fr", "--shots", "0", "--seed", "1")
        assert result.returncode == 0
        assert result.stdout.decode().rstrip().endswith("assignment,count")

    def test_missing_seed_exits_2(self):
        assert run_cli("sample", "--preset", "fr", "--shots", "10").returncode == 2


class TestDeterminism:
    @pytest.mark.parametrize(
        "args",
        [
            ("tables", "--preset", "fr", "--model", "ism", "--target", "f2",
             "--given", "a"),
            ("tables", "--preset", "fr", "--joint", "--format", "csv"),
            ("check", "fr", "--f1-model", "clps", "--format", "json"),
            ("check", "deutsch",),
            ("sample", "--preset", "fr", "--shots", "5000", "--seed", "42"),
            ("export-preset", "--preset", "fr"),
        ],
    )
    def test_byte_identical_across_runs(self, args):
        first = run_cli(*args)
        second = run_cli(*args)
        assert first.stdout == second.stdout
        assert first.returncode == second.returncode
