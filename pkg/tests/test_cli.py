import json
from pathlib import Path

import pytest

import fairwelfare
from fairwelfare.cli import main

FIXTURES = Path(fairwelfare.__file__).parent / "fixtures"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_scenario(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def welfare_only_doc():
    doc = json.loads((FIXTURES / "example1.scenario").read_text())
    del doc["designers"]["constrained"]
    del doc["tables"]["accuracy"]
    return doc


def constrained_only_doc():
    doc = json.loads((FIXTURES / "example1.scenario").read_text())
    del doc["designers"]["welfare"]
    del doc["tables"]["utility"]
    return doc


class TestExample1Command:
    def test_reports_closed_form_values(self, capsys):
        code, out, err = run_cli(capsys, "example1", "--delta", "0.75", "--phi", "power:0.5")
        assert code == 0 and err == ""
        data = json.loads(out)
        assert data["sw_welfare"] == pytest.approx(0.866025, abs=1e-6)
        assert data["jensen_bound"] == pytest.approx(0.707107, abs=1e-6)
        assert data["violation"] == 1.0

    def test_byte_deterministic(self, capsys):
        argv = ("example1", "--delta", "0.6", "--phi", "negpow:2")
        _, out1, _ = run_cli(capsys, *argv)
        _, out2, _ = run_cli(capsys, *argv)
        assert out1 == out2

    def test_csv_format(self, capsys):
        code, out, _ = run_cli(
            capsys, "example1", "--delta", "0.75", "--phi", "identity", "--format", "csv"
        )
        assert code == 0
        assert out.splitlines()[0] == "key,value"
        assert any(line.startswith("sw_welfare,0.75") for line in out.splitlines())

    def test_bad_delta_exits_1(self, capsys):
        code, out, err = run_cli(capsys, "example1", "--delta", "0.4", "--phi", "identity")
        assert code == 1
        assert "delta" in err

    def test_grid_check_within_bound(self, capsys):
        code, out, _ = run_cli(
            capsys, "example1", "--delta", "0.75", "--phi", "power:0.5", "--grid-check"
        )
        assert code == 0
        check = json.loads(out)["grid_check"]
        for side in ("constrained", "welfare"):
            assert check[side]["discrepancy"] <= check[side]["bound"] + 1e-9


class TestSolveCommand:
    def test_welfare_solve(self, capsys, tmp_path):
        path = write_scenario(tmp_path, welfare_only_doc())
        code, out, err = run_cli(capsys, "solve", str(path))
        assert code == 0, err
        data = json.loads(out)
        assert data["status"] == "optimal"
        assert data["objective_value"] == pytest.approx(0.8660254, abs=1e-6)

    def test_constrained_solve(self, capsys, tmp_path):
        path = write_scenario(tmp_path, constrained_only_doc())
        code, out, err = run_cli(capsys, "solve", str(path))
        assert code == 0, err
        data = json.loads(out)
        assert data["objective_value"] == pytest.approx(0.5, abs=1e-9)

    def test_two_designers_is_a_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "solve", str(FIXTURES / "example1.scenario"))
        assert code == 1
        assert "exactly one designer" in err

    def test_grid_check(self, capsys, tmp_path):
        path = write_scenario(tmp_path, welfare_only_doc())
        code, out, _ = run_cli(capsys, "solve", str(path), "--grid-check")
        assert code == 0
        check = json.loads(out)["grid_check"]
        assert check["discrepancy"] <= check["bound"] + 1e-9

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "solve", str(tmp_path / "absent.json"))
        assert code == 1
        assert "cannot read file" in err

    def test_invalid_scenario_reports_location(self, capsys, tmp_path):
        doc = welfare_only_doc()
        doc["population"]["entries"][0]["mass"] = 0.1
        path = write_scenario(tmp_path, doc)
        code, _, err = run_cli(capsys, "solve", str(path))
        assert code == 1
        assert "population.entries" in err

    def test_out_flag_writes_file(self, capsys, tmp_path):
        path = write_scenario(tmp_path, welfare_only_doc())
        target = tmp_path / "result.json"
        code, out, _ = run_cli(capsys, "solve", str(path), "--out", str(target))
        assert code == 0
        assert out == ""
        assert json.loads(target.read_text())["status"] == "optimal"


class TestAuditCommand:
    def test_constant_policy_all_clean(self, capsys, tmp_path):
        policy = tmp_path / "policy.json"
        policy.write_text(
            json.dumps(
                {"rows": [{"x": "0", "probabilities": [0.5, 0.5]}, {"x": "1", "probabilities": [0.5, 0.5]}]}
            )
        )
        code, out, err = run_cli(
            capsys, "audit", str(FIXTURES / "example1.scenario"), "--policy", str(policy)
        )
        assert code == 0, err
        data = json.loads(out)
        assert set(data["violations"]) == {
            "equalized_odds",
            "equal_false_negatives",
            "equal_false_positives",
            "statistical_parity",
        }
        assert all(v == 0.0 for v in data["violations"].values())
        assert data["jensen_gap"] == 0.0

    def test_audit_requires_welfare_designer(self, capsys, tmp_path):
        path = write_scenario(tmp_path, constrained_only_doc())
        policy = tmp_path / "policy.json"
        policy.write_text(
            json.dumps(
                {"rows": [{"x": "0", "probabilities": [1.0, 0.0]}, {"x": "1", "probabilities": [1.0, 0.0]}]}
            )
        )
        code, _, err = run_cli(capsys, "audit", str(path), "--policy", str(policy))
        assert code == 1
        assert "designers.welfare" in err


class TestCompareCommand:
    def test_example1_fixture_diverges(self, capsys):
        code, out, err = run_cli(capsys, "compare", str(FIXTURES / "example1.scenario"))
        assert code == 0, err
        data = json.loads(out)
        assert data["diverged"] is True
        assert data["sw_policy_violation"] == 1.0

    def test_agreement_fixture_matches(self, capsys):
        code, out, _ = run_cli(capsys, "compare", str(FIXTURES / "footnote9_agreement.scenario"))
        assert code == 0
        data = json.loads(out)
        assert data["diverged"] is False
        assert data["tv_distance"] <= 1e-6
        assert data["sw_policy_violation"] <= 1e-9

    def test_grid_check_on_bundled_fixtures(self, capsys):
        for fixture in ("example1.scenario", "footnote9_agreement.scenario"):
            code, out, _ = run_cli(capsys, "compare", str(FIXTURES / fixture), "--grid-check")
            assert code == 0
            check = json.loads(out)["grid_check"]
            for side in ("constrained", "welfare"):
                assert check[side]["discrepancy"] <= check[side]["bound"] + 1e-9


class TestDivergeCommand:
    def test_bundled_suite_diverges(self, capsys):
        for name in (
            "match_indicator",
            "asymmetric_stakes",
            "shifted_positive",
            "small_benefit_margin",
            "inverted_preferences",
        ):
            path = FIXTURES / "nontrivial_suite" / f"{name}.scenario"
            code, out, err = run_cli(capsys, "diverge", str(path))
            assert code == 0, err
            assert json.loads(out)["diverged"] is True

    def test_trivial_utility_exits_1(self, capsys, tmp_path):
        doc = json.loads((FIXTURES / "nontrivial_suite" / "match_indicator.scenario").read_text())
        doc["tables"]["utility"]["entries"] = [
            {"d": "0", "y": "0", "value": 0.0},
            {"d": "0", "y": "1", "value": 0.0},
            {"d": "1", "y": "0", "value": 1.0},
            {"d": "1", "y": "1", "value": 1.0},
        ]
        path = write_scenario(tmp_path, doc)
        code, _, err = run_cli(capsys, "diverge", str(path))
        assert code == 1
        assert "trivial" in err


class TestSweepCommand:
    def test_csv_rows_and_determinism(self, capsys):
        argv = ("sweep", "--count", "3", "--seed", "11", "--format", "csv")
        code, out1, err = run_cli(capsys, *argv)
        assert code == 0, err
        assert len(out1.splitlines()) == 4
        _, out2, _ = run_cli(capsys, *argv)
        assert out1 == out2

    def test_bad_sizes_exit_1(self, capsys):
        code, _, err = run_cli(capsys, "sweep", "--count", "1", "--sizes", "2,2")
        assert code == 1
        assert "--sizes" in err


class TestUsageErrors:
    def test_no_command(self, capsys):
        assert run_cli(capsys)[0] == 1

    def test_unknown_command(self, capsys):
        assert run_cli(capsys, "frobnicate")[0] == 1

    def test_unknown_flag(self, capsys):
        assert run_cli(capsys, "example1", "--delta", "0.75", "--phi", "identity", "--nope")[0] == 1

    def test_solver_error_exits_2(self, capsys, monkeypatch):
        from fairwelfare import SolverError
        from fairwelfare import cli as cli_module

        def boom(args):
            raise SolverError("synthetic failure")

        monkeypatch.setitem(cli_module._HANDLERS, "example1", boom)
        code, _, err = run_cli(capsys, "example1", "--delta", "0.75", "--phi", "identity")
        assert code == 2
        assert "synthetic failure" in err
