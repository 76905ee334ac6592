import json

import numpy as np
import pytest

from fairwelfare import ScenarioError, SolveStatus, SolverConfig, solve_constrained
from fairwelfare.experiments import build_example1
from fairwelfare.scenario import (
    bundled_scenario,
    bundled_scenario_text,
    parse_policy_file,
    parse_scenario,
    report_to_dict,
    serialize_report,
)
from fairwelfare.experiments import Example1Scenario, run_example1
from fairwelfare import PhiFunction


def minimal_doc():
    return {
        "alphabets": {
            "covariates": ["0", "1"],
            "types": ["0", "1"],
            "groups": ["0", "1"],
            "decisions": ["0", "1"],
        },
        "population": {
            "entries": [
                {"x": "0", "y": "0", "g": "0", "mass": 0.375},
                {"x": "0", "y": "1", "g": "0", "mass": 0.125},
                {"x": "1", "y": "1", "g": "1", "mass": 0.375},
                {"x": "1", "y": "0", "g": "1", "mass": 0.125},
            ]
        },
    }


def issues_of(doc):
    with pytest.raises(ScenarioError) as err:
        parse_scenario(json.dumps(doc))
    return err.value.issues


class TestParseScenario:
    def test_bundled_example1_round_trip(self):
        scenario = bundled_scenario("example1")
        mu = build_example1(0.75)
        assert np.max(np.abs(scenario.population.mass - mu.mass)) <= 1e-15
        assert scenario.constraint.kind == "equalized_odds"
        assert scenario.phi == PhiFunction.power(0.5)
        assert scenario.designer_count == 2

    def test_unknown_bundled_name(self):
        with pytest.raises(ScenarioError, match="no bundled scenario"):
            bundled_scenario_text("nope")

    def test_syntax_error_located(self):
        with pytest.raises(ScenarioError, match="<syntax> line"):
            parse_scenario("{not json")

    def test_unknown_keys_rejected(self):
        doc = minimal_doc()
        doc["extra"] = 1
        assert any("unknown key" in i for i in issues_of(doc))

    def test_mass_sum_violation_names_deficit(self):
        doc = minimal_doc()
        doc["population"]["entries"][0]["mass"] = 0.355  # total 0.98
        issues = issues_of(doc)
        assert any("0.98" in i and "not renormalized" in i for i in issues)

    def test_tiny_rounding_residue_is_normalized(self):
        doc = minimal_doc()
        doc["population"]["entries"][0]["mass"] = 0.375 + 4e-10
        scenario = parse_scenario(json.dumps(doc))
        assert abs(scenario.population.mass.sum() - 1.0) <= 1e-12

    def test_undeclared_labels_rejected(self):
        doc = minimal_doc()
        doc["population"]["entries"][0]["x"] = "9"
        assert any("not declared" in i for i in issues_of(doc))

    def test_duplicate_population_entry(self):
        doc = minimal_doc()
        doc["population"]["entries"].append({"x": "0", "y": "0", "g": "0", "mass": 0.0})
        assert any("duplicate" in i for i in issues_of(doc))

    def test_table_with_undeclared_decision(self):
        doc = minimal_doc()
        doc["tables"] = {"utility": {"entries": [{"d": "7", "y": "0", "value": 1.0}]}}
        assert any("tables.utility" in i and "not a declared decision" in i for i in issues_of(doc))

    def test_table_missing_entries_without_default(self):
        doc = minimal_doc()
        doc["tables"] = {"utility": {"entries": [{"d": "0", "y": "0", "value": 1.0}]}}
        assert any("missing entries" in i for i in issues_of(doc))

    def test_table_default_fills(self):
        doc = minimal_doc()
        doc["tables"] = {
            "utility": {"entries": [{"d": "0", "y": "0", "value": 1.0}], "default": 0.25}
        }
        scenario = parse_scenario(json.dumps(doc))
        assert scenario.tables["utility"].value("1", "1") == 0.25

    def test_bad_phi_spec_located(self):
        doc = minimal_doc()
        doc["designers"] = {"welfare": {"phi": "power:2.0"}}
        assert any(i.startswith("designers.welfare.phi") for i in issues_of(doc))

    def test_bad_constraint_kind(self):
        doc = minimal_doc()
        doc["designers"] = {"constrained": {"constraint": "parity"}}
        assert any("designers.constrained.constraint" in i for i in issues_of(doc))

    def test_designated_label_checked_against_types(self):
        doc = minimal_doc()
        doc["alphabets"]["types"] = ["lo", "hi"]
        doc["population"]["entries"] = [
            {"x": "0", "y": "lo", "g": "0", "mass": 0.5},
            {"x": "1", "y": "hi", "g": "1", "mass": 0.5},
        ]
        doc["designers"] = {"constrained": {"constraint": "equal_false_negatives"}}
        assert any("positive label" in i for i in issues_of(doc))

    def test_solver_overrides(self):
        doc = minimal_doc()
        doc["solver"] = {"grid_resolution": 25, "seed": 7}
        scenario = parse_scenario(json.dumps(doc))
        assert scenario.solver == SolverConfig(grid_resolution=25, seed=7)

    def test_solver_rejects_non_integer(self):
        doc = minimal_doc()
        doc["solver"] = {"max_iterations": 10.5}
        assert any("solver.max_iterations" in i for i in issues_of(doc))

    def test_designer_accessors_require_tables(self):
        doc = minimal_doc()
        doc["designers"] = {"constrained": {"constraint": "equalized_odds"}}
        scenario = parse_scenario(json.dumps(doc))
        with pytest.raises(ScenarioError, match="tables.accuracy"):
            scenario.constrained_designer()
        with pytest.raises(ScenarioError, match="designers.welfare"):
            scenario.welfare_designer()


class TestParsePolicyFile:
    def setup_method(self):
        self.alphabets = bundled_scenario("example1").alphabets

    def test_good_policy(self):
        text = json.dumps(
            {"rows": [{"x": "0", "probabilities": [1.0, 0.0]}, {"x": "1", "probabilities": [0.25, 0.75]}]}
        )
        policy = parse_policy_file(text, self.alphabets)
        assert policy.row("1")[1] == pytest.approx(0.75, abs=1e-12)

    def test_row_sum_violation(self):
        text = json.dumps({"rows": [{"x": "0", "probabilities": [0.9, 0.0]}, {"x": "1", "probabilities": [1.0, 0.0]}]})
        with pytest.raises(ScenarioError, match="sums to 0.9"):
            parse_policy_file(text, self.alphabets)

    def test_missing_row(self):
        text = json.dumps({"rows": [{"x": "0", "probabilities": [1.0, 0.0]}]})
        with pytest.raises(ScenarioError, match="missing rows"):
            parse_policy_file(text, self.alphabets)

    def test_duplicate_row(self):
        text = json.dumps(
            {"rows": [{"x": "0", "probabilities": [1.0, 0.0]}, {"x": "0", "probabilities": [1.0, 0.0]}]}
        )
        with pytest.raises(ScenarioError, match="duplicate row"):
            parse_policy_file(text, self.alphabets)

    def test_undeclared_covariate(self):
        text = json.dumps({"rows": [{"x": "z", "probabilities": [1.0, 0.0]}]})
        with pytest.raises(ScenarioError, match="not a declared covariate"):
            parse_policy_file(text, self.alphabets)


class TestSerializeReport:
    def test_example1_report_keys(self):
        rep = run_example1(Example1Scenario(0.75, PhiFunction.power(0.5)))
        data = json.loads(serialize_report(rep, "json"))
        for key in ("sw_welfare", "co_welfare", "jensen_bound", "gap", "violation"):
            assert key in data

    def test_serialization_is_deterministic(self):
        rep = run_example1(Example1Scenario(0.75, PhiFunction.power(0.5)))
        assert serialize_report(rep, "json") == serialize_report(rep, "json")
        assert serialize_report(rep, "csv") == serialize_report(rep, "csv")

    def test_json_is_a_fixed_point_of_reparse(self):
        rep = run_example1(Example1Scenario(0.75, PhiFunction.power(0.5)))
        text = serialize_report(rep, "json")
        again = serialize_report(json.loads(text), "json")
        assert text == again

    def test_floats_rounded_to_12_significant_digits(self):
        mu = build_example1(0.75)
        from fairwelfare import FairnessConstraint, PayoffTable

        res = solve_constrained(
            mu,
            PayoffTable.match_indicator(mu.alphabets),
            FairnessConstraint("equalized_odds", epsilon=1.0 / 3.0),
        )
        text = serialize_report(res, "json")
        data = json.loads(text)
        value = data["policy"]["rows"]["1"][1]
        assert value == float(f"{value:.12g}")

    def test_empty_sweep_csv_is_header_only(self):
        from fairwelfare.experiments import (
            ConstrainedDesigner,
            WelfareDesigner,
            disagreement_sweep,
        )
        from fairwelfare import (
            FairnessConstraint,
            PayoffTable,
            default_alphabets,
        )

        a = default_alphabets((2, 2, 2, 2))
        u = PayoffTable.match_indicator(a)
        rep = disagreement_sweep(
            a,
            ConstrainedDesigner(u, FairnessConstraint("equalized_odds")),
            WelfareDesigner(u, PhiFunction.power(0.5)),
            count=0,
            seed=0,
        )
        lines = serialize_report(rep, "csv").splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("index,")

    def test_unknown_format_rejected(self):
        rep = run_example1(Example1Scenario(0.75, PhiFunction.power(0.5)))
        from fairwelfare import ConfigurationError

        with pytest.raises(ConfigurationError, match="unknown output format"):
            serialize_report(rep, "yaml")
