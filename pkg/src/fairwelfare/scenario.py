"""Scenario-file ingestion and report serialization.

Scenario files are strict JSON documents: unknown keys are rejected,
every referenced label must be declared, and probability masses must sum
to one within 1e-9 (documents that need real renormalization are
rejected rather than silently fixed; the residual rounding below 1e-9 is
divided out exactly after validation). Errors are collected with their
document locations and reported together.

Report serialization is deterministic: fixed field order, floats rounded
to 12 significant digits, and serializing a re-parsed report reproduces
the bytes exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from io import StringIO
from typing import Any, Optional

import numpy as np

from .constraints import CONSTRAINT_KINDS, FairnessConstraint
from .errors import ConfigurationError, ScenarioError
from .experiments import (
    AuditReport,
    ComparisonReport,
    ConstrainedDesigner,
    DivergenceReport,
    Example1Report,
    SweepReport,
    WelfareDesigner,
)
from .model import Alphabets, Policy, PopulationDistribution
from .objectives import PayoffTable, PhiFunction
from .solvers import SolveResult, SolverConfig

MASS_SUM_TOL = 1e-9

_ALPHABET_KEYS = ("covariates", "types", "groups", "decisions")
_SOLVER_KEYS = ("grid_resolution", "gradient_tolerance", "max_iterations", "multi_starts", "seed")


@dataclass(frozen=True)
class ScenarioFile:
    """A validated scenario: population, payoff tables, and designer blocks."""

    alphabets: Alphabets
    population: PopulationDistribution
    tables: dict[str, PayoffTable]
    constraint: Optional[FairnessConstraint]
    phi: Optional[PhiFunction]
    solver: SolverConfig

    @property
    def designer_count(self) -> int:
        return int(self.constraint is not None) + int(self.phi is not None)

    def constrained_designer(self) -> ConstrainedDesigner:
        if self.constraint is None:
            raise ScenarioError(["designers.constrained: block is required but missing"])
        if "accuracy" not in self.tables:
            raise ScenarioError(
                ["tables.accuracy: required by the constrained designer but missing"]
            )
        return ConstrainedDesigner(self.tables["accuracy"], self.constraint)

    def welfare_designer(self) -> WelfareDesigner:
        if self.phi is None:
            raise ScenarioError(["designers.welfare: block is required but missing"])
        if "utility" not in self.tables:
            raise ScenarioError(["tables.utility: required by the welfare designer but missing"])
        return WelfareDesigner(self.tables["utility"], self.phi)


class _Issues:
    def __init__(self):
        self.items: list[str] = []

    def add(self, where: str, message: str) -> None:
        self.items.append(f"{where}: {message}")

    def raise_if_any(self) -> None:
        if self.items:
            raise ScenarioError(self.items)


def _expect_object(doc: Any, where: str, allowed: tuple[str, ...], issues: _Issues) -> dict:
    if not isinstance(doc, dict):
        issues.add(where, f"expected an object, got {type(doc).__name__}")
        return {}
    for key in doc:
        if key not in allowed:
            issues.add(f"{where}.{key}", f"unknown key (allowed: {', '.join(allowed)})")
    return doc


def _expect_label(value: Any, where: str, issues: _Issues) -> Optional[str]:
    if not isinstance(value, str):
        issues.add(where, f"labels must be strings, got {value!r}")
        return None
    return value


def _expect_number(value: Any, where: str, issues: _Issues) -> Optional[float]:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        issues.add(where, f"expected a number, got {value!r}")
        return None
    out = float(value)
    if not math.isfinite(out):
        issues.add(where, "number must be finite")
        return None
    return out


def _parse_alphabets(doc: Any, issues: _Issues) -> Optional[Alphabets]:
    obj = _expect_object(doc, "alphabets", _ALPHABET_KEYS, issues)
    lists = {}
    for key in _ALPHABET_KEYS:
        raw = obj.get(key)
        if not isinstance(raw, list) or not raw:
            issues.add(f"alphabets.{key}", "expected a nonempty list of labels")
            return None
        labels = []
        for i, item in enumerate(raw):
            label = _expect_label(item, f"alphabets.{key}[{i}]", issues)
            if label is None:
                return None
            labels.append(label)
        if len(set(labels)) != len(labels):
            issues.add(f"alphabets.{key}", f"duplicate labels in {labels}")
            return None
        lists[key] = tuple(labels)
    return Alphabets(lists["covariates"], lists["types"], lists["groups"], lists["decisions"])


def _parse_population(
    doc: Any, alphabets: Alphabets, issues: _Issues
) -> Optional[PopulationDistribution]:
    obj = _expect_object(doc, "population", ("entries",), issues)
    entries = obj.get("entries")
    if not isinstance(entries, list):
        issues.add("population.entries", "expected a list of {x, y, g, mass} entries")
        return None
    nx, ny, ng, _ = alphabets.shape
    arr = np.zeros((nx, ny, ng))
    seen: set[tuple[int, int, int]] = set()
    ok = True
    for i, entry in enumerate(entries):
        where = f"population.entries[{i}]"
        cell = _expect_object(entry, where, ("x", "y", "g", "mass"), issues)
        idx = []
        for var, key in (("X", "x"), ("Y", "y"), ("G", "g")):
            label = _expect_label(cell.get(key), f"{where}.{key}", issues)
            if label is None:
                ok = False
                continue
            try:
                idx.append(alphabets.index(var, label))
            except ConfigurationError:
                issues.add(f"{where}.{key}", f"label {label!r} is not declared in alphabets")
                ok = False
        mass = _expect_number(cell.get("mass"), f"{where}.mass", issues)
        if mass is None:
            ok = False
        elif mass < 0.0:
            issues.add(f"{where}.mass", f"mass is negative ({mass!r})")
            ok = False
        if not ok:
            continue
        key3 = tuple(idx)
        if key3 in seen:
            issues.add(where, "duplicate entry for this (x, y, g) cell")
            ok = False
            continue
        seen.add(key3)
        arr[key3] = mass
    if not ok:
        return None
    total = float(arr.sum())
    if abs(total - 1.0) > MASS_SUM_TOL:
        issues.add(
            "population.entries",
            f"masses sum to {total:.12g} (off by {total - 1.0:.3g}); "
            "entries are not renormalized automatically",
        )
        return None
    return PopulationDistribution(alphabets, arr / total)


def _parse_table(
    doc: Any, name: str, alphabets: Alphabets, issues: _Issues
) -> Optional[PayoffTable]:
    where = f"tables.{name}"
    obj = _expect_object(doc, where, ("entries", "default"), issues)
    entries = obj.get("entries")
    if not isinstance(entries, list):
        issues.add(f"{where}.entries", "expected a list of {d, y, value} entries")
        return None
    default = None
    if "default" in obj:
        default = _expect_number(obj["default"], f"{where}.default", issues)
        if default is None:
            return None
    parsed: dict[tuple[str, str], float] = {}
    ok = True
    for i, entry in enumerate(entries):
        ewhere = f"{where}.entries[{i}]"
        cell = _expect_object(entry, ewhere, ("d", "y", "value"), issues)
        d = _expect_label(cell.get("d"), f"{ewhere}.d", issues)
        y = _expect_label(cell.get("y"), f"{ewhere}.y", issues)
        value = _expect_number(cell.get("value"), f"{ewhere}.value", issues)
        if d is None or y is None or value is None:
            ok = False
            continue
        if d not in alphabets.decisions:
            issues.add(f"{ewhere}.d", f"label {d!r} is not a declared decision")
            ok = False
        if y not in alphabets.types:
            issues.add(f"{ewhere}.y", f"label {y!r} is not a declared type")
            ok = False
        if not ok:
            continue
        if (d, y) in parsed:
            issues.add(ewhere, f"duplicate entry for decision {d!r}, type {y!r}")
            ok = False
            continue
        parsed[(d, y)] = value
    if not ok:
        return None
    try:
        return PayoffTable.from_entries(alphabets.decisions, alphabets.types, parsed, default)
    except ConfigurationError as exc:
        issues.add(where, str(exc))
        return None


def _parse_constrained(doc: Any, alphabets: Alphabets, issues: _Issues) -> Optional[FairnessConstraint]:
    where = "designers.constrained"
    obj = _expect_object(
        doc, where, ("constraint", "epsilon", "positive_label", "negative_label"), issues
    )
    kind = obj.get("constraint")
    if kind not in CONSTRAINT_KINDS:
        issues.add(
            f"{where}.constraint",
            f"expected one of {', '.join(CONSTRAINT_KINDS)}, got {kind!r}",
        )
        return None
    epsilon = 0.0
    if "epsilon" in obj:
        value = _expect_number(obj["epsilon"], f"{where}.epsilon", issues)
        if value is None:
            return None
        epsilon = value
    positive = obj.get("positive_label", "1")
    negative = obj.get("negative_label", "0")
    try:
        constraint = FairnessConstraint(kind, epsilon, positive, negative)
        constraint.conditioning_events(alphabets)  # validates designated labels
    except ConfigurationError as exc:
        issues.add(where, str(exc))
        return None
    return constraint


def _parse_solver(doc: Any, issues: _Issues) -> Optional[SolverConfig]:
    obj = _expect_object(doc, "solver", _SOLVER_KEYS, issues)
    kwargs = {}
    for key in _SOLVER_KEYS:
        if key not in obj:
            continue
        value = _expect_number(obj[key], f"solver.{key}", issues)
        if value is None:
            return None
        if key != "gradient_tolerance":
            if value != int(value):
                issues.add(f"solver.{key}", f"expected an integer, got {value!r}")
                return None
            value = int(value)
        kwargs[key] = value
    try:
        return SolverConfig(**kwargs)
    except ConfigurationError as exc:
        issues.add("solver", str(exc))
        return None


def parse_scenario(text: str) -> ScenarioFile:
    """Parse and validate a scenario document; raises ScenarioError with a
    location-tagged issue list on any problem."""
    issues = _Issues()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"<syntax> line {exc.lineno} column {exc.colno}: {exc.msg}"])

    root = _expect_object(
        doc, "<root>", ("alphabets", "population", "tables", "designers", "solver"), issues
    )
    if "alphabets" not in root:
        issues.add("alphabets", "required section is missing")
    if "population" not in root:
        issues.add("population", "required section is missing")
    issues.raise_if_any()

    alphabets = _parse_alphabets(root["alphabets"], issues)
    issues.raise_if_any()
    assert alphabets is not None

    population = _parse_population(root["population"], alphabets, issues)

    tables: dict[str, PayoffTable] = {}
    if "tables" in root:
        tobj = _expect_object(root["tables"], "tables", ("utility", "accuracy"), issues)
        for name in ("utility", "accuracy"):
            if name in tobj:
                table = _parse_table(tobj[name], name, alphabets, issues)
                if table is not None:
                    tables[name] = table

    constraint = None
    phi = None
    if "designers" in root:
        dobj = _expect_object(root["designers"], "designers", ("constrained", "welfare"), issues)
        if "constrained" in dobj:
            constraint = _parse_constrained(dobj["constrained"], alphabets, issues)
        if "welfare" in dobj:
            wobj = _expect_object(dobj["welfare"], "designers.welfare", ("phi",), issues)
            spec = wobj.get("phi")
            if not isinstance(spec, str):
                issues.add("designers.welfare.phi", f"expected a phi spec string, got {spec!r}")
            else:
                try:
                    phi = PhiFunction.parse(spec)
                except ConfigurationError as exc:
                    issues.add("designers.welfare.phi", str(exc))

    solver = SolverConfig()
    if "solver" in root:
        parsed = _parse_solver(root["solver"], issues)
        if parsed is not None:
            solver = parsed

    issues.raise_if_any()
    assert population is not None
    return ScenarioFile(
        alphabets=alphabets,
        population=population,
        tables=tables,
        constraint=constraint,
        phi=phi,
        solver=solver,
    )


def bundled_scenario_text(name: str) -> str:
    """Contents of a bundled fixture, e.g. "example1" or "nontrivial_suite/match_indicator"."""
    root = resources.files(__package__) / "fixtures"
    path = root / f"{name}.scenario"
    if not path.is_file():
        available = sorted(
            str(p.name) for p in root.iterdir() if str(p.name).endswith(".scenario")
        )
        raise ScenarioError(
            [f"fixtures: no bundled scenario {name!r} (top-level fixtures: {available})"]
        )
    return path.read_text(encoding="utf-8")


def bundled_scenario(name: str) -> ScenarioFile:
    return parse_scenario(bundled_scenario_text(name))


def parse_policy_file(text: str, alphabets: Alphabets) -> Policy:
    """Parse a policy document: {"rows": [{"x": label, "probabilities": [...]}]}."""
    issues = _Issues()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"<syntax> line {exc.lineno} column {exc.colno}: {exc.msg}"])
    root = _expect_object(doc, "<root>", ("rows",), issues)
    rows = root.get("rows")
    if not isinstance(rows, list):
        issues.add("rows", "expected a list of {x, probabilities} entries")
    issues.raise_if_any()

    nx, _, _, nd = alphabets.shape
    arr = np.full((nx, nd), np.nan)
    for i, entry in enumerate(rows):
        where = f"rows[{i}]"
        cell = _expect_object(entry, where, ("x", "probabilities"), issues)
        label = _expect_label(cell.get("x"), f"{where}.x", issues)
        probs = cell.get("probabilities")
        if label is None:
            continue
        if label not in alphabets.covariates:
            issues.add(f"{where}.x", f"label {label!r} is not a declared covariate")
            continue
        xi = alphabets.index("X", label)
        if not np.isnan(arr[xi]).all():
            issues.add(where, f"duplicate row for covariate {label!r}")
            continue
        if not isinstance(probs, list) or len(probs) != nd:
            issues.add(
                f"{where}.probabilities", f"expected a list of {nd} numbers (decision order)"
            )
            continue
        values = []
        for j, p in enumerate(probs):
            value = _expect_number(p, f"{where}.probabilities[{j}]", issues)
            if value is None or value < 0.0:
                issues.add(f"{where}.probabilities[{j}]", f"probability must be >= 0")
                values = None
                break
            values.append(value)
        if values is None:
            continue
        total = sum(values)
        if abs(total - 1.0) > MASS_SUM_TOL:
            issues.add(f"{where}.probabilities", f"row sums to {total:.12g}, expected 1")
            continue
        arr[xi] = np.asarray(values) / total
    if np.isnan(arr).any() and not issues.items:
        missing = [alphabets.covariates[i] for i in range(nx) if np.isnan(arr[i]).any()]
        issues.add("rows", f"missing rows for covariates {missing}")
    issues.raise_if_any()
    return Policy(alphabets, arr)


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------


def _round12(x: float) -> float:
    return float(f"{float(x):.12g}")


def _policy_dict(policy: Policy) -> dict:
    return {
        "rows": {
            x: [_round12(p) for p in policy.row(x)] for x in policy.alphabets.covariates
        }
    }


def _population_dict(mu: PopulationDistribution) -> dict:
    a = mu.alphabets
    entries = []
    for xi, x in enumerate(a.covariates):
        for yi, y in enumerate(a.types):
            for gi, g in enumerate(a.groups):
                mass = float(mu.mass[xi, yi, gi])
                if mass != 0.0:
                    entries.append({"x": x, "y": y, "g": g, "mass": _round12(mass)})
    return {"entries": entries}


def _solve_result_dict(result: SolveResult) -> dict:
    d = result.diagnostics
    diag: dict[str, Any] = {"iterations": d.iterations}
    if d.gradient_norm is not None:
        diag["gradient_norm"] = _round12(d.gradient_norm)
    if d.lp_pivots is not None:
        diag["lp_pivots"] = d.lp_pivots
    if d.winning_start is not None:
        diag["winning_start"] = d.winning_start
    return {
        "status": result.status.value,
        "objective_value": _round12(result.objective_value),
        "policy": _policy_dict(result.policy),
        "diagnostics": diag,
    }


def report_to_dict(report: Any) -> dict:
    """Plain ordered-dict form of any report type, ready for serialization."""
    if isinstance(report, SolveResult):
        return {"kind": "solve", **_solve_result_dict(report)}
    if isinstance(report, Example1Report):
        return {
            "kind": "example1",
            "delta": _round12(report.delta),
            "epsilon": _round12(report.epsilon),
            "phi": report.phi.spec_string(),
            "sw_welfare": _round12(report.sw_welfare),
            "co_welfare": _round12(report.co_welfare),
            "co_welfare_closed_form": _round12(report.co_welfare_closed_form),
            "jensen_bound": _round12(report.jensen_bound),
            "gap": _round12(report.gap),
            "violation": _round12(report.violation),
            "co_accuracy": _round12(report.co_accuracy),
            "sw_policy": _policy_dict(report.sw_policy),
            "co_policy": _policy_dict(report.co_policy),
        }
    if isinstance(report, DivergenceReport):
        return {
            "kind": "diverge",
            "diverged": report.diverged,
            "delta_threshold": _round12(report.delta_threshold),
            "delta_used": _round12(report.delta_used),
            "witness_types": list(report.witness_types),
            "sw_welfare_at_sw": _round12(report.sw_welfare_at_sw),
            "sw_welfare_at_co": _round12(report.sw_welfare_at_co),
            "constraint_violation_of_sw_policy": _round12(
                report.constraint_violation_of_sw_policy
            ),
            "tv_distance": _round12(report.tv_distance),
            "sw_policy": _policy_dict(report.sw_policy),
            "co_policy": _policy_dict(report.co_policy),
            "population": _population_dict(report.mu_constructed),
        }
    if isinstance(report, ComparisonReport):
        return {
            "kind": "compare",
            "constrained": _solve_result_dict(report.co_result),
            "welfare": _solve_result_dict(report.sw_result),
            "co_accuracy": _round12(report.co_accuracy),
            "sw_welfare": _round12(report.sw_welfare),
            "sw_welfare_at_co": _round12(report.sw_welfare_at_co),
            "co_accuracy_at_sw": _round12(report.co_accuracy_at_sw),
            "welfare_gap": _round12(report.welfare_gap),
            "sw_policy_violation": _round12(report.sw_policy_violation),
            "tv_distance": _round12(report.tv_distance),
            "diverged": report.diverged,
        }
    if isinstance(report, SweepReport):
        rows = []
        for r in report.rows:
            rows.append(
                {
                    "index": r.index,
                    "co_objective": None if r.co_objective is None else _round12(r.co_objective),
                    "sw_objective": None if r.sw_objective is None else _round12(r.sw_objective),
                    "sw_welfare_at_co": (
                        None if r.sw_welfare_at_co is None else _round12(r.sw_welfare_at_co)
                    ),
                    "welfare_gap": None if r.welfare_gap is None else _round12(r.welfare_gap),
                    "sw_policy_violation": (
                        None
                        if r.sw_policy_violation is None
                        else _round12(r.sw_policy_violation)
                    ),
                    "tv_distance": None if r.tv_distance is None else _round12(r.tv_distance),
                    "diverged": r.diverged,
                    "co_oracle_gap": (
                        None if r.co_oracle_gap is None else _round12(r.co_oracle_gap)
                    ),
                    "sw_oracle_gap": (
                        None if r.sw_oracle_gap is None else _round12(r.sw_oracle_gap)
                    ),
                    "error": r.error,
                }
            )
        return {
            "kind": "sweep",
            "count": report.count,
            "seed": report.seed,
            "sizes": list(report.sizes),
            "solved": report.solved,
            "disagreements": report.disagreements,
            "disagreement_rate": (
                None if report.disagreement_rate is None else _round12(report.disagreement_rate)
            ),
            "mean_tv_distance": (
                None if report.mean_tv_distance is None else _round12(report.mean_tv_distance)
            ),
            "mean_welfare_gap": (
                None if report.mean_welfare_gap is None else _round12(report.mean_welfare_gap)
            ),
            "max_oracle_gap": (
                None if report.max_oracle_gap is None else _round12(report.max_oracle_gap)
            ),
            "rows": rows,
        }
    if isinstance(report, AuditReport):
        return {
            "kind": "audit",
            "violations": {k: _round12(v) for k, v in report.violations.items()},
            "jensen_gap": None if report.jensen_gap is None else _round12(report.jensen_gap),
        }
    if isinstance(report, dict):
        return report
    raise ConfigurationError(f"cannot serialize report of type {type(report).__name__}")


def _flatten(prefix: str, value: Any, out: list[tuple[str, str]]) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple)) for v in value):
            out.append((prefix, ";".join(_csv_cell(v) for v in value)))
        else:
            for i, v in enumerate(value):
                _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, _csv_cell(value)))


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def serialize_report(report: Any, fmt: str = "json") -> str:
    """Render a report as canonical JSON or analysis-ready CSV.

    JSON output is a fixed point of serialize-then-parse: re-serializing
    the parsed document reproduces the bytes. Sweep reports render their
    rows as a CSV table; every other report flattens to key,value rows.
    """
    data = report_to_dict(report)
    if fmt == "json":
        return json.dumps(data, indent=2) + "\n"
    if fmt == "csv":
        buf = StringIO()
        if data.get("kind") == "sweep":
            columns = [
                "index",
                "co_objective",
                "sw_objective",
                "sw_welfare_at_co",
                "welfare_gap",
                "sw_policy_violation",
                "tv_distance",
                "diverged",
                "co_oracle_gap",
                "sw_oracle_gap",
                "error",
            ]
            buf.write(",".join(columns) + "\n")
            for row in data["rows"]:
                buf.write(",".join(_csv_cell(row[c]) for c in columns) + "\n")
        else:
            buf.write("key,value\n")
            flat: list[tuple[str, str]] = []
            _flatten("", data, flat)
            for key, value in flat:
                buf.write(f"{key},{value}\n")
        return buf.getvalue()
    raise ConfigurationError(f"unknown output format {fmt!r}; expected json or csv")
