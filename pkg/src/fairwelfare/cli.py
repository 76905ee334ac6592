"""Command-line interface.

Subcommands:

- ``solve <file>``: run the single designer in a scenario file.
- ``audit <file> --policy <file>``: violations of all four constraint
  kinds plus the dispersion gap for an explicit policy.
- ``compare <file>``: run both designers and report cross-evaluations.
- ``example1 --delta <v> --phi <spec> [--epsilon <v>]``: the bundled
  two-group showcase, no scenario file needed.
- ``diverge <file> [--margin <v>]``: build a population on which the
  file's two designers provably disagree, from its utility table.
- ``sweep --count <n> [--seed <s>] [--sizes x,y,g,d] ...``: compare the
  designers across random populations.

Global flags: ``--format json|csv``, ``--out <path>``, ``--grid-check``
(re-verify solver objectives against the exhaustive grid oracle and
report the discrepancy), ``--seed`` (overrides the scenario's solver
seed; when no scenario is involved, omitting it means seed 0).

Exit codes: 0 success, 1 validation or usage problems (including grid
capacity), 2 solver or numerical failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Any, Optional

from .constraints import CONSTRAINT_KINDS, FairnessConstraint
from .errors import (
    CapacityError,
    ConfigurationError,
    DomainError,
    FairWelfareError,
    ScenarioError,
    SolverError,
    UndefinedConditionalError,
    UnsupportedMeasureError,
)
from .experiments import (
    ConstrainedDesigner,
    Example1Scenario,
    WelfareDesigner,
    audit_policy,
    build_example1,
    compare_designers,
    construct_divergent_population,
    default_alphabets,
    disagreement_sweep,
    run_example1,
)
from .model import PopulationDistribution
from .objectives import PayoffTable, PhiFunction
from .scenario import (
    ScenarioFile,
    _round12,
    parse_policy_file,
    parse_scenario,
    report_to_dict,
    serialize_report,
)
from .solvers import (
    PenalizedAccuracyObjective,
    SolverConfig,
    WelfareObjective,
    grid_oracle,
    grid_rounding_l1,
)

_USAGE_EXIT = 1
_SOLVER_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage problems, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(_USAGE_EXIT)


def _build_parser() -> _Parser:
    parser = _Parser(prog="fairwelfare", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", type=Path, default=None, help="write output to a file")
    common.add_argument(
        "--grid-check",
        action="store_true",
        help="re-verify solver objectives against the exhaustive grid oracle",
    )
    common.add_argument("--seed", type=int, default=None, help="override the solver seed")

    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("solve", parents=[common], help="run the scenario's single designer")
    p.add_argument("file", type=Path)

    p = sub.add_parser("audit", parents=[common], help="audit an explicit policy")
    p.add_argument("file", type=Path)
    p.add_argument("--policy", type=Path, required=True)

    p = sub.add_parser("compare", parents=[common], help="run and compare both designers")
    p.add_argument("file", type=Path)

    p = sub.add_parser("example1", parents=[common], help="two-group showcase run")
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--phi", type=str, required=True)
    p.add_argument("--epsilon", type=float, default=0.0)

    p = sub.add_parser("diverge", parents=[common], help="construct a divergent population")
    p.add_argument("file", type=Path)
    p.add_argument("--margin", type=float, default=0.05)

    p = sub.add_parser("sweep", parents=[common], help="compare designers on random populations")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--sizes", type=str, default="2,2,2,2", help="alphabet sizes x,y,g,d")
    p.add_argument("--phi", type=str, default="power:0.5")
    p.add_argument("--constraint", choices=CONSTRAINT_KINDS, default="equalized_odds")
    p.add_argument("--epsilon", type=float, default=0.0)

    return parser


def _load_scenario(path: Path) -> ScenarioFile:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError([f"{path}: cannot read file ({exc})"])
    return parse_scenario(text)


def _config(base: SolverConfig, seed_override: Optional[int]) -> SolverConfig:
    if seed_override is None:
        return base
    return dataclasses.replace(base, seed=seed_override)


def _welfare_grid_check(mu, designer: WelfareDesigner, solver_objective, cfg) -> dict:
    objective = WelfareObjective(mu, designer.utility, designer.phi)
    oracle = grid_oracle(mu, objective, cfg)
    spacing = grid_rounding_l1(mu.alphabets, cfg.grid_resolution)
    return {
        "solver_objective": _round12(solver_objective),
        "grid_objective": _round12(oracle.objective_value),
        "discrepancy": _round12(abs(solver_objective - oracle.objective_value)),
        "bound": _round12(objective.lipschitz_constant() * spacing),
        "resolution": cfg.grid_resolution,
    }


def _constrained_grid_check(mu, designer: ConstrainedDesigner, solver_objective, cfg) -> dict:
    objective = PenalizedAccuracyObjective(mu, designer.accuracy, designer.constraint)
    oracle = grid_oracle(mu, objective, cfg)
    spacing = grid_rounding_l1(mu.alphabets, cfg.grid_resolution)
    return {
        "solver_objective": _round12(solver_objective),
        "grid_objective": _round12(oracle.objective_value),
        "discrepancy": _round12(abs(solver_objective - oracle.objective_value)),
        "bound": _round12(objective.lipschitz_constant() * spacing),
        "resolution": cfg.grid_resolution,
    }


def _cmd_solve(args) -> Any:
    scenario = _load_scenario(args.file)
    if scenario.designer_count != 1:
        raise ScenarioError(
            [f"designers: solve needs exactly one designer block, found {scenario.designer_count}"]
        )
    cfg = _config(scenario.solver, args.seed)
    if scenario.constraint is not None:
        designer = scenario.constrained_designer()
        result = designer.solve(scenario.population, cfg)
        check = (
            _constrained_grid_check(scenario.population, designer, result.objective_value, cfg)
            if args.grid_check
            else None
        )
    else:
        designer = scenario.welfare_designer()
        result = designer.solve(scenario.population, cfg)
        check = (
            _welfare_grid_check(scenario.population, designer, result.objective_value, cfg)
            if args.grid_check
            else None
        )
    data = report_to_dict(result)
    if check is not None:
        data["grid_check"] = check
    return data


def _cmd_audit(args) -> Any:
    scenario = _load_scenario(args.file)
    welfare = scenario.welfare_designer()
    if welfare.phi.is_rawls:
        raise ScenarioError(
            ["designers.welfare.phi: the dispersion gap needs a finite transform, not rawls"]
        )
    policy = parse_policy_file(args.policy.read_text(encoding="utf-8"), scenario.alphabets)
    constraint = scenario.constraint
    positive = constraint.positive_label if constraint else "1"
    negative = constraint.negative_label if constraint else "0"
    return audit_policy(
        scenario.population,
        policy,
        welfare.utility,
        welfare.phi,
        positive_label=positive,
        negative_label=negative,
    )


def _cmd_compare(args) -> Any:
    scenario = _load_scenario(args.file)
    if scenario.designer_count != 2:
        raise ScenarioError(
            [f"designers: compare needs both designer blocks, found {scenario.designer_count}"]
        )
    co = scenario.constrained_designer()
    sw = scenario.welfare_designer()
    cfg = _config(scenario.solver, args.seed)
    report = compare_designers(scenario.population, co, sw, cfg)
    data = report_to_dict(report)
    if args.grid_check:
        data["grid_check"] = {
            "constrained": _constrained_grid_check(
                scenario.population, co, report.co_result.objective_value, cfg
            ),
            "welfare": _welfare_grid_check(
                scenario.population, sw, report.sw_result.objective_value, cfg
            ),
        }
    return data


def _cmd_example1(args) -> Any:
    phi = PhiFunction.parse(args.phi)
    cfg = SolverConfig(seed=args.seed if args.seed is not None else 0)
    scenario = Example1Scenario(delta=args.delta, phi=phi, epsilon=args.epsilon)
    report = run_example1(scenario, cfg)
    data = report_to_dict(report)
    if args.grid_check:
        mu = build_example1(args.delta)
        u = PayoffTable.match_indicator(mu.alphabets)
        data["grid_check"] = {
            "constrained": _constrained_grid_check(
                mu,
                ConstrainedDesigner(u, FairnessConstraint("equalized_odds", args.epsilon)),
                report.co_accuracy,
                cfg,
            ),
            "welfare": _welfare_grid_check(
                mu, WelfareDesigner(u, phi), report.sw_welfare, cfg
            ),
        }
    return data


def _cmd_diverge(args) -> Any:
    scenario = _load_scenario(args.file)
    welfare = scenario.welfare_designer()
    if scenario.constraint is None:
        raise ScenarioError(["designers.constrained: diverge needs a constraint block"])
    cfg = _config(scenario.solver, args.seed)
    report = construct_divergent_population(
        welfare.utility, scenario.constraint, welfare.phi, margin=args.margin, cfg=cfg
    )
    data = report_to_dict(report)
    if args.grid_check:
        data["grid_check"] = {
            "welfare": _welfare_grid_check(
                report.mu_constructed, welfare, report.sw_welfare_at_sw, cfg
            ),
            "constrained": _constrained_grid_check(
                report.mu_constructed,
                ConstrainedDesigner(welfare.utility, scenario.constraint),
                float(
                    report.co_policy.rows.reshape(-1)
                    @ PenalizedAccuracyObjective(
                        report.mu_constructed, welfare.utility, scenario.constraint
                    ).coefficients.reshape(-1)
                ),
                cfg,
            ),
        }
    return data


def _cmd_sweep(args) -> Any:
    try:
        sizes = tuple(int(s) for s in args.sizes.split(","))
    except ValueError:
        raise ScenarioError([f"--sizes: expected four comma-separated integers, got {args.sizes!r}"])
    if len(sizes) != 4:
        raise ScenarioError([f"--sizes: expected four sizes x,y,g,d, got {len(sizes)}"])
    alphabets = default_alphabets(sizes)
    table = PayoffTable.match_indicator(alphabets)
    phi = PhiFunction.parse(args.phi)
    co = ConstrainedDesigner(table, FairnessConstraint(args.constraint, args.epsilon))
    sw = WelfareDesigner(table, phi)
    seed = args.seed if args.seed is not None else 0
    return disagreement_sweep(
        alphabets,
        co,
        sw,
        count=args.count,
        seed=seed,
        cfg=SolverConfig(seed=seed),
        oracle_check=args.grid_check,
    )


_HANDLERS = {
    "solve": _cmd_solve,
    "audit": _cmd_audit,
    "compare": _cmd_compare,
    "example1": _cmd_example1,
    "diverge": _cmd_diverge,
    "sweep": _cmd_sweep,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return _USAGE_EXIT
    try:
        report = _HANDLERS[args.command](args)
        text = serialize_report(report, args.format)
    except ScenarioError as exc:
        for issue in exc.issues:
            sys.stderr.write(f"error: {issue}\n")
        return _USAGE_EXIT
    except (
        ConfigurationError,
        DomainError,
        UnsupportedMeasureError,
        UndefinedConditionalError,
        CapacityError,
    ) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return _USAGE_EXIT
    except SolverError as exc:
        sys.stderr.write(f"solver error: {exc}\n")
        return _SOLVER_EXIT
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
