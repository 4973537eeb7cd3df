"""Command-line entry point: ``satreconf <subcommand> ...``.

Exit codes: 0 on a completed run (including runs whose outcome is
"no reconfiguration exists"), 1 when ``validate-model`` finds problems,
2 on usage errors and malformed documents.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .discretization import ConfigurationError, NumericError, QualitativeObservation, discretize
from .harness import (
    DEFAULT_DT,
    ScenarioError,
    SuiteReport,
    load_suite,
    run_scenario,
    run_suite,
    shipped_suite,
)
from .hybrid_model import BUILDERS, BinaryAssignment, ModelError
from .reconf_engine import ReconfProblem, ReconfResult, sat_reconf
from .system_model import (
    ModelAuthoringError,
    SystemModel,
    load_model,
    model_from_dict,
    shipped_document,
    validate_model,
)

OBSERVATION_SCHEMA_VERSION = 1
SYSTEMS = tuple(BUILDERS)

DOCUMENT_ERRORS = (
    ModelAuthoringError, ScenarioError, ConfigurationError, NumericError, ModelError,
    OSError, json.JSONDecodeError, KeyError, TypeError, ValueError,
)


class DocumentError(ValueError):
    """An observation document that does not fit its model."""


def shipped_observation(name: str = "three_tank_leak_observation") -> dict:
    return json.loads(resources.files("satreconf.data").joinpath(name + ".json").read_text())


def problem_from_document(doc: Mapping, sm: SystemModel) -> ReconfProblem:
    """Build a ReconfProblem from an observation document.

    The document gives either real ``states`` (discretized with the model's
    intervals) or qualitative ``labels``, plus every input's value and an
    optional ``locked`` list.
    """
    if doc.get("schema_version") != OBSERVATION_SCHEMA_VERSION:
        raise DocumentError(f"unsupported observation schema_version {doc.get('schema_version')!r}")
    if doc.get("system", sm.name) != sm.name:
        raise DocumentError(f"observation is for {doc['system']!r}, model is {sm.name!r}")
    if "states" in doc:
        q = discretize({k: float(v) for k, v in doc["states"].items()}, sm.intervals)
    elif "labels" in doc:
        q = QualitativeObservation.from_mapping(doc["labels"])
    else:
        raise DocumentError("observation needs 'states' or 'labels'")
    declared = [s.state_id for s in sm.intervals]
    if sorted(q.state_ids) != sorted(declared):
        raise DocumentError(f"observation must cover exactly {declared}")
    q = QualitativeObservation(tuple((sid, q[sid]) for sid in declared))
    values = doc.get("inputs", {})
    if sorted(values) != sorted(sm.inputs):
        raise DocumentError(f"inputs must cover exactly {list(sm.inputs)}")
    inputs = BinaryAssignment(sm.inputs, tuple(bool(values[b]) for b in sm.inputs))
    return ReconfProblem(sm, q, inputs, frozenset(doc.get("locked", ())))


def _model(args) -> tuple[SystemModel, object]:
    if getattr(args, "model", None):
        return load_model(args.model)
    return model_from_dict(shipped_document(args.system))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    sys.stdout.write(text)


def _scenarios(args):
    if args.scenario_file:
        system, scenarios = load_suite(args.scenario_file)
        if args.system and args.system != system:
            raise ScenarioError(f"suite file is for {system!r}, not {args.system!r}")
        return scenarios
    systems = [args.system] if args.system else list(SYSTEMS)
    return [s for name in systems for s in shipped_suite(name)]


def _result_text(p: ReconfProblem, r: ReconfResult) -> str:
    lines = [f"system: {p.sm.name}", f"observation: {p.observation}", f"inputs: {p.inputs}"]
    if r.success:
        lines.append(f"result: {r.describe()}")
        lines.append(f"new inputs: {r.new_inputs}")
    else:
        lines.append("result: no reconfiguration exists")
    lines.append(f"solver calls: {r.solver_calls}")
    return "\n".join(lines) + "\n"


def cmd_simulate(args) -> int:
    scenarios = _scenarios(args)
    chosen = [s for s in scenarios if s.id == args.scenario]
    if not chosen:
        raise ScenarioError(f"no scenario {args.scenario!r}")
    s = chosen[0]
    sm, automaton = (load_model(args.model) if args.model else (None, None))
    report = run_scenario(s, sm, automaton, dt=args.dt, horizon=args.horizon, seed=args.seed)
    _emit(report.summary() + "\n", args.out)
    return 0


def cmd_suite(args) -> int:
    report: SuiteReport = run_suite(_scenarios(args), seed=args.seed, dt=args.dt, horizon=args.horizon)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(report.table())
        (out / "report.csv").write_text(report.csv())
    sys.stdout.write(report.table())
    return 0


def _problem(args) -> ReconfProblem:
    doc = json.loads(Path(args.observation).read_text()) if args.observation else shipped_observation()
    if not args.model:
        args.system = args.system or doc.get("system")
        if args.system not in SYSTEMS:
            raise DocumentError(f"unknown system {args.system!r}")
    sm, _ = _model(args)
    return problem_from_document(doc, sm)


def cmd_reconf(args) -> int:
    p = _problem(args)
    r = sat_reconf(p, seed=args.seed, incremental=not args.non_incremental)
    _emit(_result_text(p, r), args.out)
    return 0


def cmd_export_dimacs(args) -> int:
    p = _problem(args)
    r = sat_reconf(p, seed=args.seed, incremental=False, dimacs_dir=args.out)
    for f in r.dimacs_files:
        print(f)
    return 0


def cmd_validate_model(args) -> int:
    sm, _ = _model(args)
    problems = validate_model(sm)
    for msg in problems:
        print(msg)
    print(f"{sm.name}: {len(sm.constraints)} constraints, "
          + (f"{len(problems)} problem(s)" if problems else "no problems"))
    return 1 if problems else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", choices=SYSTEMS, help="tank system (default: from the input document)")
    common.add_argument("--seed", type=int, default=0, help="solver seed")
    common.add_argument("--out", help="output file or directory")

    sim = argparse.ArgumentParser(add_help=False)
    sim.add_argument("--scenario-file", help="suite document (default: the shipped suite)")
    sim.add_argument("--dt", type=float, default=DEFAULT_DT, help="simulation step in seconds")
    sim.add_argument("--horizon", type=float, help="override every scenario's horizon (seconds)")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--model", help="model document (default: the shipped model)")

    ap = argparse.ArgumentParser(prog="satreconf", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common, sim, model], help="run one scenario")
    p.add_argument("scenario", help="scenario id, e.g. th01")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("suite", parents=[common, sim], help="run a scenario suite and print the results table")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("reconf", parents=[common, model], help="one-shot reconfiguration of an observation")
    p.add_argument("observation", nargs="?", help="observation document (default: the shipped leak example)")
    p.add_argument("--non-incremental", action="store_true", help="rebuild the counter for every bound")
    p.set_defaults(func=cmd_reconf)

    p = sub.add_parser("export-dimacs", parents=[common, model], help="write the per-bound CNF instances")
    p.add_argument("observation", nargs="?", help="observation document (default: the shipped leak example)")
    p.set_defaults(func=cmd_export_dimacs)

    p = sub.add_parser("validate-model", parents=[common, model], help="schema, coverage and vacuity checks")
    p.set_defaults(func=cmd_validate_model)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "export-dimacs" and not args.out:
        args.out = "dimacs"
    if args.command == "validate-model" and not args.model and not args.system:
        build_parser().error("validate-model needs --system or --model")
    try:
        return args.func(args)
    except (DocumentError, *DOCUMENT_ERRORS) as e:
        print(f"satreconf: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
