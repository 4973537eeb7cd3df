"""Reconfiguration system model: implications from qualitative predicates
to formulas over binary inputs, and the validity check built on them.

A system model is a conjunction of constraints ``guard -> consequence``.
Guards are conjunctions of predicate atoms such as ``low:level_T1``;
consequences mention only input atoms (valves, pumps, exchange flags).
A configuration is valid iff the model, instantiated with the observation
and with every input pinned, is satisfiable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .discretization import IntervalSpec, QualitativeObservation, predicate_atoms
from .hybrid_model import Configuration, HybridAutomaton, build_system
from .sat import And, Atom, AtomTable, Formula, Implies, Not, atoms_of, conj, parse, sat, to_cnf

SCHEMA_VERSION = 1


class ModelAuthoringError(ValueError):
    """A constraint or model document that breaks the authoring rules."""


@dataclass(frozen=True)
class ReconfConstraint:
    guard: Formula
    consequence: Formula
    rationale: str = ""

    @property
    def guard_atoms(self) -> tuple[str, ...]:
        if isinstance(self.guard, Atom):
            return (self.guard.name,)
        return tuple(a.name for a in self.guard.args)

    def as_formula(self) -> Formula:
        return Implies(self.guard, self.consequence)

    @classmethod
    def parse(cls, guard: str, consequence: str, rationale: str = "") -> "ReconfConstraint":
        return cls(parse(guard), parse(consequence), rationale)

    def __str__(self) -> str:
        return f"{self.guard} -> {self.consequence}"


@dataclass(frozen=True)
class SystemModel:
    """Constraint base over a fixed vocabulary of predicate and input atoms."""

    name: str
    predicates: tuple[str, ...]
    inputs: tuple[str, ...]
    constraints: tuple[ReconfConstraint, ...] = ()
    intervals: tuple[IntervalSpec, ...] = field(default=(), compare=False)
    document: Mapping | None = field(default=None, compare=False, repr=False)

    @property
    def table(self) -> AtomTable:
        """Shared numbering: predicate atoms first, then inputs in declaration order."""
        return AtomTable(self.predicates + self.inputs)

    def formula(self) -> Formula:
        return conj(*(c.as_formula() for c in self.constraints))


def _check_constraint(sm: SystemModel, c: ReconfConstraint) -> None:
    g = c.guard
    parts = g.args if isinstance(g, And) else (g,)
    if not parts or not all(isinstance(a, Atom) for a in parts):
        raise ModelAuthoringError(f"guard must be a non-empty conjunction of predicate atoms: {g}")
    preds, inputs = set(sm.predicates), set(sm.inputs)
    for a in parts:
        if a.name in inputs:
            raise ModelAuthoringError(f"guard mentions input {a.name!r}")
        if a.name not in preds:
            raise ModelAuthoringError(f"guard mentions undeclared atom {a.name!r}")
    for name in atoms_of(c.consequence):
        if name in preds:
            raise ModelAuthoringError(f"consequence mentions predicate {name!r}")
        if name not in inputs:
            raise ModelAuthoringError(f"consequence mentions undeclared atom {name!r}")


def add_constraint(sm: SystemModel, c: ReconfConstraint) -> SystemModel:
    """A new model with ``c`` appended after checking the atom domains."""
    _check_constraint(sm, c)
    return SystemModel(sm.name, sm.predicates, sm.inputs, sm.constraints + (c,), sm.intervals, sm.document)


def empty_model(name: str, intervals: Iterable[IntervalSpec], inputs: Iterable[str]) -> SystemModel:
    intervals = tuple(intervals)
    return SystemModel(name, tuple(predicate_atoms(intervals)), tuple(inputs), (), intervals)


def instantiate(sm: SystemModel, q: QualitativeObservation) -> Formula:
    """SM conjoined with a unit fact for every predicate atom's truth value."""
    truth = q.truth_assignment()
    missing = [p for p in sm.predicates if p not in truth]
    if missing:
        raise ModelAuthoringError(f"observation does not cover {missing}")
    facts = [Atom(p) if truth[p] else Not(Atom(p)) for p in sm.predicates]
    return conj(*facts, sm.formula())


def active_constraints(sm: SystemModel, q: QualitativeObservation) -> tuple[ReconfConstraint, ...]:
    truth = q.truth_assignment()
    return tuple(c for c in sm.constraints if all(truth.get(a, False) for a in c.guard_atoms))


def check_validity(sm: SystemModel, config: Configuration, q: QualitativeObservation) -> bool:
    """True iff instantiate(sm, q) with every input pinned to ``config.inputs`` is SAT."""
    table = sm.table
    cnf = to_cnf(instantiate(sm, q), table)
    values = config.inputs.as_dict()
    units = [table.var(b) if values[b] else -table.var(b) for b in sm.inputs]
    return sat(cnf.with_units(units))


# ---------------------------------------------------------------------------
# model documents


def model_from_dict(doc: Mapping) -> tuple[SystemModel, HybridAutomaton]:
    """Build (SM, automaton) from a parsed model document; raises ModelAuthoringError."""
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ModelAuthoringError(f"unsupported schema_version {doc.get('schema_version')!r}")
    for key in ("system", "intervals", "constraints"):
        if key not in doc:
            raise ModelAuthoringError(f"model document lacks {key!r}")
    try:
        automaton, _, _ = build_system(doc["system"], doc.get("parameters"))
        intervals = tuple(IntervalSpec(sid, float(lb), float(ub)) for sid, (lb, ub) in doc["intervals"].items())
    except (ValueError, TypeError) as e:
        raise ModelAuthoringError(str(e)) from e
    if {s.state_id for s in intervals} != set(automaton.state_ids):
        raise ModelAuthoringError("intervals must cover exactly the automaton states")
    sm = empty_model(doc["system"], intervals, automaton.inputs)
    for i, entry in enumerate(doc["constraints"]):
        try:
            c = ReconfConstraint.parse(entry["guard"], entry["then"], entry.get("rationale", ""))
        except KeyError as e:
            raise ModelAuthoringError(f"constraint {i} lacks {e}") from None
        except (SyntaxError, ValueError) as e:
            raise ModelAuthoringError(f"constraint {i}: {e}") from None
        sm = add_constraint(sm, c)
    sm = SystemModel(sm.name, sm.predicates, sm.inputs, sm.constraints, sm.intervals, doc)
    return sm, automaton


def model_to_dict(sm: SystemModel) -> dict:
    doc = dict(sm.document or {"schema_version": SCHEMA_VERSION, "system": sm.name})
    doc["intervals"] = {s.state_id: [s.lb, s.ub] for s in sm.intervals}
    doc["constraints"] = [
        {"guard": str(c.guard), "then": str(c.consequence), "rationale": c.rationale}
        for c in sm.constraints
    ]
    return doc


def load_model(source: str | Path | Mapping) -> tuple[SystemModel, HybridAutomaton]:
    if isinstance(source, Mapping):
        return model_from_dict(source)
    try:
        doc = json.loads(Path(source).read_text())
    except json.JSONDecodeError as e:
        raise ModelAuthoringError(f"{source}: {e}") from None
    return model_from_dict(doc)


def shipped_document(system: str) -> dict:
    name = system.replace("-", "_") + ".json"
    return json.loads(resources.files("satreconf.data").joinpath(name).read_text())


def build_two_tank_sm() -> SystemModel:
    return model_from_dict(shipped_document("two-tank"))[0]


def build_three_tank_sm() -> SystemModel:
    return model_from_dict(shipped_document("three-tank"))[0]


def validate_model(sm: SystemModel) -> list[str]:
    """Vacuity and coverage problems of ``sm``; an empty list means it passes."""
    problems = []
    all_ok = QualitativeObservation(tuple((s.state_id, "ok") for s in sm.intervals))
    for c in active_constraints(sm, all_ok):
        problems.append(f"guard true on the all-ok observation: {c}")
    # a state is covered when some constraint fires with only that state off
    for s in sm.intervals:
        for p in ("low", "high"):
            single = QualitativeObservation(tuple(
                (x.state_id, p if x.state_id == s.state_id else "ok") for x in sm.intervals))
            if not active_constraints(sm, single):
                problems.append(f"no constraint for {p}({s.state_id})")
    for c in sm.constraints:
        if not sat(to_cnf(c.consequence, sm.table)):
            problems.append(f"consequence is unsatisfiable: {c}")
    return problems


__all__ = [
    "ModelAuthoringError", "ReconfConstraint", "SCHEMA_VERSION", "SystemModel",
    "active_constraints", "add_constraint", "build_three_tank_sm", "build_two_tank_sm",
    "check_validity", "empty_model", "instantiate", "load_model", "model_from_dict",
    "model_to_dict", "shipped_document", "validate_model",
]
