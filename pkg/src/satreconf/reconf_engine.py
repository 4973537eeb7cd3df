"""SATReconf: the fewest input flips that make an observation consistent with SM.

The bound ``n_ub`` starts at 1 and rises by one until the solver finds a
model of ``SM & observation & (flips <= n_ub)`` or the bound passes |B|.
A bound of 1 already admits zero flips. Within that first bound the
zero-flip instance is tried on its own first: otherwise the solver could
return a one-flip model although the observed inputs are valid already.

Two encodings of the bound are available. The incremental one builds a
unary counter once and raises the bound by assumption; the other rebuilds
a sequential counter for each bound, which is also what gets exported as
DIMACS.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path

from .discretization import QualitativeObservation
from .hybrid_model import BinaryAssignment, Configuration, StateVector
from .sat import (
    CnfFormula,
    Solver,
    VarPool,
    encode_at_most_k,
    encode_flip_literals,
    evaluate,
    to_cnf,
    unary_counter,
)
from .system_model import SystemModel, check_validity, instantiate

SUCCESS = "success"
NO_RECONFIGURATION = "no_reconfiguration"
ORACLE_LIMIT = 20


class EngineError(RuntimeError):
    """The solver broke its contract (e.g. returned a model that is not valid)."""


class OracleScopeError(ValueError):
    """Too many inputs for exhaustive enumeration."""


@dataclass(frozen=True)
class ReconfProblem:
    """``locked`` inputs must keep their observed value (e.g. a used-up spare)."""

    sm: SystemModel
    observation: QualitativeObservation
    inputs: BinaryAssignment
    locked: frozenset[str] = frozenset()

    def __post_init__(self):
        if tuple(self.inputs.ids) != tuple(self.sm.inputs):
            raise ValueError(f"inputs {self.inputs.ids} do not match model inputs {self.sm.inputs}")
        unknown = set(self.locked) - set(self.sm.inputs)
        if unknown:
            raise ValueError(f"locked inputs {sorted(unknown)} are not model inputs")


@dataclass(frozen=True)
class ReconfResult:
    status: str
    new_inputs: BinaryAssignment | None = None
    flips: frozenset[str] = frozenset()
    bound_used: int | None = None
    solver_calls: int = 0
    dimacs_files: tuple[str, ...] = field(default=(), compare=False)

    @property
    def success(self) -> bool:
        return self.status == SUCCESS

    def describe(self) -> str:
        if not self.success:
            return "no reconfiguration exists"
        if not self.flips:
            return f"no change needed (bound {self.bound_used})"
        changes = ", ".join(f"{b}:={int(self.new_inputs[b])}" for b in sorted(self.flips))
        return f"{len(self.flips)} flip(s) at bound {self.bound_used}: {changes}"


def _base(p: ReconfProblem):
    table = p.sm.table
    pool = VarPool(len(table) + 1)
    cnf = to_cnf(instantiate(p.sm, p.observation), table, pool)
    observed = p.inputs.as_dict()
    dvars = {b: table.var(b) for b in p.sm.inputs}
    locks = [dvars[b] if observed[b] else -dvars[b] for b in sorted(p.locked)]
    return table, pool, cnf.with_units(locks), encode_flip_literals(observed, dvars), dvars


def bound_cnf(p: ReconfProblem, bound: int) -> CnfFormula:
    """The full instance ``SM & observation & (flips <= bound)`` as one CNF."""
    _, pool, cnf, flips, _ = _base(p)
    extra = encode_at_most_k(flips, bound, pool)
    return cnf.conjoin(CnfFormula.from_clauses(extra, num_vars=max(pool.top, cnf.num_vars)))


def sat_reconf(
    p: ReconfProblem,
    *,
    seed: int = 0,
    incremental: bool = True,
    dimacs_dir: str | Path | None = None,
) -> ReconfResult:
    _, pool, cnf, flips, dvars = _base(p)
    n = len(p.sm.inputs)
    written: list[str] = []
    if dimacs_dir is not None:
        Path(dimacs_dir).mkdir(parents=True, exist_ok=True)

    if incremental:
        counter, outputs = unary_counter(flips, pool)
        solver = Solver(pool.top, seed=seed)
        solver.add_cnf(cnf)
        for c in counter:
            solver.add_clause(c)

    model = None
    calls = 0
    bound = 1
    while bound <= n:
        if dimacs_dir is not None:
            path = Path(dimacs_dir) / f"{p.sm.name}_bound{bound}.cnf"
            path.write_text(bound_cnf(p, bound).to_dimacs([f"{p.sm.name}: {p.observation}", f"flips <= {bound}"]))
            written.append(str(path))
        # At the first bound, try zero flips before admitting one, so that a
        # valid configuration is never traded for a one-flip alternative.
        for k in ((0, 1) if bound == 1 else (bound,)):
            calls += 1
            if incremental:
                if k == 0:
                    assumptions = [-f for f in flips]
                else:
                    assumptions = [-outputs[k]] if k < len(outputs) else []
                found = solver.solve(assumptions)
                if found:
                    model = solver.model()
            else:
                inst = bound_cnf(p, k)
                solver_b = Solver(inst.num_vars, seed=seed)
                found = solver_b.add_cnf(inst) and solver_b.solve()
                if found:
                    model = solver_b.model()
            if found:
                break
        if found:
            break
        bound += 1

    if model is None:
        return ReconfResult(NO_RECONFIGURATION, solver_calls=calls, dimacs_files=tuple(written))

    new = BinaryAssignment(p.inputs.ids, tuple(model[dvars[b]] for b in p.inputs.ids))
    changed = p.inputs.differences(new)
    if len(changed) > bound:
        raise EngineError(f"{len(changed)} flips exceed bound {bound}")
    config = Configuration(StateVector((), ()), new)
    if not check_validity(p.sm, config, p.observation):
        raise EngineError("returned inputs are not valid for the observation")
    return ReconfResult(SUCCESS, new, changed, bound, calls, tuple(written))


def bound_verdicts(p: ReconfProblem, *, seed: int = 0) -> list[bool]:
    """SAT verdict of the instance at every bound 0..|B|, solved independently."""
    out = []
    for k in range(len(p.sm.inputs) + 1):
        cnf = bound_cnf(p, k)
        s = Solver(cnf.num_vars, seed=seed)
        out.append(s.add_cnf(cnf) and s.solve())
    return out


def enumerate_valid(p: ReconfProblem) -> list[tuple[int, BinaryAssignment]]:
    """Every valid assignment with its flip count, by exhaustive enumeration."""
    n = len(p.sm.inputs)
    if n > ORACLE_LIMIT:
        raise OracleScopeError(f"{n} inputs exceed the enumeration limit of {ORACLE_LIMIT}")
    formula = instantiate(p.sm, p.observation)
    truth = p.observation.truth_assignment()
    observed = p.inputs.as_dict()
    out = []
    for bits in itertools.product((False, True), repeat=n):
        values = dict(zip(p.sm.inputs, bits))
        if any(values[b] != observed[b] for b in p.locked):
            continue
        if evaluate(formula, {**truth, **values}):
            flips = sum(values[b] != observed[b] for b in p.sm.inputs)
            out.append((flips, BinaryAssignment(p.inputs.ids, bits)))
    return out


def minimality_oracle(p: ReconfProblem, result: ReconfResult) -> bool:
    """True iff no valid assignment needs fewer flips than ``result``.

    For a NoReconfigurationExists result, true iff enumeration finds no valid
    assignment at all.
    """
    valid = enumerate_valid(p)
    if not result.success:
        return not valid
    return all(k >= len(result.flips) for k, _ in valid)
