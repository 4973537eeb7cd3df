"""Closed-loop fault scenarios: simulate, detect, reconfigure, check recovery.

A run starts at the interval midpoints under a nominal controller. Faults
are injected at their scheduled time. On the first step where some state
leaves its ok interval, the commanded inputs are frozen and handed to
SATReconf together with the discretized observation. Flips are applied as
events (toggles) or exchanges. Inputs named in the active constraints are then
held at their new values, and the rest stay with the nominal controller.
If the observation later changes to a different invalid one, another
round starts. A run counts as recovered once every state has been ok for
``dwell`` consecutive steps after the last reconfiguration.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .discretization import discretize, is_all_ok
from .hybrid_model import (
    BinaryAssignment,
    Configuration,
    HybridAutomaton,
    apply_event,
    apply_exchange,
    midpoint_state,
    step,
)
from .reconf_engine import ReconfProblem, ReconfResult, sat_reconf
from .sat import atoms_of
from .system_model import SystemModel, active_constraints, check_validity, load_model, shipped_document

SUITE_SCHEMA_VERSION = 1
DEFAULT_DT = 0.1
DEFAULT_HORIZON = 600.0
DWELL_STEPS = 10
MAX_ROUNDS = 4

CATEGORIES = (
    "continuous",
    "discrete",
    "multiple continuous",
    "multiple continuous + discrete",
    "multiple discrete",
)
CONTINUOUS_EFFECTS = {"leak", "valve-stuck", "pump-stuck", "temp-drift"}
DISCRETE_EFFECTS = {"level-jump", "temp-jump"}
JUMP_RANGES = {"level-jump": (20.0, 70.0), "temp-jump": (7.0, 42.0)}


class ScenarioError(ValueError):
    """A malformed scenario or suite document, or a fault on an unknown component."""


# ---------------------------------------------------------------------------
# faults and scenarios


@dataclass(frozen=True)
class FaultSpec:
    """``value`` is a rate (leak cm/s, drift degC/s), a signed percent
    (jumps) or a stuck position (``open``/``closed``, ``full``/``blocked``)."""

    effect: str
    target: str
    value: float | str
    at: float = 0.0

    def __post_init__(self):
        if self.effect not in CONTINUOUS_EFFECTS | DISCRETE_EFFECTS:
            raise ScenarioError(f"unknown fault effect {self.effect!r}")
        if self.effect == "valve-stuck" and self.value not in ("open", "closed"):
            raise ScenarioError(f"valve-stuck needs open or closed, got {self.value!r}")
        if self.effect == "pump-stuck" and self.value not in ("full", "blocked"):
            raise ScenarioError(f"pump-stuck needs full or blocked, got {self.value!r}")
        if self.effect in JUMP_RANGES:
            lo, hi = JUMP_RANGES[self.effect]
            if not isinstance(self.value, (int, float)) or not lo <= abs(self.value) <= hi:
                raise ScenarioError(f"{self.effect} of {self.value!r}% is outside {lo}-{hi}%")
        if self.effect in ("leak", "temp-drift") and not isinstance(self.value, (int, float)):
            raise ScenarioError(f"{self.effect} needs a numeric rate")
        if not (isinstance(self.at, (int, float)) and math.isfinite(self.at) and self.at >= 0):
            raise ScenarioError(f"bad injection time {self.at!r}")

    @property
    def kind(self) -> str:
        return "continuous" if self.effect in CONTINUOUS_EFFECTS else "discrete"

    def __str__(self) -> str:
        return f"{self.effect}({self.target}, {self.value}) at {self.at:g}s"


@dataclass(frozen=True)
class Scenario:
    id: str
    system: str
    category: str
    row: str
    faults: tuple[FaultSpec, ...]
    horizon: float = DEFAULT_HORIZON

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ScenarioError(f"{self.id}: unknown category {self.category!r}")
        if len(self.faults) not in (1, 2):
            raise ScenarioError(f"{self.id}: a scenario has one or two faults")
        kinds = sorted(f.kind for f in self.faults)
        expected = {
            "continuous": ["continuous"],
            "discrete": ["discrete"],
            "multiple continuous": ["continuous", "continuous"],
            "multiple continuous + discrete": ["continuous", "discrete"],
            "multiple discrete": ["discrete", "discrete"],
        }[self.category]
        if kinds != expected:
            raise ScenarioError(f"{self.id}: faults {kinds} do not fit category {self.category!r}")


def scenario_from_dict(d: Mapping, system: str) -> Scenario:
    try:
        faults = tuple(FaultSpec(f["effect"], f["target"], f["value"], float(f.get("at", 0.0))) for f in d["faults"])
        return Scenario(d["id"], system, d["category"], d["row"], faults, float(d.get("horizon", DEFAULT_HORIZON)))
    except KeyError as e:
        raise ScenarioError(f"scenario entry lacks {e}") from None


def load_suite(source: str | Path | Mapping) -> tuple[str, list[Scenario]]:
    """Parse a suite document; returns ``(system, scenarios)``."""
    if isinstance(source, Mapping):
        doc = source
    else:
        try:
            doc = json.loads(Path(source).read_text())
        except json.JSONDecodeError as e:
            raise ScenarioError(f"{source}: {e}") from None
    if doc.get("schema_version") != SUITE_SCHEMA_VERSION:
        raise ScenarioError(f"unsupported suite schema_version {doc.get('schema_version')!r}")
    if "system" not in doc or "scenarios" not in doc:
        raise ScenarioError("suite document needs 'system' and 'scenarios'")
    scenarios = [scenario_from_dict(d, doc["system"]) for d in doc["scenarios"]]
    ids = [s.id for s in scenarios]
    if len(set(ids)) != len(ids):
        raise ScenarioError("duplicate scenario ids")
    return doc["system"], scenarios


def shipped_suite(system: str) -> list[Scenario]:
    name = system.replace("-", "_") + "_suite.json"
    return load_suite(json.loads(resources.files("satreconf.data").joinpath(name).read_text()))[1]


# ---------------------------------------------------------------------------
# nominal controllers


def two_tank_controller(t: float, x: Mapping[str, float]) -> dict[str, bool]:
    """Fill below the level midpoint and alternate consumer demand every 20 s.

    Cold water goes to T1 once it passes its temperature midpoint; hot water
    goes to T2 only near its lower bound, since the cooler is the weaker
    actuator.
    """
    return {
        "v01": x["level_T1"] < 35.0,
        "v10": (t % 40.0) < 20.0,
        "v02": x["level_T2"] < 35.0,
        "v20": ((t + 20.0) % 40.0) < 20.0,
        "p12": x["temp_T2"] < 12.0,
        "p21": x["temp_T1"] > 70.0,
    }


def three_tank_controller(t: float, x: Mapping[str, float]) -> dict[str, bool]:
    """Pump into T1/T3 below the level midpoint; T2 draws from both sides."""
    return {
        "v12a": False,
        "v12b": True,
        "v23a": False,
        "v23b": True,
        "p1": x["level_T1"] < 15.0,
        "p2": x["level_T3"] < 15.0,
    }


CONTROLLERS: dict[str, Callable[[float, Mapping[str, float]], dict[str, bool]]] = {
    "two-tank": two_tank_controller,
    "three-tank": three_tank_controller,
}


# ---------------------------------------------------------------------------
# run context


@dataclass
class RunContext:
    """Mutable state of one scenario run; never shared between runs."""

    automaton: HybridAutomaton
    intervals: tuple
    faults: list[FaultSpec] = field(default_factory=list)
    cleared: set[int] = field(default_factory=set)     # fault indices removed by an exchange
    applied: set[int] = field(default_factory=set)     # discrete faults already fired

    def tank(self, name: str):
        for tk in self.automaton.tanks:
            if tk.name == name:
                return tk
        raise ScenarioError(f"unknown tank {name!r}")

    def active(self, t: float):
        for i, f in enumerate(self.faults):
            if i not in self.cleared and f.at <= t:
                yield i, f

    def overrides(self, t: float) -> dict[str, bool]:
        out = {}
        for _, f in self.active(t):
            if f.effect in ("valve-stuck", "pump-stuck"):
                out[f.target] = f.value in ("open", "full")
        return out

    def perturbation(self, t: float) -> dict[str, float]:
        extra: dict[str, float] = {}
        for _, f in self.active(t):
            if f.effect == "leak":
                sid = self.tank(f.target).level
                extra[sid] = extra.get(sid, 0.0) - f.value
            elif f.effect == "temp-drift":
                sid = self.tank(f.target).temperature
                extra[sid] = extra.get(sid, 0.0) + f.value
        return extra

    def fire_jumps(self, t: float, state):
        for i, f in self.active(t):
            if f.kind != "discrete" or i in self.applied:
                continue
            self.applied.add(i)
            tk = self.tank(f.target)
            sid = tk.level if f.effect == "level-jump" else tk.temperature
            state = state.replace(**{sid: state[sid] * (1.0 + f.value / 100.0)})
        return state

    def clear_tank_faults(self, tank: str) -> None:
        """Faults living in a tank leave with it when the spare is swapped in."""
        for i, f in enumerate(self.faults):
            if f.target == tank and f.effect in ("leak", "temp-drift"):
                self.cleared.add(i)


def inject_fault(ctx: RunContext, f: FaultSpec) -> RunContext:
    a = ctx.automaton
    if f.effect == "valve-stuck":
        if f.target not in {v.name for v in a.valves}:
            raise ScenarioError(f"unknown valve {f.target!r}")
    elif f.effect == "pump-stuck":
        if f.target not in {p.name for p in a.pumps}:
            raise ScenarioError(f"unknown pump {f.target!r}")
    else:
        tk = ctx.tank(f.target)
        if f.effect in ("temp-drift", "temp-jump") and not tk.temperature:
            raise ScenarioError(f"tank {f.target} has no temperature")
    ctx.faults.append(f)
    return ctx


# ---------------------------------------------------------------------------
# runs


@dataclass(frozen=True)
class Round:
    time: float
    observation: str
    inputs: str
    problem: ReconfProblem = field(repr=False, compare=False)
    result: ReconfResult = field(compare=False)
    valid_after: bool | None = None


@dataclass(frozen=True)
class RunReport:
    scenario_id: str
    system: str
    category: str
    row: str
    detected_at: float | None
    rounds: tuple[Round, ...]
    recovered: bool
    recovered_at: float | None
    final_observation: str
    end_time: float
    faults: str = ""

    @property
    def outcome(self) -> ReconfResult | None:
        return self.rounds[-1].result if self.rounds else None

    @property
    def status(self) -> str:
        if self.detected_at is None:
            return "undetected"
        return self.outcome.status

    def summary(self) -> str:
        lines = [f"scenario {self.scenario_id} ({self.system}, {self.category}: {self.row})"]
        if self.detected_at is None:
            lines.append("  no state left its ok interval; recovered vacuously")
        for r in self.rounds:
            lines.append(f"  t={r.time:.1f}s  observed {r.observation}")
            lines.append(f"    inputs {r.inputs}")
            lines.append(f"    {r.result.describe()}")
        lines.append(f"  recovered: {self.recovered}" + (f" at t={self.recovered_at:.1f}s" if self.recovered_at is not None else ""))
        lines.append(f"  final: {self.final_observation} at t={self.end_time:.1f}s")
        return "\n".join(lines)


def _pinned_inputs(sm: SystemModel, q, new_inputs: BinaryAssignment, flags: Sequence[str]) -> dict[str, bool]:
    names: set[str] = set()
    for c in active_constraints(sm, q):
        names |= atoms_of(c.consequence)
    return {b: new_inputs[b] for b in sorted(names) if b not in flags}


def run_scenario(
    scenario: Scenario,
    sm: SystemModel | None = None,
    automaton: HybridAutomaton | None = None,
    *,
    dt: float = DEFAULT_DT,
    horizon: float | None = None,
    seed: int = 0,
    dwell: int = DWELL_STEPS,
    max_rounds: int = MAX_ROUNDS,
) -> RunReport:
    if sm is None or automaton is None:
        sm, automaton = load_model(shipped_document(scenario.system))
    horizon = scenario.horizon if horizon is None else horizon
    intervals = sm.intervals
    ctx = RunContext(automaton, intervals)
    for f in scenario.faults:
        inject_fault(ctx, f)
    controller = CONTROLLERS[scenario.system]
    flags = automaton.exchange_flags
    owner = {flag: flag.split("_", 1)[1] for flag in flags}

    state = midpoint_state(automaton, intervals)
    pinned: dict[str, bool] = {}
    rounds: list[Round] = []
    spare_used = False
    detected_at = None
    last_obs = None
    ok_run = 0
    recovered_at = None
    failed = False
    steps = int(round(horizon / dt))
    t = 0.0

    for k in range(steps + 1):
        t = k * dt
        state = ctx.fire_jumps(t, state)
        q = discretize(state, intervals)
        commanded = {**controller(t, state.as_dict()), **pinned}

        if not is_all_ok(q) and q != last_obs and len(rounds) < max_rounds:
            if detected_at is None:
                detected_at = t
            observed = BinaryAssignment(sm.inputs, tuple(commanded.get(b, False) for b in sm.inputs))
            locked = frozenset(flags) if spare_used else frozenset()
            problem = ReconfProblem(sm, q, observed, locked)
            result = sat_reconf(problem, seed=seed)
            last_obs = q
            ok_run = 0
            if not result.success:
                rounds.append(Round(t, str(q), str(observed), problem, result))
                failed = True
                break
            mode = automaton.mode(commanded)
            for b in sorted(result.flips):
                if b in flags:
                    mode, state = apply_exchange(automaton, b, mode, state, intervals)
                    ctx.clear_tank_faults(owner[b])
                    spare_used = True
                else:
                    mode, state = apply_event(automaton, automaton.event(b), mode, state)
            valid = check_validity(sm, Configuration(state, result.new_inputs), q)
            rounds.append(Round(t, str(q), str(observed), problem, result, valid))
            pinned.update(_pinned_inputs(sm, q, result.new_inputs, flags))
            commanded = {**controller(t, state.as_dict()), **pinned}
            q = discretize(state, intervals)

        if rounds:
            ok_run = ok_run + 1 if is_all_ok(q) else 0
            if ok_run >= dwell:
                recovered_at = t
                break
        if k == steps:
            break
        effective = {**commanded, **ctx.overrides(t)}
        extra = ctx.perturbation(t)
        state = step(automaton, automaton.mode(effective), state, dt, (lambda s, e=extra: e) if extra else None)

    final_q = discretize(state, intervals)
    if detected_at is None:
        recovered = True
    else:
        recovered = not failed and recovered_at is not None
    return RunReport(
        scenario.id, scenario.system, scenario.category, scenario.row,
        detected_at, tuple(rounds), recovered, recovered_at, str(final_q), t,
        "; ".join(str(f) for f in scenario.faults),
    )


# ---------------------------------------------------------------------------
# suites and reports


def _percent(num: int, den: int) -> int:
    return math.floor(100.0 * num / den + 0.5) if den else 0


@dataclass(frozen=True)
class SuiteReport:
    reports: tuple[RunReport, ...]

    def systems(self) -> list[str]:
        return list(dict.fromkeys(r.system for r in self.reports))

    def counts(self, system: str | None = None, category: str | None = None, row: str | None = None):
        sel = [
            r for r in self.reports
            if (system is None or r.system == system)
            and (category is None or r.category == category)
            and (row is None or r.row == row)
        ]
        return len(sel), sum(r.recovered for r in sel)

    def table(self) -> str:
        """Plain-text table: cases, recovered and percent per category and row."""
        w = 38
        out = [f"{'Kind of faults':<{w}} {'cases':>6} {'reconf.':>8} {'in %':>6} {'detected':>9}"]
        out.append("=" * len(out[0]))
        for system in self.systems():
            n, ok = self.counts(system)
            out.append(f"{system.upper():<{w}} {n:>6} {ok:>8} {_percent(ok, n):>6}")
            for cat in CATEGORIES:
                n, ok = self.counts(system, cat)
                if not n:
                    continue
                out.append("-" * len(out[0]))
                out.append(f"{cat:<{w}} {n:>6} {ok:>8} {_percent(ok, n):>6}")
                rows = dict.fromkeys(r.row for r in self.reports if r.system == system and r.category == cat)
                for row in rows:
                    n, ok = self.counts(system, cat, row)
                    det = sum(r.detected_at is not None for r in self.reports
                              if r.system == system and r.category == cat and r.row == row)
                    out.append(f"  {row:<{w - 2}} {n:>6} {ok:>8} {'':>6} {det:>9}")
            out.append("=" * len(out[0]))
        if len(self.systems()) > 1:
            out.append("pooled over systems")
            for cat in CATEGORIES:
                n, ok = self.counts(category=cat)
                if n:
                    out.append(f"  {cat:<{w - 2}} {n:>6} {ok:>8} {_percent(ok, n):>6}")
            n, ok = self.counts()
            out.append(f"  {'all':<{w - 2}} {n:>6} {ok:>8} {_percent(ok, n):>6}")
        return "\n".join(out) + "\n"

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "system", "category", "row", "faults", "detected_at", "rounds",
                    "status", "flips", "recovered", "recovered_at", "final"])
        for r in self.reports:
            flips = ";".join("+".join(sorted(rd.result.flips)) or "-" for rd in r.rounds if rd.result.success)
            w.writerow([
                r.scenario_id, r.system, r.category, r.row, r.faults,
                "" if r.detected_at is None else f"{r.detected_at:.1f}",
                len(r.rounds), r.status, flips, str(r.recovered).lower(),
                "" if r.recovered_at is None else f"{r.recovered_at:.1f}",
                r.final_observation,
            ])
        return buf.getvalue()


def run_suite(scenarios: Iterable[Scenario], *, seed: int = 0, dt: float = DEFAULT_DT,
              horizon: float | None = None) -> SuiteReport:
    models: dict[str, tuple[SystemModel, HybridAutomaton]] = {}
    reports = []
    for s in scenarios:
        if s.system not in models:
            models[s.system] = load_model(shipped_document(s.system))
        sm, automaton = models[s.system]
        reports.append(run_scenario(s, sm, automaton, dt=dt, horizon=horizon, seed=seed))
    return SuiteReport(tuple(reports))
