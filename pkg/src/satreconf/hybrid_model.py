"""Hybrid automata for tank networks: modes, flows, events and exchanges.

A mode is a truth assignment to the automaton inputs (valves and pumps).
Continuous behaviour in a mode is given by linear flow laws over a small
network description, integrated with explicit Euler. Exchange flags are not
part of the mode; applying one resets the exchanged component's states.

Units: levels in cm, temperatures in degC, time in s. Tank cross-sections
are normalised to 1, so a volumetric flow is directly a level rate (cm/s).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, fields
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .discretization import IntervalSpec, NumericError

SUPPLY = "supply"
DRAIN = "drain"
MIN_MIXING_LEVEL = 1.0    # cm; temperature mixing divides by max(level, this)


class ModelError(ValueError):
    """A reference to an undeclared mode, event, state or input."""


# ---------------------------------------------------------------------------
# observations


@dataclass(frozen=True)
class StateVector:
    ids: tuple[str, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.values):
            raise ValueError("ids and values differ in length")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError(f"duplicate state ids in {self.ids}")
        for sid, v in zip(self.ids, self.values):
            if not math.isfinite(v):
                raise NumericError(f"state {sid} is not finite: {v!r}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "StateVector":
        return cls(tuple(values), tuple(float(v) for v in values.values()))

    def __getitem__(self, state_id: str) -> float:
        try:
            return self.values[self.ids.index(state_id)]
        except ValueError:
            raise KeyError(state_id) from None

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.ids, self.values))

    def replace(self, **updates: float) -> "StateVector":
        unknown = set(updates) - set(self.ids)
        if unknown:
            raise ModelError(f"unknown states {sorted(unknown)}")
        return StateVector(self.ids, tuple(float(updates.get(i, v)) for i, v in zip(self.ids, self.values)))


@dataclass(frozen=True)
class BinaryAssignment:
    ids: tuple[str, ...]
    values: tuple[bool, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.values):
            raise ValueError("ids and values differ in length")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError(f"duplicate input ids in {self.ids}")

    @classmethod
    def from_mapping(cls, values: Mapping[str, bool]) -> "BinaryAssignment":
        return cls(tuple(values), tuple(bool(v) for v in values.values()))

    def __getitem__(self, input_id: str) -> bool:
        try:
            return self.values[self.ids.index(input_id)]
        except ValueError:
            raise KeyError(input_id) from None

    def __iter__(self) -> Iterator[str]:
        return iter(self.ids)

    def __len__(self) -> int:
        return len(self.ids)

    def as_dict(self) -> dict[str, bool]:
        return dict(zip(self.ids, self.values))

    def with_values(self, **updates: bool) -> "BinaryAssignment":
        unknown = set(updates) - set(self.ids)
        if unknown:
            raise ModelError(f"unknown inputs {sorted(unknown)}")
        return BinaryAssignment(self.ids, tuple(bool(updates.get(i, v)) for i, v in zip(self.ids, self.values)))

    def differences(self, other: "BinaryAssignment") -> frozenset[str]:
        if other.ids != self.ids:
            raise ModelError("assignments over different inputs")
        return frozenset(i for i, a, b in zip(self.ids, self.values, other.values) if a != b)

    def __str__(self) -> str:
        return " ".join(f"{i}={int(v)}" for i, v in zip(self.ids, self.values))


@dataclass(frozen=True)
class Configuration:
    states: StateVector
    inputs: BinaryAssignment


# ---------------------------------------------------------------------------
# automaton pieces


@dataclass(frozen=True)
class Mode:
    """A combination of automaton-input values; the id encodes the bits."""

    inputs: tuple[str, ...]
    values: tuple[bool, ...]

    @property
    def id(self) -> str:
        return "mu_" + "".join("1" if v else "0" for v in self.values)

    def __getitem__(self, input_id: str) -> bool:
        return self.values[self.inputs.index(input_id)]

    def as_dict(self) -> dict[str, bool]:
        return dict(zip(self.inputs, self.values))

    def toggled(self, input_id: str) -> "Mode":
        i = self.inputs.index(input_id)
        vals = list(self.values)
        vals[i] = not vals[i]
        return Mode(self.inputs, tuple(vals))

    def with_values(self, updates: Mapping[str, bool]) -> "Mode":
        return Mode(self.inputs, tuple(bool(updates.get(i, v)) for i, v in zip(self.inputs, self.values)))


@dataclass(frozen=True)
class Event:
    id: str
    target: str     # automaton input toggled by the event


@dataclass(frozen=True)
class FlowFunction:
    mode_id: str
    derivative: Callable[[StateVector], tuple[float, ...]]

    def __call__(self, state: StateVector) -> tuple[float, ...]:
        return self.derivative(state)


@dataclass(frozen=True)
class Tank:
    name: str
    level: str
    temperature: str | None = None
    power: float = 0.0          # heater (>0) or cooler (<0), degC*cm/s


@dataclass(frozen=True)
class Valve:
    """Valve between two tanks, or between a tank and supply/drain.

    Tank-to-tank: flow = coeff * (head_src - head_dst), heads measured above
    ``height`` and floored at 0. Supply: constant ``rate`` at ``temperature``.
    Drain: flow = coeff * head_src.
    """

    name: str
    src: str
    dst: str
    height: float = 0.0
    coeff: float = 0.0
    rate: float = 0.0
    temperature: float = 0.0


@dataclass(frozen=True)
class Pump:
    name: str
    src: str
    dst: str
    rate: float
    temperature: float = 0.0    # only used when src is the supply


@dataclass(frozen=True)
class Outlet:
    """Uncontrolled outflow ``coeff * level`` (e.g. a consumer line)."""

    tank: str
    coeff: float


@dataclass(frozen=True)
class HybridAutomaton:
    name: str
    tanks: tuple[Tank, ...]
    valves: tuple[Valve, ...]
    pumps: tuple[Pump, ...]
    outlets: tuple[Outlet, ...]
    exchange_flags: tuple[str, ...]
    exchange_states: Mapping[str, tuple[str, ...]] = field(hash=False, compare=False)
    parameters: object = field(default=None, hash=False, compare=False)

    def __post_init__(self):
        tank_names = {t.name for t in self.tanks}
        for el in (*self.valves, *self.pumps):
            for end in (el.src, el.dst):
                if end not in tank_names | {SUPPLY, DRAIN}:
                    raise ModelError(f"{el.name}: unknown endpoint {end!r}")
        for flag in self.exchange_flags:
            for sid in self.exchange_states.get(flag, ()):
                if sid not in self.state_ids:
                    raise ModelError(f"{flag} maps to unknown state {sid!r}")

    # -- declarations -------------------------------------------------------

    @cached_property
    def state_ids(self) -> tuple[str, ...]:
        out: list[str] = []
        for t in self.tanks:
            out.append(t.level)
            if t.temperature:
                out.append(t.temperature)
        return tuple(out)

    @cached_property
    def units(self) -> dict[str, str]:
        return {sid: ("cm" if sid.startswith("level") else "degC") for sid in self.state_ids}

    @cached_property
    def automaton_inputs(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.valves) + tuple(p.name for p in self.pumps)

    @property
    def inputs(self) -> tuple[str, ...]:
        """All binary inputs B: automaton inputs followed by exchange flags."""
        return self.automaton_inputs + self.exchange_flags

    @cached_property
    def events(self) -> tuple[Event, ...]:
        return tuple(Event(f"toggle_{b}", b) for b in self.automaton_inputs)

    def event(self, target: str) -> Event:
        for e in self.events:
            if e.target == target:
                return e
        raise ModelError(f"no event toggles {target!r}")

    @property
    def modes(self) -> Iterator[Mode]:
        for bits in itertools.product((False, True), repeat=len(self.automaton_inputs)):
            yield Mode(self.automaton_inputs, bits)

    def mode(self, values: Mapping[str, bool] | BinaryAssignment) -> Mode:
        if isinstance(values, BinaryAssignment):
            values = values.as_dict()
        missing = [b for b in self.automaton_inputs if b not in values]
        if missing:
            raise ModelError(f"mode needs values for {missing}")
        return Mode(self.automaton_inputs, tuple(bool(values[b]) for b in self.automaton_inputs))

    def check_mode(self, mode: Mode) -> None:
        if mode.inputs != self.automaton_inputs or len(mode.values) != len(mode.inputs):
            raise ModelError(f"mode {mode.id} is not declared in automaton {self.name}")

    def state(self, values: Mapping[str, float]) -> StateVector:
        missing = [s for s in self.state_ids if s not in values]
        extra = [s for s in values if s not in self.state_ids]
        if missing or extra:
            raise ModelError(f"state mismatch: missing {missing}, unknown {extra}")
        return StateVector(self.state_ids, tuple(float(values[s]) for s in self.state_ids))

    def input_assignment(self, values: Mapping[str, bool]) -> BinaryAssignment:
        missing = [b for b in self.inputs if b not in values]
        if missing:
            raise ModelError(f"missing inputs {missing}")
        return BinaryAssignment(self.inputs, tuple(bool(values[b]) for b in self.inputs))

    # -- dynamics -----------------------------------------------------------

    def flows(self, mode: Mode, state: StateVector) -> dict[str, float]:
        """Signed flow through every open valve/pump (positive src -> dst)."""
        x = state.as_dict()
        tank_level = {t.name: x[t.level] for t in self.tanks}
        out: dict[str, float] = {}
        for v in self.valves:
            if not mode[v.name]:
                continue
            if v.src == SUPPLY:
                out[v.name] = v.rate
            elif v.dst == DRAIN:
                out[v.name] = v.coeff * max(tank_level[v.src] - v.height, 0.0)
            else:
                head_src = max(tank_level[v.src] - v.height, 0.0)
                head_dst = max(tank_level[v.dst] - v.height, 0.0)
                out[v.name] = v.coeff * (head_src - head_dst)
        for p in self.pumps:
            if not mode[p.name]:
                continue
            if p.src == SUPPLY or tank_level[p.src] > 0.0:
                out[p.name] = p.rate
        return out

    def derivative(self, mode: Mode, state: StateVector) -> tuple[float, ...]:
        x = state.as_dict()
        by_name = {t.name: t for t in self.tanks}
        d = {sid: 0.0 for sid in self.state_ids}
        heat = {t.name: t.power for t in self.tanks if t.temperature}
        elements = {e.name: e for e in (*self.valves, *self.pumps)}

        def temp_of(node: str, el) -> float:
            if node == SUPPLY:
                return el.temperature
            t = by_name[node]
            return x[t.temperature] if t.temperature else 0.0

        for name, q in self.flows(mode, state).items():
            el = elements[name]
            src, dst = (el.src, el.dst) if q >= 0 else (el.dst, el.src)
            q = abs(q)
            if src in by_name:
                d[by_name[src].level] -= q
            if dst in by_name:
                tank = by_name[dst]
                d[tank.level] += q
                if tank.temperature:
                    heat[dst] += q * (temp_of(src, el) - x[tank.temperature])
        for o in self.outlets:
            d[by_name[o.tank].level] -= o.coeff * max(x[by_name[o.tank].level], 0.0)
        for name, h in heat.items():
            t = by_name[name]
            d[t.temperature] += h / max(x[t.level], MIN_MIXING_LEVEL)
        return tuple(d[sid] for sid in self.state_ids)

    def flow(self, mode: Mode) -> FlowFunction:
        self.check_mode(mode)
        return FlowFunction(mode.id, lambda s, m=mode: self.derivative(m, s))

    def transition(self, event: Event, mode: Mode, state: StateVector) -> tuple[Mode, StateVector]:
        return apply_event(self, event, mode, state)


# ---------------------------------------------------------------------------
# operations


def step(
    automaton: HybridAutomaton,
    mode: Mode,
    state: StateVector,
    dt: float,
    perturbation: Callable[[StateVector], Mapping[str, float]] | None = None,
) -> StateVector:
    """One explicit-Euler step of length ``dt``; levels are clamped at 0.

    ``perturbation`` adds extra derivative terms (used for injected faults).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    automaton.check_mode(mode)
    deriv = list(automaton.derivative(mode, state))
    if perturbation is not None:
        extra = perturbation(state)
        for i, sid in enumerate(state.ids):
            deriv[i] += extra.get(sid, 0.0)
    if not all(math.isfinite(v) for v in deriv):
        raise NumericError(f"non-finite derivative in mode {mode.id}")
    levels = {t.level for t in automaton.tanks}
    new = []
    for sid, v, dv in zip(state.ids, state.values, deriv):
        nv = v + dt * dv
        if sid in levels and nv < 0.0:
            nv = 0.0
        new.append(nv)
    return StateVector(state.ids, tuple(new))


def apply_event(automaton: HybridAutomaton, event: Event, mode: Mode, state: StateVector) -> tuple[Mode, StateVector]:
    if event not in automaton.events:
        raise ModelError(f"undeclared event {event.id!r}")
    automaton.check_mode(mode)
    return mode.toggled(event.target), state


def apply_exchange(
    automaton: HybridAutomaton,
    flag: str,
    mode: Mode,
    state: StateVector,
    intervals: Iterable[IntervalSpec],
) -> tuple[Mode, StateVector]:
    """Swap in the spare for ``flag``'s component; its states go to ok midpoints."""
    if flag not in automaton.exchange_flags:
        raise ModelError(f"undeclared exchange flag {flag!r}")
    owned = automaton.exchange_states.get(flag, ())
    if not owned:
        raise ModelError(f"exchange flag {flag!r} has no mapped states")
    specs = {s.state_id: s for s in intervals}
    return mode, state.replace(**{sid: specs[sid].midpoint for sid in owned})


# ---------------------------------------------------------------------------
# parameter records and builders


@dataclass(frozen=True)
class TwoTankParameters:
    version: str = "two-tank/2"
    supply_rate: float = 0.6          # cm/s through v01 / v02
    supply_temperature: float = 40.0  # degC
    outlet_coeff: float = 0.015       # 1/s, consumer valves v10 / v20
    pump_rate: float = 0.3            # cm/s, p12 / p21
    heater_power: float = 13.0        # degC*cm/s into T1
    cooler_power: float = -12.0       # degC*cm/s into T2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "TwoTankParameters":
        return cls(**{f.name: d[f.name] for f in fields(cls) if f.name in d})


@dataclass(frozen=True)
class ThreeTankParameters:
    version: str = "three-tank/2"
    pump_rate: float = 0.7            # cm/s, p1 -> T1, p2 -> T3
    valve_coeff: float = 0.1          # 1/s, all tank-to-tank valves
    upper_valve_height: float = 30.0  # cm, v12a / v23a
    lower_valve_height: float = 0.0   # cm, v12b / v23b
    outlet_coeff: float = 0.06        # 1/s, consumer outflow of T2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping) -> "ThreeTankParameters":
        return cls(**{f.name: d[f.name] for f in fields(cls) if f.name in d})


TWO_TANK_INTERVALS = (
    IntervalSpec("level_T1", 30.0, 40.0),
    IntervalSpec("temp_T1", 65.0, 75.0),
    IntervalSpec("level_T2", 30.0, 40.0),
    IntervalSpec("temp_T2", 10.0, 20.0),
)

THREE_TANK_INTERVALS = (
    IntervalSpec("level_T1", 10.0, 20.0),
    IntervalSpec("level_T2", 10.0, 20.0),
    IntervalSpec("level_T3", 10.0, 20.0),
)


def build_two_tank(params: TwoTankParameters | None = None):
    """Hot tank T1 (heater) and cold tank T2 (cooler).

    v01/v02 fill from the supply, v10/v20 deliver to consumers, p12/p21
    pump between the tanks. Returns ``(automaton, intervals, exchange map)``.
    """
    p = params or TwoTankParameters()
    exchange = {"ext_T1": ("level_T1", "temp_T1"), "ext_T2": ("level_T2", "temp_T2")}
    automaton = HybridAutomaton(
        name="two-tank",
        tanks=(
            Tank("T1", "level_T1", "temp_T1", power=p.heater_power),
            Tank("T2", "level_T2", "temp_T2", power=p.cooler_power),
        ),
        valves=(
            Valve("v01", SUPPLY, "T1", rate=p.supply_rate, temperature=p.supply_temperature),
            Valve("v10", "T1", DRAIN, coeff=p.outlet_coeff),
            Valve("v02", SUPPLY, "T2", rate=p.supply_rate, temperature=p.supply_temperature),
            Valve("v20", "T2", DRAIN, coeff=p.outlet_coeff),
        ),
        pumps=(Pump("p12", "T1", "T2", p.pump_rate), Pump("p21", "T2", "T1", p.pump_rate)),
        outlets=(),
        exchange_flags=("ext_T1", "ext_T2"),
        exchange_states=exchange,
        parameters=p,
    )
    return automaton, TWO_TANK_INTERVALS, dict(exchange)


def build_three_tank(params: ThreeTankParameters | None = None):
    """Three tanks in a row; pumps feed T1 and T3, T2 has a constant outlet.

    Upper valves v12a/v23a sit at 30 cm, lower valves v12b/v23b at 0 cm.
    Returns ``(automaton, intervals, exchange map)``.
    """
    p = params or ThreeTankParameters()
    exchange = {f"ext_T{i}": (f"level_T{i}",) for i in (1, 2, 3)}
    hi, lo, k = p.upper_valve_height, p.lower_valve_height, p.valve_coeff
    automaton = HybridAutomaton(
        name="three-tank",
        tanks=(Tank("T1", "level_T1"), Tank("T2", "level_T2"), Tank("T3", "level_T3")),
        valves=(
            Valve("v12a", "T1", "T2", height=hi, coeff=k),
            Valve("v12b", "T1", "T2", height=lo, coeff=k),
            Valve("v23a", "T2", "T3", height=hi, coeff=k),
            Valve("v23b", "T2", "T3", height=lo, coeff=k),
        ),
        pumps=(Pump("p1", SUPPLY, "T1", p.pump_rate), Pump("p2", SUPPLY, "T3", p.pump_rate)),
        outlets=(Outlet("T2", p.outlet_coeff),),
        exchange_flags=("ext_T1", "ext_T2", "ext_T3"),
        exchange_states=exchange,
        parameters=p,
    )
    return automaton, THREE_TANK_INTERVALS, dict(exchange)


BUILDERS = {"two-tank": build_two_tank, "three-tank": build_three_tank}


def build_system(name: str, params: Mapping | None = None):
    """Builder lookup by system name, optionally from a serialized parameter record."""
    if name == "two-tank":
        return build_two_tank(TwoTankParameters.from_dict(params) if params else None)
    if name == "three-tank":
        return build_three_tank(ThreeTankParameters.from_dict(params) if params else None)
    raise ModelError(f"unknown system {name!r}")


def midpoint_state(automaton: HybridAutomaton, intervals: Sequence[IntervalSpec]) -> StateVector:
    specs = {s.state_id: s for s in intervals}
    return automaton.state({sid: specs[sid].midpoint for sid in automaton.state_ids})
