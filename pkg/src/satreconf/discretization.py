"""Interval abstraction of continuous states into low/ok/high predicates.

All real-number comparisons happen here, before anything reaches the
solver: the observation is turned into a truth assignment over predicate
atoms, and only those atoms enter the propositional encoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

PREDICATES = ("low", "ok", "high")


class ConfigurationError(ValueError):
    """An observation does not match the interval specs it is checked against."""


class NumericError(ArithmeticError):
    """A non-finite value reached a place that requires real numbers."""


@dataclass(frozen=True)
class IntervalSpec:
    state_id: str
    lb: float
    ub: float

    def __post_init__(self):
        if not (math.isfinite(self.lb) and math.isfinite(self.ub)) or not self.lb < self.ub:
            raise ValueError(f"invalid interval [{self.lb}, {self.ub}] for {self.state_id}")

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lb + self.ub)

    def classify(self, x: float) -> str:
        if not math.isfinite(x):
            raise NumericError(f"non-finite value {x!r} for {self.state_id}")
        if x < self.lb:
            return "low"
        if x > self.ub:
            return "high"
        return "ok"


def atom_name(predicate: str, state_id: str) -> str:
    """Solver atom for ``predicate(state_id)``, e.g. ``low:level_T1``."""
    return f"{predicate}:{state_id}"


@dataclass(frozen=True)
class QualitativeObservation:
    """Exactly one of low/ok/high per state, in spec order."""

    labels: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for sid, label in self.labels:
            if label not in PREDICATES:
                raise ValueError(f"unknown predicate {label!r} for {sid}")

    def __getitem__(self, state_id: str) -> str:
        for sid, label in self.labels:
            if sid == state_id:
                return label
        raise KeyError(state_id)

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(self.labels)

    @property
    def state_ids(self) -> tuple[str, ...]:
        return tuple(sid for sid, _ in self.labels)

    def truth_assignment(self) -> dict[str, bool]:
        """Truth value of every predicate atom for the observed states."""
        return {
            atom_name(p, sid): p == label
            for sid, label in self.labels
            for p in PREDICATES
        }

    def invalid(self) -> tuple[tuple[str, str], ...]:
        return tuple((sid, lab) for sid, lab in self.labels if lab != "ok")

    @classmethod
    def from_mapping(cls, labels: Mapping[str, str]) -> "QualitativeObservation":
        return cls(tuple(labels.items()))

    def __str__(self) -> str:
        return ", ".join(f"{lab}({sid})" for sid, lab in self.labels)


def _values(observation) -> Mapping[str, float]:
    if isinstance(observation, Mapping):
        return observation
    return observation.as_dict()


def discretize(observation, specs: Iterable[IntervalSpec]) -> QualitativeObservation:
    """Label every observed state low/ok/high; bounds are inclusive for ok.

    ``observation`` is a :class:`~satreconf.hybrid_model.StateVector` or a
    plain mapping of state id to value. Every observed state needs a spec.
    """
    values = _values(observation)
    by_id = {s.state_id: s for s in specs}
    missing = [sid for sid in values if sid not in by_id]
    if missing:
        raise ConfigurationError(f"no interval spec for {missing}")
    return QualitativeObservation(tuple((sid, by_id[sid].classify(values[sid])) for sid in values))


def is_all_ok(q: QualitativeObservation) -> bool:
    return all(label == "ok" for _, label in q)


def predicate_atoms(specs: Iterable[IntervalSpec]) -> list[str]:
    """Stable atom list: spec order, then low/ok/high per state."""
    return [atom_name(p, s.state_id) for s in specs for p in PREDICATES]
