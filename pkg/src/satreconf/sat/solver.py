"""A complete CDCL solver: two watched literals, first-UIP learning,
activity-based branching with phase saving, and solving under assumptions.

Restarts are off by default; ``restarts=True`` enables a Luby schedule.
Branching ties are broken by a tiny seeded jitter on initial activities, so
a fixed seed gives identical models across runs.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .cnf import CnfFormula


class ContractViolation(RuntimeError):
    """Raised when a caller breaks a solver precondition (e.g. ASSIGN on UNSAT)."""


@dataclass(frozen=True)
class Model:
    """A total assignment; ``values[v]`` for ``v`` in ``1..num_vars``."""

    values: tuple[bool, ...]

    @property
    def num_vars(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, var: int) -> bool:
        return self.values[var]

    def lit_true(self, lit: int) -> bool:
        return self.values[abs(lit)] == (lit > 0)

    def satisfies(self, cnf: CnfFormula) -> bool:
        return cnf.is_satisfied_by(self.values)


def _luby(x: int) -> int:
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x %= size
    return 1 << seq


class Solver:
    """Incremental CDCL solver over DIMACS-style integer literals."""

    VAR_DECAY = 0.95

    def __init__(self, num_vars: int = 0, *, seed: int = 0, restarts: bool = False):
        self.rng = random.Random(seed)
        self.restarts = restarts
        self.num_vars = 0
        self.value: list[int] = [0]        # per var: 1 true, -1 false, 0 free
        self.level: list[int] = [0]
        self.reason: list[list[int] | None] = [None]
        self.activity: list[float] = [0.0]
        self.phase: list[bool] = [False]
        self.watches: dict[int, list[list[int]]] = {}
        self.clauses: list[list[int]] = []
        self.learnts: list[list[int]] = []
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.var_inc = 1.0
        self.ok = True
        self.conflicts = 0
        self.decisions = 0
        self._model: Model | None = None
        self.ensure_vars(num_vars)

    # -- setup --------------------------------------------------------------

    def ensure_vars(self, n: int) -> None:
        while self.num_vars < n:
            self.num_vars += 1
            v = self.num_vars
            self.value.append(0)
            self.level.append(0)
            self.reason.append(None)
            self.activity.append(self.rng.random() * 1e-6)
            self.phase.append(False)
            self.watches[v] = []
            self.watches[-v] = []

    def add_clause(self, lits: Iterable[int]) -> bool:
        """Add a clause at decision level 0. Returns False once UNSAT is known."""
        if self.trail_lim:
            self._backtrack(0)
        if not self.ok:
            return False
        clause = list(dict.fromkeys(lits))
        if any(-l in clause for l in clause):
            return True
        if clause:
            self.ensure_vars(max(abs(l) for l in clause))
        clause = [l for l in clause if self._lit_value(l) != -1]
        if any(self._lit_value(l) == 1 for l in clause):
            return True
        if not clause:
            self.ok = False
            return False
        if len(clause) == 1:
            self._enqueue(clause[0], None)
            if self._propagate() is not None:
                self.ok = False
            return self.ok
        self._attach(clause)
        self.clauses.append(clause)
        return True

    def add_cnf(self, cnf: CnfFormula) -> bool:
        self.ensure_vars(cnf.num_vars)
        for c in cnf.clauses:
            if not self.add_clause(c):
                return False
        return self.ok

    # -- core ---------------------------------------------------------------

    def _lit_value(self, lit: int) -> int:
        v = self.value[abs(lit)]
        return v if lit > 0 else -v

    def _attach(self, clause: list[int]) -> None:
        self.watches[clause[0]].append(clause)
        self.watches[clause[1]].append(clause)

    def _enqueue(self, lit: int, reason: list[int] | None) -> None:
        v = abs(lit)
        self.value[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _propagate(self) -> list[int] | None:
        """Unit propagation; returns a conflicting clause or None."""
        value = self.value
        while self.qhead < len(self.trail):
            p = self.trail[self.qhead]
            self.qhead += 1
            false_lit = -p
            ws = self.watches[false_lit]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                fv = value[abs(first)]
                if (fv if first > 0 else -fv) == 1:
                    ws[j] = c
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    lv = value[abs(lk)]
                    if (lv if lk > 0 else -lv) != -1:
                        c[1], c[k] = lk, false_lit
                        self.watches[lk].append(c)
                        break
                else:
                    ws[j] = c
                    j += 1
                    if (fv if first > 0 else -fv) == -1:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        self.qhead = len(self.trail)
                        return c
                    self._enqueue(first, c)
            del ws[j:]
        return None

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.num_vars + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        """First-UIP conflict analysis. Returns (learnt clause, backtrack level)."""
        seen = [False] * (self.num_vars + 1)
        learnt = [0]
        counter = 0
        cur_level = len(self.trail_lim)
        idx = len(self.trail) - 1
        p = None
        clause = confl
        while True:
            for q in clause:
                if p is not None and q == p:
                    continue
                v = abs(q)
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if self.level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(self.trail[idx])]:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            clause = self.reason[abs(p)]
            seen[abs(p)] = False
            counter -= 1
            if counter == 0:
                break
        learnt[0] = -p
        if len(learnt) == 1:
            back = 0
        else:
            best = max(range(1, len(learnt)), key=lambda i: self.level[abs(learnt[i])])
            learnt[1], learnt[best] = learnt[best], learnt[1]
            back = self.level[abs(learnt[1])]
        self.var_inc /= self.VAR_DECAY
        return learnt, back

    def _backtrack(self, level: int) -> None:
        if len(self.trail_lim) <= level:
            return
        start = self.trail_lim[level]
        for lit in self.trail[start:]:
            v = abs(lit)
            self.phase[v] = lit > 0
            self.value[v] = 0
            self.reason[v] = None
        del self.trail[start:]
        del self.trail_lim[level:]
        self.qhead = len(self.trail)

    def _pick_branch(self) -> int:
        best, best_act = 0, -1.0
        value, act = self.value, self.activity
        for v in range(1, self.num_vars + 1):
            if value[v] == 0 and act[v] > best_act:
                best, best_act = v, act[v]
        return best

    # -- public -------------------------------------------------------------

    def solve(self, assumptions: Sequence[int] = ()) -> bool:
        """Decide satisfiability under ``assumptions`` (a list of literals).

        Learnt clauses are kept across calls; assumptions are not.
        """
        self._model = None
        if not self.ok:
            return False
        for a in assumptions:
            self.ensure_vars(abs(a))
        self._backtrack(0)
        if self._propagate() is not None:
            self.ok = False
            return False
        restart_idx = 0
        budget = 100 * _luby(0) if self.restarts else -1
        since_restart = 0
        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                since_restart += 1
                if not self.trail_lim:
                    self.ok = False
                    return False
                learnt, back = self._analyze(confl)
                self._backtrack(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], None)
                else:
                    self._attach(learnt)
                    self.learnts.append(learnt)
                    self._enqueue(learnt[0], learnt)
                continue
            if budget >= 0 and since_restart >= budget:
                restart_idx += 1
                budget = 100 * _luby(restart_idx)
                since_restart = 0
                self._backtrack(0)
                continue
            lit = 0
            while len(self.trail_lim) < len(assumptions):
                a = assumptions[len(self.trail_lim)]
                av = self._lit_value(a)
                if av == 1:
                    self.trail_lim.append(len(self.trail))
                elif av == -1:
                    self._backtrack(0)
                    return False
                else:
                    lit = a
                    break
            if lit == 0:
                v = self._pick_branch()
                if v == 0:
                    self._model = Model((False,) + tuple(x == 1 for x in self.value[1:]))
                    self._backtrack(0)
                    return True
                lit = v if self.phase[v] else -v
                self.decisions += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, None)

    def model(self) -> Model:
        if self._model is None:
            raise ContractViolation("no model: last solve() was not SAT")
        return self._model


def sat(cnf: CnfFormula, *, seed: int = 0) -> bool:
    """SAT / UNSAT verdict for ``cnf``."""
    s = Solver(cnf.num_vars, seed=seed)
    return s.add_cnf(cnf) and s.solve()


def assign(cnf: CnfFormula, *, seed: int = 0) -> Model:
    """A satisfying assignment for ``cnf``; raises ContractViolation if UNSAT."""
    s = Solver(cnf.num_vars, seed=seed)
    if not (s.add_cnf(cnf) and s.solve()):
        raise ContractViolation("assign() called on an unsatisfiable formula")
    m = s.model()
    if not m.satisfies(cnf):
        raise ContractViolation("solver produced a model that violates a clause")
    return m
