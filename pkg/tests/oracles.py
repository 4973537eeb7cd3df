"""Independent brute-force oracles used by the test-suite.

Truth tables are bit-parallel: for ``n`` variables, bit ``a`` of a mask is
assignment number ``a``, and variable ``v`` (1-based) is true in assignment
``a`` iff bit ``v-1`` of ``a`` is set.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product


@lru_cache(maxsize=64)
def columns(n: int) -> tuple[int, ...]:
    total = 1 << n
    cols = []
    for v in range(n):
        half = 1 << v
        m = ((1 << half) - 1) << half   # one period: half zeros then half ones
        length = 2 * half
        while length < total:
            m |= m << length
            length *= 2
        cols.append(m)
    return tuple(cols)


def satisfying_mask(n: int, clauses) -> int:
    """Bitmask of all assignments over ``n`` vars satisfying every clause."""
    cols = columns(n)
    full = (1 << (1 << n)) - 1
    acc = full
    for c in clauses:
        cm = 0
        for lit in c:
            col = cols[abs(lit) - 1]
            cm |= col if lit > 0 else full ^ col
        acc &= cm
        if not acc:
            break
    return acc


def brute_sat(n: int, clauses) -> bool:
    return satisfying_mask(n, clauses) != 0


def dpll(clauses) -> bool:
    """Plain recursive DPLL with unit propagation; no learning, no heuristics."""
    clauses = [frozenset(c) for c in clauses]
    while True:
        if any(not c for c in clauses):
            return False
        unit = next((c for c in clauses if len(c) == 1), None)
        if unit is None:
            break
        (lit,) = unit
        clauses = [c - {-lit} for c in clauses if lit not in c]
    if not clauses:
        return True
    lit = next(iter(clauses[0]))
    return dpll(list(clauses) + [frozenset([lit])]) or dpll(list(clauses) + [frozenset([-lit])])


def projected_count(n: int, clauses, keep: list[int]) -> int:
    """Number of distinct assignments to ``keep`` vars that extend to a model."""
    clauses = [tuple(c) for c in clauses]
    count = 0
    for bits in product((False, True), repeat=len(keep)):
        units = [(v if b else -v,) for v, b in zip(keep, bits)]
        count += dpll(clauses + units)
    return count


def truth_table_count(formula, names: list[str]) -> int:
    from satreconf.sat import evaluate

    return sum(
        evaluate(formula, dict(zip(names, bits)))
        for bits in product((False, True), repeat=len(names))
    )
