"""Flip literals and sequential-counter cardinality constraints."""

from __future__ import annotations

from typing import Mapping, Sequence

from .formula import VarPool


def encode_flip_literals(observed: Mapping[str, bool], decision_vars: Mapping[str, int]) -> list[int]:
    """One literal per input that is true exactly when the input changes.

    Since the observed value is a constant, ``observed XOR new`` reduces to
    the decision variable (observed false) or its negation (observed true).
    """
    return [-decision_vars[k] if observed[k] else decision_vars[k] for k in decision_vars]


def encode_at_most_k(lits: Sequence[int], k: int, pool: VarPool) -> list[list[int]]:
    """Sinz sequential counter for ``sum(lits) <= k``.

    Register ``s[i][j]`` is forced true once at least ``j+1`` of the first
    ``i+1`` literals are true; overflow past ``k`` is forbidden.
    """
    n = len(lits)
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k >= n:
        return []
    if k == 0:
        return [[-x] for x in lits]

    clauses: list[list[int]] = []
    s = [[pool.fresh() for _ in range(k)] for _ in range(n - 1)]
    clauses.append([-lits[0], s[0][0]])
    for j in range(1, k):
        clauses.append([-s[0][j]])
    for i in range(1, n - 1):
        x = lits[i]
        clauses.append([-x, s[i][0]])
        clauses.append([-s[i - 1][0], s[i][0]])
        for j in range(1, k):
            clauses.append([-x, -s[i - 1][j - 1], s[i][j]])
            clauses.append([-s[i - 1][j], s[i][j]])
        clauses.append([-x, -s[i - 1][k - 1]])
    clauses.append([-lits[n - 1], -s[n - 2][k - 1]])
    return clauses


def unary_counter(lits: Sequence[int], pool: VarPool) -> tuple[list[list[int]], list[int]]:
    """Sequential counter with open outputs, for bounds set by assumption.

    Returns ``(clauses, outputs)`` where ``outputs[j]`` is forced true when
    at least ``j+1`` literals are true. Assuming ``-outputs[b]`` therefore
    enforces ``sum(lits) <= b`` without re-encoding.
    """
    n = len(lits)
    clauses: list[list[int]] = []
    if n == 0:
        return clauses, []
    prev: list[int] = []
    for i, x in enumerate(lits):
        width = i + 1
        cur = [pool.fresh() for _ in range(width)]
        clauses.append([-x, cur[0]])
        for j in range(width):
            if j < len(prev):
                clauses.append([-prev[j], cur[j]])
            if j >= 1:
                clauses.append([-x, -prev[j - 1], cur[j]])
        prev = cur
    return clauses, prev
