"""Immutable CNF clause databases and DIMACS serialization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO


class DimacsError(ValueError):
    pass


@dataclass(frozen=True)
class CnfFormula:
    """A clause list over variables ``1..num_vars``.

    Clauses are tuples of nonzero signed ints. Tautologies are removed and
    duplicate literals collapsed on construction.
    """

    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for c in self.clauses:
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range 1..{self.num_vars}")

    @classmethod
    def from_clauses(cls, clauses: Iterable[Iterable[int]], num_vars: int | None = None) -> "CnfFormula":
        out = []
        top = 0
        for c in clauses:
            lits = tuple(dict.fromkeys(c))
            if any(-lit in lits for lit in lits):
                continue
            out.append(lits)
            if lits:
                top = max(top, max(abs(x) for x in lits))
        return cls(top if num_vars is None else max(num_vars, top), tuple(out))

    def conjoin(self, *others: "CnfFormula | Iterable[Iterable[int]]") -> "CnfFormula":
        clauses = list(self.clauses)
        n = self.num_vars
        for o in others:
            if isinstance(o, CnfFormula):
                n = max(n, o.num_vars)
                clauses.extend(o.clauses)
            else:
                clauses.extend(tuple(c) for c in o)
        return CnfFormula.from_clauses(clauses, num_vars=n)

    def with_units(self, lits: Iterable[int]) -> "CnfFormula":
        return self.conjoin([(lit,) for lit in lits])

    def __len__(self) -> int:
        return len(self.clauses)

    def is_satisfied_by(self, values) -> bool:
        """``values[v]`` is the truth value of variable ``v`` (index 0 unused)."""
        return all(any(values[abs(l)] == (l > 0) for l in c) for c in self.clauses)

    # -- DIMACS -------------------------------------------------------------

    def to_dimacs(self, comments: Iterable[str] = ()) -> str:
        lines = [f"c {line}" for line in comments]
        lines.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        lines.extend(" ".join(map(str, c + (0,))) for c in self.clauses)
        return "\n".join(lines) + "\n"

    def write_dimacs(self, fh: TextIO, comments: Iterable[str] = ()) -> None:
        fh.write(self.to_dimacs(comments))


def parse_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF text. Clauses may span lines; ``%`` ends the body."""
    header = None
    clauses: list[list[int]] = []
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if header is not None or len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: bad header {line!r}")
            header = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            raise DimacsError(f"line {lineno}: clause before header")
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(current)
                current = []
            else:
                current.append(lit)
    if header is None:
        raise DimacsError("missing 'p cnf' header")
    if current:
        clauses.append(current)
    nvars, nclauses = header
    if len(clauses) != nclauses:
        raise DimacsError(f"header declares {nclauses} clauses, found {len(clauses)}")
    top = max((abs(l) for c in clauses for l in c), default=0)
    if top > nvars:
        raise DimacsError(f"variable {top} exceeds declared count {nvars}")
    return CnfFormula.from_clauses(clauses, num_vars=nvars)
