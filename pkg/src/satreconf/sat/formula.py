"""Propositional formulas, the shared atom table, and Tseitin conversion to CNF.

Formulas are small immutable trees. ``And(())`` is the constant true and
``Or(())`` the constant false, so no separate constant node is needed.

The infix grammar accepted by :func:`parse` (lowest to highest precedence)::

    expr    := implies
    implies := or ('->' implies)?          # right associative
    or      := and ('|' and)*
    and     := unary ('&' unary)*
    unary   := '~' unary | '(' expr ')' | 'true' | 'false' | NAME

NAME may contain letters, digits, ``_``, ``.`` and ``:``. Parentheses are
reserved for grouping, so predicate atoms are spelled ``low:level_T1``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

from .cnf import CnfFormula


class EncodingError(ValueError):
    """Raised when a formula references an atom the table does not know."""


@dataclass(frozen=True)
class Atom:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self) -> str:
        return f"~{_paren(self.arg)}"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]

    def __str__(self) -> str:
        if not self.args:
            return "true"
        return " & ".join(_paren(a) for a in self.args)


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]

    def __str__(self) -> str:
        if not self.args:
            return "false"
        return " | ".join(_paren(a) for a in self.args)


@dataclass(frozen=True)
class Implies:
    lhs: "Formula"
    rhs: "Formula"

    def __str__(self) -> str:
        return f"{_paren(self.lhs)} -> {_paren(self.rhs)}"


Formula = Union[Atom, Not, And, Or, Implies]

TRUE = And(())
FALSE = Or(())


def _paren(f: Formula) -> str:
    if isinstance(f, Atom) or (isinstance(f, (And, Or)) and not f.args):
        return str(f)
    if isinstance(f, Not):
        return str(f)
    return f"({f})"


def conj(*args: Formula) -> Formula:
    flat: list[Formula] = []
    for a in args:
        flat.extend(a.args if isinstance(a, And) else (a,))
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*args: Formula) -> Formula:
    flat: list[Formula] = []
    for a in args:
        flat.extend(a.args if isinstance(a, Or) else (a,))
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def atoms_of(f: Formula) -> set[str]:
    """Names of all atoms occurring in ``f``."""
    out: set[str] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            out.add(g.name)
        elif isinstance(g, Not):
            stack.append(g.arg)
        elif isinstance(g, (And, Or)):
            stack.extend(g.args)
        else:
            stack.extend((g.lhs, g.rhs))
    return out


def evaluate(f: Formula, values: Mapping[str, bool]) -> bool:
    """Truth value of ``f`` under a total assignment to its atoms."""
    if isinstance(f, Atom):
        return bool(values[f.name])
    if isinstance(f, Not):
        return not evaluate(f.arg, values)
    if isinstance(f, And):
        return all(evaluate(a, values) for a in f.args)
    if isinstance(f, Or):
        return any(evaluate(a, values) for a in f.args)
    return (not evaluate(f.lhs, values)) or evaluate(f.rhs, values)


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(->|[~&|()]|[A-Za-z_][A-Za-z0-9_.:]*)")


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SyntaxError(f"unexpected character at {pos} in {text!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse(text: str) -> Formula:
    """Parse an infix boolean expression (see module docstring)."""
    toks = _tokenize(text)
    pos = 0

    def peek() -> str | None:
        return toks[pos] if pos < len(toks) else None

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(toks):
            raise SyntaxError(f"unexpected end of expression in {text!r}")
        tok = toks[pos]
        if expected is not None and tok != expected:
            raise SyntaxError(f"expected {expected!r}, got {tok!r} in {text!r}")
        pos += 1
        return tok

    def implies() -> Formula:
        lhs = or_()
        if peek() == "->":
            take()
            return Implies(lhs, implies())
        return lhs

    def or_() -> Formula:
        parts = [and_()]
        while peek() == "|":
            take()
            parts.append(and_())
        return disj(*parts) if len(parts) > 1 else parts[0]

    def and_() -> Formula:
        parts = [unary()]
        while peek() == "&":
            take()
            parts.append(unary())
        return conj(*parts) if len(parts) > 1 else parts[0]

    def unary() -> Formula:
        tok = take()
        if tok == "~":
            return Not(unary())
        if tok == "(":
            inner = implies()
            take(")")
            return inner
        if tok == "true":
            return TRUE
        if tok == "false":
            return FALSE
        if tok in ("&", "|", ")", "->"):
            raise SyntaxError(f"unexpected {tok!r} in {text!r}")
        return Atom(tok)

    result = implies()
    if pos != len(toks):
        raise SyntaxError(f"trailing input {toks[pos:]!r} in {text!r}")
    return result


# ---------------------------------------------------------------------------
# variable numbering


class AtomTable:
    """Maps atom names to DIMACS variable indices, starting at 1.

    One table is shared by discretization atoms, input atoms and the
    solver so that every module agrees on the numbering.
    """

    def __init__(self, names: Iterable[str] = ()):
        self._index: dict[str, int] = {}
        self._names: list[str] = []
        for n in names:
            self.declare(n)

    def declare(self, name: str) -> int:
        if name in self._index:
            return self._index[name]
        self._names.append(name)
        self._index[name] = len(self._names)
        return self._index[name]

    def var(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise EncodingError(f"undeclared atom {name!r}") from None

    def name(self, var: int) -> str:
        return self._names[var - 1]

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __len__(self) -> int:
        return len(self._names)

    def __iter__(self) -> Iterator[str]:
        return iter(self._names)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._names)


class VarPool:
    """Hands out fresh auxiliary variables above a fixed offset."""

    def __init__(self, start: int):
        self.top = start - 1

    def fresh(self) -> int:
        self.top += 1
        return self.top


# ---------------------------------------------------------------------------
# Tseitin


def to_cnf(f: Formula, table: AtomTable, pool: VarPool | None = None) -> CnfFormula:
    """Equisatisfiable CNF for ``f`` using Tseitin definitions.

    Every model of the result, projected onto the table's atoms, satisfies
    ``f``; every model of ``f`` extends uniquely to the definition variables.
    """
    if pool is None:
        pool = VarPool(len(table) + 1)
    for name in atoms_of(f):
        table.var(name)
    clauses: list[list[int]] = []
    cache: dict[Formula, int] = {}

    def lit(g: Formula) -> int:
        if isinstance(g, Atom):
            return table.var(g.name)
        if isinstance(g, Not):
            return -lit(g.arg)
        if g in cache:
            return cache[g]
        if isinstance(g, Implies):
            v = lit(Or((Not(g.lhs), g.rhs)))
            cache[g] = v
            return v
        kids = [lit(a) for a in g.args]
        v = pool.fresh()
        if isinstance(g, And):
            # v <-> AND(kids)
            clauses.append([v] + [-k for k in kids])
            clauses.extend([-v, k] for k in kids)
        else:
            clauses.append([-v] + kids)
            clauses.extend([v, -k] for k in kids)
        cache[g] = v
        return v

    def require(g: Formula) -> None:
        if isinstance(g, And):
            for a in g.args:
                require(a)
        elif isinstance(g, Or):
            clauses.append([lit(a) for a in g.args])
        elif isinstance(g, Implies):
            clauses.append([-lit(g.lhs), lit(g.rhs)])
        elif isinstance(g, Not) and isinstance(g.arg, Or):
            for a in g.arg.args:
                require(Not(a))
        elif isinstance(g, Not) and isinstance(g.arg, Not):
            require(g.arg.arg)
        else:
            clauses.append([lit(g)])

    require(f)
    return CnfFormula.from_clauses(clauses, num_vars=max(pool.top, len(table)))
