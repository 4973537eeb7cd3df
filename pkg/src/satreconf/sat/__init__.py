"""Propositional logic toolkit: formulas, CNF, cardinality encodings, CDCL."""

from .cardinality import encode_at_most_k, encode_flip_literals, unary_counter
from .cnf import CnfFormula, DimacsError, parse_dimacs
from .formula import (
    FALSE,
    TRUE,
    And,
    Atom,
    AtomTable,
    EncodingError,
    Formula,
    Implies,
    Not,
    Or,
    VarPool,
    atoms_of,
    conj,
    disj,
    evaluate,
    parse,
    to_cnf,
)
from .solver import ContractViolation, Model, Solver, assign, sat

__all__ = [
    "And", "Atom", "AtomTable", "CnfFormula", "ContractViolation", "DimacsError",
    "EncodingError", "FALSE", "Formula", "Implies", "Model", "Not", "Or", "Solver",
    "TRUE", "VarPool", "assign", "atoms_of", "conj", "disj", "encode_at_most_k",
    "encode_flip_literals", "evaluate", "parse", "parse_dimacs", "sat", "to_cnf",
    "unary_counter",
]
