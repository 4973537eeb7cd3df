import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_sat, projected_count, truth_table_count
from satreconf.sat import (
    FALSE,
    TRUE,
    And,
    Atom,
    AtomTable,
    CnfFormula,
    ContractViolation,
    DimacsError,
    EncodingError,
    Implies,
    Not,
    Or,
    Solver,
    VarPool,
    assign,
    atoms_of,
    encode_at_most_k,
    encode_flip_literals,
    evaluate,
    parse,
    parse_dimacs,
    sat,
    to_cnf,
    unary_counter,
)

NAMES = ["a", "b", "c", "d", "e"]

formulas = st.recursive(
    st.sampled_from(NAMES).map(Atom),
    lambda kids: st.one_of(
        kids.map(Not),
        st.lists(kids, min_size=0, max_size=3).map(lambda xs: And(tuple(xs))),
        st.lists(kids, min_size=0, max_size=3).map(lambda xs: Or(tuple(xs))),
        st.tuples(kids, kids).map(lambda p: Implies(*p)),
    ),
    max_leaves=12,
)


def random_cnf(rng, max_vars=20, max_clauses=90):
    n = rng.randint(1, max_vars)
    m = rng.randint(0, max_clauses)
    clauses = []
    for _ in range(m):
        width = rng.randint(1, 3)
        clauses.append([rng.choice((1, -1)) * rng.randint(1, n) for _ in range(width)])
    return n, clauses


# -- formulas ---------------------------------------------------------------


def test_parse_precedence_and_associativity():
    f = parse("a | b & ~c -> d -> e")
    assert f == Implies(Or((Atom("a"), And((Atom("b"), Not(Atom("c")))))), Implies(Atom("d"), Atom("e")))


def test_parse_predicate_atom_names():
    f = parse("low:level_T1 -> ~v12b | ext_T1")
    assert atoms_of(f) == {"low:level_T1", "v12b", "ext_T1"}


@pytest.mark.parametrize("bad", ["a &", "(a | b", "a b", "& a", "a $ b", ""])
def test_parse_rejects_malformed(bad):
    with pytest.raises(SyntaxError):
        parse(bad)


def test_constants():
    assert evaluate(TRUE, {}) and not evaluate(FALSE, {})
    assert parse("true") == TRUE and parse("false") == FALSE


@given(formulas)
def test_str_round_trips_through_parse(f):
    g = parse(str(f))
    names = sorted(atoms_of(f))
    assert truth_table_count(f, names) == truth_table_count(g, names)
    assert truth_table_count(And((f, Not(g))), names) == 0


@given(formulas)
@settings(max_examples=200)
def test_tseitin_preserves_projected_model_count(f):
    table = AtomTable(NAMES)
    cnf = to_cnf(f, table)
    keep = list(range(1, len(NAMES) + 1))
    assert projected_count(cnf.num_vars, cnf.clauses, keep) == truth_table_count(f, NAMES)


def test_to_cnf_undeclared_atom():
    with pytest.raises(EncodingError):
        to_cnf(parse("a & zz"), AtomTable(["a"]))


def test_atom_table_numbering_is_stable():
    t = AtomTable(["x", "y"])
    assert (t.var("x"), t.var("y"), t.declare("x"), t.declare("z")) == (1, 2, 1, 3)
    assert t.name(3) == "z" and len(t) == 3 and "y" in t


def test_var_pool_starts_at_offset():
    pool = VarPool(5)
    assert pool.top == 4
    assert [pool.fresh(), pool.fresh()] == [5, 6]


# -- CNF / DIMACS -------------------------------------------------------------


def test_cnf_drops_tautologies_and_duplicates():
    cnf = CnfFormula.from_clauses([[1, -1, 2], [2, 2, 3]])
    assert cnf.clauses == ((2, 3),)
    assert cnf.num_vars == 3


def test_dimacs_round_trip():
    rng = random.Random(3)
    for _ in range(50):
        n, clauses = random_cnf(rng)
        cnf = CnfFormula.from_clauses(clauses, num_vars=n)
        assert parse_dimacs(cnf.to_dimacs(["comment"])) == cnf


def test_dimacs_multiline_clauses_and_percent_terminator():
    cnf = parse_dimacs("c x\np cnf 3 2\n1 -2\n 0 3\n0\n%\n0\n")
    assert cnf.clauses == ((1, -2), (3,))


@pytest.mark.parametrize(
    "text",
    ["1 2 0\n", "p cnf 2 1\n1 3 0\n", "p cnf 2 2\n1 0\n", "p dnf 2 1\n1 0\n", "p cnf 2 1\np cnf 2 1\n1 0\n"],
)
def test_dimacs_errors(text):
    with pytest.raises(DimacsError):
        parse_dimacs(text)


def test_literal_out_of_range():
    with pytest.raises(ValueError):
        CnfFormula(2, ((3,),))


# -- solver -------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(4))
def test_solver_matches_brute_force(seed):
    rng = random.Random(seed)
    for _ in range(100):
        n, clauses = random_cnf(rng, max_vars=12, max_clauses=60)
        cnf = CnfFormula.from_clauses(clauses, num_vars=n)
        s = Solver(n, seed=seed)
        verdict = s.add_cnf(cnf) and s.solve()
        assert verdict == brute_sat(n, cnf.clauses)
        if verdict:
            assert s.model().satisfies(cnf)


def pigeonhole(holes):
    pigeons = holes + 1
    var = lambda p, h: p * holes + h + 1
    clauses = [[var(p, h) for h in range(holes)] for p in range(pigeons)]
    for h in range(holes):
        for p in range(pigeons):
            for q in range(p + 1, pigeons):
                clauses.append([-var(p, h), -var(q, h)])
    return CnfFormula.from_clauses(clauses)


@pytest.mark.parametrize("restarts", [False, True])
def test_pigeonhole_unsat(restarts):
    cnf = pigeonhole(5)
    s = Solver(cnf.num_vars, restarts=restarts)
    assert s.add_cnf(cnf) is True
    assert s.solve() is False


def test_empty_clause_and_empty_formula():
    assert sat(CnfFormula(0, ())) is True
    assert sat(CnfFormula(1, ((),))) is False


def test_assumptions_do_not_persist():
    s = Solver(2)
    s.add_clause([1, 2])
    assert s.solve([-1, -2]) is False
    assert s.solve([-1]) is True and s.model()[2]
    assert s.solve() is True


def test_incremental_clauses_after_solve():
    s = Solver(3)
    s.add_clause([1, 2, 3])
    assert s.solve()
    s.add_clause([-1])
    s.add_clause([-2])
    assert s.solve() and s.model()[3]
    s.add_clause([-3])
    assert not s.solve()


def test_model_without_sat_raises():
    s = Solver(1)
    s.add_clause([1])
    s.add_clause([-1])
    assert not s.solve()
    with pytest.raises(ContractViolation):
        s.model()
    with pytest.raises(ContractViolation):
        assign(CnfFormula(1, ((1,), (-1,))))


def test_same_seed_same_model():
    rng = random.Random(11)
    n, clauses = 20, [[rng.choice((1, -1)) * rng.randint(1, 20) for _ in range(3)] for _ in range(40)]
    cnf = CnfFormula.from_clauses(clauses, num_vars=n)
    assert assign(cnf, seed=7) == assign(cnf, seed=7)


# -- cardinality ----------------------------------------------------------------


def binom_prefix(n, k):
    from math import comb

    return sum(comb(n, i) for i in range(min(k, n) + 1))


@pytest.mark.parametrize("n", range(1, 7))
def test_at_most_k_counts(n):
    for k in range(n + 1):
        pool = VarPool(n + 1)
        clauses = encode_at_most_k(list(range(1, n + 1)), k, pool)
        total = max(pool.top, n)
        assert projected_count(total, clauses, list(range(1, n + 1))) == binom_prefix(n, k)


def test_at_most_k_with_negative_literals():
    # at most one of (~1, ~2, ~3): at least two of 1..3 true
    pool = VarPool(4)
    clauses = encode_at_most_k([-1, -2, -3], 1, pool)
    assert projected_count(max(pool.top, 3), clauses, [1, 2, 3]) == 4


def test_at_most_negative_k_rejected():
    with pytest.raises(ValueError):
        encode_at_most_k([1], -1, VarPool(2))


@pytest.mark.parametrize("n", range(1, 7))
def test_unary_counter_bound_by_assumption(n):
    pool = VarPool(n + 1)
    clauses, outputs = unary_counter(list(range(1, n + 1)), pool)
    assert len(outputs) == n
    for bound in range(n):
        units = clauses + [[-outputs[bound]]]
        assert projected_count(pool.top, units, list(range(1, n + 1))) == binom_prefix(n, bound)
    assert projected_count(pool.top, clauses, list(range(1, n + 1))) == 2 ** n


def test_flip_literals():
    lits = encode_flip_literals({"a": True, "b": False}, {"a": 4, "b": 5})
    assert lits == [-4, 5]
