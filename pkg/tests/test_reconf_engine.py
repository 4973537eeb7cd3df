import random

import pytest
from hypothesis import given, settings, strategies as st

from satreconf.discretization import IntervalSpec, QualitativeObservation
from satreconf.hybrid_model import BinaryAssignment, Configuration, StateVector
from satreconf.reconf_engine import (
    NO_RECONFIGURATION,
    SUCCESS,
    OracleScopeError,
    ReconfProblem,
    bound_verdicts,
    enumerate_valid,
    minimality_oracle,
    sat_reconf,
)
from satreconf.sat import parse_dimacs, sat
from satreconf.system_model import (
    ReconfConstraint,
    add_constraint,
    build_three_tank_sm,
    build_two_tank_sm,
    check_validity,
    empty_model,
)

THREE = build_three_tank_sm()
TWO = build_two_tank_sm()


def obs(sm, **labels):
    return QualitativeObservation(tuple((s.state_id, labels.get(s.state_id, "ok")) for s in sm.intervals))


def inputs(sm, **on):
    return BinaryAssignment(sm.inputs, tuple(on.get(b, False) for b in sm.inputs))


LEAK = ReconfProblem(THREE, obs(THREE, level_T1="low"), inputs(THREE, v12b=True, v23b=True, p1=True, p2=True))


@pytest.mark.parametrize("incremental", [True, False])
@pytest.mark.parametrize("seed", range(5))
def test_leak_example_one_flip(seed, incremental):
    r = sat_reconf(LEAK, seed=seed, incremental=incremental)
    assert r.status == SUCCESS
    assert r.flips in ({"v12b"}, {"ext_T1"})
    assert r.bound_used == 1 and r.solver_calls == 2  # zero flips, then at most one


def test_leak_example_enumeration_agrees():
    one_flip = sorted(tuple(sorted(LEAK.inputs.differences(a))) for k, a in enumerate_valid(LEAK) if k == 1)
    assert one_flip == [("ext_T1",), ("v12b",)]


def test_valid_configuration_is_unchanged():
    p = ReconfProblem(THREE, obs(THREE), inputs(THREE, v12b=True))
    r = sat_reconf(p)
    assert r.success and r.flips == frozenset() and r.new_inputs == p.inputs
    assert r.describe() == "no change needed (bound 1)"


def test_no_reconfiguration_when_both_end_tanks_low():
    p = ReconfProblem(THREE, obs(THREE, level_T1="low", level_T3="low"), inputs(THREE, v12b=True, v23b=True))
    r = sat_reconf(p)
    assert r.status == NO_RECONFIGURATION and r.new_inputs is None
    assert r.solver_calls == len(THREE.inputs) + 1
    assert enumerate_valid(p) == []
    assert minimality_oracle(p, r)
    assert r.describe() == "no reconfiguration exists"


def test_locked_inputs_keep_their_value():
    p = ReconfProblem(LEAK.sm, LEAK.observation, LEAK.inputs, frozenset({"v12b"}))
    r = sat_reconf(p)
    assert r.flips == {"ext_T1"}
    p = ReconfProblem(LEAK.sm, LEAK.observation, LEAK.inputs, frozenset({"v12b", "ext_T1"}))
    assert sat_reconf(p).status == NO_RECONFIGURATION


def test_problem_validation():
    with pytest.raises(ValueError):
        ReconfProblem(THREE, obs(THREE), inputs(TWO))
    with pytest.raises(ValueError):
        ReconfProblem(THREE, obs(THREE), inputs(THREE), frozenset({"zz"}))


def random_problem(sm, rng):
    q = QualitativeObservation(tuple((s.state_id, rng.choice(("low", "ok", "high"))) for s in sm.intervals))
    b = BinaryAssignment(sm.inputs, tuple(rng.random() < 0.5 for _ in sm.inputs))
    return ReconfProblem(sm, q, b)


@given(st.integers(0, 10 ** 6), st.sampled_from(["two", "three"]), st.booleans())
@settings(max_examples=60, deadline=None)
def test_minimal_against_enumeration(seed, which, incremental):
    sm = TWO if which == "two" else THREE
    p = random_problem(sm, random.Random(seed))
    r = sat_reconf(p, seed=seed, incremental=incremental)
    valid = enumerate_valid(p)
    if not valid:
        assert r.status == NO_RECONFIGURATION
        return
    assert r.success
    assert len(r.flips) == min(k for k, _ in valid)
    assert len(r.flips) <= r.bound_used
    cfg = Configuration(StateVector((), ()), r.new_inputs)
    assert check_validity(sm, cfg, p.observation)


@pytest.mark.parametrize("seed", range(20))
def test_bound_verdicts_are_monotone(seed):
    p = random_problem(THREE, random.Random(seed))
    v = bound_verdicts(p)
    assert v == sorted(v)
    valid = enumerate_valid(p)
    first = v.index(True) if True in v else None
    assert first == (min(k for k, _ in valid) if valid else None)


def test_dimacs_export(tmp_path):
    p = ReconfProblem(TWO, obs(TWO, level_T1="low", temp_T1="low"), inputs(TWO))
    r = sat_reconf(p, incremental=False, dimacs_dir=tmp_path)
    assert r.success
    assert [f.rsplit("/", 1)[1] for f in r.dimacs_files] == [f"two-tank_bound{k}.cnf" for k in range(1, r.bound_used + 1)]
    verdicts = [sat(parse_dimacs(open(f).read())) for f in r.dimacs_files]
    assert verdicts == [False] * (r.bound_used - 1) + [True]
    assert open(r.dimacs_files[0]).readline().startswith("c two-tank:")


def test_enumeration_scope_limit():
    sm = empty_model("big", [IntervalSpec("x", 0.0, 1.0)], [f"b{i}" for i in range(21)])
    sm = add_constraint(sm, ReconfConstraint.parse("low:x", "b0"))
    q = QualitativeObservation((("x", "low"),))
    p = ReconfProblem(sm, q, BinaryAssignment(sm.inputs, (False,) * 21))
    assert sat_reconf(p).flips == {"b0"}
    with pytest.raises(OracleScopeError):
        enumerate_valid(p)


def test_describe_lists_changes():
    p = ReconfProblem(THREE, obs(THREE, level_T2="high"), inputs(THREE, p1=True, p2=True, v12b=True, v23b=True))
    r = sat_reconf(p)
    assert r.describe().startswith(f"{len(r.flips)} flip(s) at bound {r.bound_used}: ")


@pytest.mark.parametrize("incremental", [True, False])
def test_valid_inputs_never_traded_for_one_flip(incremental):
    # regression: at bound 1 the solver used to return a one-flip model
    # although the observed inputs were already valid
    rng = random.Random(110)
    for _ in range(200):
        p = random_problem(THREE, rng)
        cfg = Configuration(StateVector((), ()), p.inputs)
        if check_validity(THREE, cfg, p.observation):
            assert sat_reconf(p, incremental=incremental).flips == frozenset()
