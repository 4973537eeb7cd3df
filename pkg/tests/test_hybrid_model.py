import math

import pytest

from satreconf.discretization import NumericError
from satreconf.hybrid_model import (
    THREE_TANK_INTERVALS,
    TWO_TANK_INTERVALS,
    BinaryAssignment,
    Event,
    Mode,
    ModelError,
    StateVector,
    ThreeTankParameters,
    TwoTankParameters,
    apply_event,
    apply_exchange,
    build_system,
    build_three_tank,
    build_two_tank,
    midpoint_state,
    step,
)

THREE, _, _ = build_three_tank()
TWO, _, _ = build_two_tank()


def mode(automaton, **on):
    return automaton.mode({b: on.get(b, False) for b in automaton.automaton_inputs})


def test_declarations():
    assert THREE.state_ids == ("level_T1", "level_T2", "level_T3")
    assert THREE.inputs == ("v12a", "v12b", "v23a", "v23b", "p1", "p2", "ext_T1", "ext_T2", "ext_T3")
    assert TWO.state_ids == ("level_T1", "temp_T1", "level_T2", "temp_T2")
    assert TWO.units["temp_T1"] == "degC" and TWO.units["level_T2"] == "cm"
    assert len(list(THREE.modes)) == 2 ** 6
    assert len({m.id for m in TWO.modes}) == 2 ** 6


def test_three_tank_derivative_by_hand():
    x = THREE.state({"level_T1": 20.0, "level_T2": 10.0, "level_T3": 15.0})
    d = THREE.derivative(mode(THREE, v12b=True), x)
    # 0.1 * (20 - 10) through v12b, outlet 0.06 * 10 from T2
    assert d == pytest.approx((-1.0, 1.0 - 0.6, 0.0))


def test_upper_valve_needs_head_above_its_height():
    x = THREE.state({"level_T1": 25.0, "level_T2": 10.0, "level_T3": 15.0})
    assert THREE.flows(mode(THREE, v12a=True), x) == {"v12a": 0.0}
    x = x.replace(level_T1=35.0)
    assert THREE.flows(mode(THREE, v12a=True), x)["v12a"] == pytest.approx(0.5)


def test_two_tank_mixing_by_hand():
    x = TWO.state({"level_T1": 35.0, "temp_T1": 70.0, "level_T2": 35.0, "temp_T2": 15.0})
    d = dict(zip(TWO.state_ids, TWO.derivative(mode(TWO, v01=True), x)))
    assert d["level_T1"] == pytest.approx(0.6)
    assert d["temp_T1"] == pytest.approx((13.0 + 0.6 * (40.0 - 70.0)) / 35.0)
    assert d["level_T2"] == 0.0
    assert d["temp_T2"] == pytest.approx(-12.0 / 35.0)


def test_pump_carries_source_temperature():
    x = TWO.state({"level_T1": 35.0, "temp_T1": 70.0, "level_T2": 35.0, "temp_T2": 15.0})
    d = dict(zip(TWO.state_ids, TWO.derivative(mode(TWO, p12=True), x)))
    assert d["level_T1"] == pytest.approx(-0.3) and d["level_T2"] == pytest.approx(0.3)
    assert d["temp_T2"] == pytest.approx((-12.0 + 0.3 * (70.0 - 15.0)) / 35.0)


def test_pump_from_empty_tank_moves_nothing():
    x = TWO.state({"level_T1": 0.0, "temp_T1": 70.0, "level_T2": 35.0, "temp_T2": 15.0})
    assert "p12" not in TWO.flows(mode(TWO, p12=True), x)


def test_step_is_explicit_euler():
    x = THREE.state({"level_T1": 20.0, "level_T2": 10.0, "level_T3": 15.0})
    y = step(THREE, mode(THREE, v12b=True), x, 0.1)
    assert y.values == pytest.approx((19.9, 10.04, 15.0))


def test_step_clamps_levels_at_zero():
    x = THREE.state({"level_T1": 0.0, "level_T2": 0.01, "level_T3": 0.0})
    y = step(THREE, mode(THREE), x, 1.0, perturbation=lambda s: {"level_T2": -1.0})
    assert y["level_T2"] == 0.0


def test_step_rejects_bad_dt_and_mode():
    x = midpoint_state(THREE, THREE_TANK_INTERVALS)
    with pytest.raises(ValueError):
        step(THREE, mode(THREE), x, 0.0)
    with pytest.raises(ModelError):
        step(THREE, Mode(("v12a",), (True,)), x, 0.1)


def test_non_finite_derivative():
    x = midpoint_state(THREE, THREE_TANK_INTERVALS)
    with pytest.raises(NumericError):
        step(THREE, mode(THREE), x, 0.1, perturbation=lambda s: {"level_T1": math.inf})


def test_events_are_involutions():
    x = midpoint_state(TWO, TWO_TANK_INTERVALS)
    for m in list(TWO.modes)[::7]:
        for e in TWO.events:
            m1, x1 = apply_event(TWO, e, m, x)
            m2, x2 = apply_event(TWO, e, m1, x1)
            assert m1 != m and m2 == m and x2 == x


def test_one_event_per_automaton_input():
    assert [e.target for e in THREE.events] == list(THREE.automaton_inputs)
    with pytest.raises(ModelError):
        THREE.event("ext_T1")
    with pytest.raises(ModelError):
        apply_event(THREE, Event("toggle_zz", "zz"), mode(THREE), midpoint_state(THREE, THREE_TANK_INTERVALS))


def test_exchange_resets_only_owned_states():
    x = TWO.state({"level_T1": 5.0, "temp_T1": 30.0, "level_T2": 50.0, "temp_T2": 5.0})
    m = mode(TWO)
    m1, y = apply_exchange(TWO, "ext_T1", m, x, TWO_TANK_INTERVALS)
    assert m1 == m
    assert y.as_dict() == {"level_T1": 35.0, "temp_T1": 70.0, "level_T2": 50.0, "temp_T2": 5.0}
    with pytest.raises(ModelError):
        apply_exchange(TWO, "v01", m, x, TWO_TANK_INTERVALS)


def test_state_vector_invariants():
    with pytest.raises(ValueError):
        StateVector(("a", "a"), (1.0, 2.0))
    with pytest.raises(NumericError):
        StateVector(("a",), (math.nan,))
    with pytest.raises(ModelError):
        THREE.state({"level_T1": 1.0})


def test_binary_assignment():
    a = BinaryAssignment(("x", "y"), (False, True))
    b = a.with_values(x=True)
    assert a.differences(b) == frozenset({"x"})
    assert str(b) == "x=1 y=1"
    with pytest.raises(ValueError):
        BinaryAssignment(("x", "x"), (False, True))


def test_parameter_records_round_trip():
    for cls in (TwoTankParameters, ThreeTankParameters):
        p = cls()
        assert cls.from_dict(p.to_dict()) == p
    automaton, _, _ = build_system("three-tank", {"pump_rate": 0.5})
    assert automaton.parameters.pump_rate == 0.5
    with pytest.raises(ModelError):
        build_system("four-tank")


def test_three_tank_drains_with_pumps_off():
    # lower valves open, pumps off: the T2 outlet is the only way out
    x = midpoint_state(THREE, THREE_TANK_INTERVALS)
    m = mode(THREE, v12b=True, v23b=True)
    for _ in range(100):
        x = step(THREE, m, x, 0.1)
    assert all(v < 15.0 for v in x.values)
