"""How the flip bound rises: SAT verdict per bound for a two-tank conflict.

Low level in T1 together with low temperature in T2 asks for contradicting
pump settings; the verdict stays UNSAT at every bound.

Run: python3 demos/incremental_bounds.py
"""

from satreconf.discretization import QualitativeObservation
from satreconf.hybrid_model import BinaryAssignment
from satreconf.reconf_engine import ReconfProblem, bound_verdicts, sat_reconf
from satreconf.system_model import build_two_tank_sm

sm = build_two_tank_sm()
inputs = BinaryAssignment(sm.inputs, tuple(b in ("v01", "v02", "v10") for b in sm.inputs))

for labels in (
    {"level_T1": "low", "temp_T1": "ok", "level_T2": "ok", "temp_T2": "ok"},
    {"level_T1": "low", "temp_T1": "ok", "level_T2": "ok", "temp_T2": "low"},
):
    p = ReconfProblem(sm, QualitativeObservation.from_mapping(labels), inputs)
    verdicts = bound_verdicts(p)
    print(p.observation)
    print("  SAT by bound:", " ".join(f"{k}:{'y' if v else 'n'}" for k, v in enumerate(verdicts)))
    print("  ", sat_reconf(p).describe())
