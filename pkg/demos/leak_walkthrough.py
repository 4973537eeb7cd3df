"""Leak in T1 of the three-tank plant, from observation to new inputs.

Run: python3 demos/leak_walkthrough.py
"""

from satreconf.cli import problem_from_document, shipped_observation
from satreconf.harness import run_scenario, shipped_suite
from satreconf.reconf_engine import enumerate_valid, sat_reconf
from satreconf.system_model import active_constraints, build_three_tank_sm

sm = build_three_tank_sm()
p = problem_from_document(shipped_observation(), sm)
print("observation:", p.observation)
print("inputs:     ", p.inputs)
for c in active_constraints(sm, p.observation):
    print("active:     ", c, "--", c.rationale)

r = sat_reconf(p)
print("result:     ", r.describe())

# every one-flip alternative, by brute force
for k, alt in enumerate_valid(p):
    if k == 1:
        print("  also valid:", sorted(p.inputs.differences(alt)))

# the same fault in closed loop
scenario = next(s for s in shipped_suite("three-tank") if s.id == "th01")
print()
print(run_scenario(scenario).summary())
