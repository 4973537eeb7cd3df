"""Run both shipped fault suites and print the results table.

Run: python3 demos/results_table.py [seed]
"""

import sys
import time

from satreconf.harness import SuiteReport, run_suite, shipped_suite

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
t0 = time.perf_counter()
reports = [run_suite(shipped_suite(name), seed=seed) for name in ("two-tank", "three-tank")]
both = SuiteReport(reports[0].reports + reports[1].reports)
print(both.table())
print(f"{len(both.reports)} scenarios in {time.perf_counter() - t0:.1f}s")

failed = [r for r in both.reports if not r.recovered]
for r in failed:
    print(f"{r.scenario_id}: {r.faults} -> {r.status}")
