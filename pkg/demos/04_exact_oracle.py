"""Solve a tiny instance to the proven optimum and sanity-check the heuristic.

The exact engine enumerates every trajectory/payload assignment (UAVs are
interchangeable, so multisets), solves the continuous remainder with the
bundled simplex, and returns the max-min satisfaction plan. The insertion
heuristic can never beat it.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "tests"))
from scenarios import tiny_mixed

from uavplan import (
    EnumerationLimits,
    check_feasibility,
    insertion_solve,
    satisfaction,
    solve_exact,
)

scenario = tiny_mixed()
result = solve_exact(scenario, EnumerationLimits())
print(f"exact optimum: {result.objective:.6f}")
print(f"proven optimal: {result.proven_optimal} after {result.assignments_visited} assignments")
print("trajectories:", result.plan.locations.tolist())
print("feasible per evaluator:", check_feasibility(scenario, result.plan).ok)

tours, plan = insertion_solve(scenario)
heuristic_objective = satisfaction(scenario, plan).objective
print(f"heuristic objective: {heuristic_objective:.6f} (<= exact: "
      f"{heuristic_objective <= result.objective + 1e-9})")
