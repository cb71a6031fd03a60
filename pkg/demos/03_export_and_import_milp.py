"""Export the MILP as LP text, solve it, and import the solution as a plan.

The exported file is plain CPLEX-LP text any MILP solver consumes. Here the
bundled exhaustive optimizer stands in for the external solver; its solution
file (name/value lines) round-trips through import_solution back into a plan
the evaluator accepts.
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "tests"))
from scenarios import tiny_mixed

from uavplan import (
    build_milp,
    check_feasibility,
    export_lp,
    import_solution,
    parse_lp,
    parse_solution,
    satisfaction,
    solve_model_exhaustive,
)
from uavplan.milp import solution_to_text

scenario = tiny_mixed()
model = build_milp(scenario)
text = export_lp(model)
print(f"model: {len(model.variables)} variables, {len(model.constraints)} rows")
print("\n".join(text.splitlines()[:8]))
print("...")

reparsed = parse_lp(text)
status, value, solution = solve_model_exhaustive(reparsed, time_budget_s=120)
print("solver status:", status, " optimum:", value)

plan = import_solution(model, parse_solution(solution_to_text(solution)))
print("imported plan feasible:", check_feasibility(scenario, plan, tol=1e-4).ok)
print("evaluator objective:", satisfaction(scenario, plan).objective)
