"""Mission planning toolkit for multitask UAV fleets."""

__version__ = "0.1.0"

from .evaluator import (
    Plan,
    SatisfactionReport,
    Violation,
    ViolationReport,
    battery_trace,
    check_feasibility,
    load_plan,
    plan_metrics,
    satisfaction,
    serialize_plan,
)
from .exact import EnumerationLimits, ExactResult, GuardError, solve_exact, solve_model_exhaustive
from .heuristic import (
    HeuristicConfig,
    InsertionError,
    RouteGraph,
    Tour,
    arc_service_weights,
    build_route_graph,
    insertion_solve,
    tours_to_plan,
)
from .milp import MilpModel, build_milp, export_lp, import_solution, parse_lp, parse_solution
from .scenario import (
    Location,
    Mission,
    PayloadItem,
    Scenario,
    ScenarioError,
    UavSpec,
    Zone,
    load_scenario,
    make_scenario,
    max_range,
    serialize_scenario,
    validate,
)
from .simplex import SimplexResult, simplex_solve
from .synth import Dims, generate_preset, generate_synthetic

__all__ = [
    "Plan",
    "SatisfactionReport",
    "Violation",
    "ViolationReport",
    "battery_trace",
    "check_feasibility",
    "load_plan",
    "plan_metrics",
    "satisfaction",
    "serialize_plan",
    "EnumerationLimits",
    "ExactResult",
    "GuardError",
    "solve_exact",
    "solve_model_exhaustive",
    "HeuristicConfig",
    "InsertionError",
    "RouteGraph",
    "Tour",
    "arc_service_weights",
    "build_route_graph",
    "insertion_solve",
    "tours_to_plan",
    "MilpModel",
    "build_milp",
    "export_lp",
    "import_solution",
    "parse_lp",
    "parse_solution",
    "Location",
    "Mission",
    "PayloadItem",
    "Scenario",
    "ScenarioError",
    "UavSpec",
    "Zone",
    "load_scenario",
    "make_scenario",
    "max_range",
    "serialize_scenario",
    "validate",
    "SimplexResult",
    "simplex_solve",
    "Dims",
    "generate_preset",
    "generate_synthetic",
]
