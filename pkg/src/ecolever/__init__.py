"""Bilevel tax/subsidy design for circular packaging supply chains.

A government leader sets one carbon tax rate plus per-route subsidies; a
cost-minimizing industry follower allocates packaging demand across
end-of-life routes. The leader searches policy space (seeded particle swarm
or analytic corner enumeration) subject to a self-financing budget, with the
follower solved exactly at every step.
"""

from .errors import (
    CalibrationError,
    EcoleverError,
    InfeasibleError,
    InvalidAllocationError,
    NoThresholdError,
    NumericFailureError,
    ResourceBoundError,
    ResourceLimitError,
    UnboundedError,
    UndefinedIndexError,
    ValidationError,
)
from .model import (
    Allocation,
    LowerResult,
    PolicyVector,
    RouteSpec,
    Scenario,
    SensitivityModifiers,
    apply_modifiers,
    evaluate_allocation,
    quantize_rate,
    to_decimal,
)
from .lower import (
    LinearProgram,
    SimplexResult,
    TieSet,
    net_unit_cost,
    optimistic_select,
    simplex_solve,
    solve_lower_greedy,
    solve_lower_milp,
)
from .engine import (
    BilevelOutcome,
    COMBINED,
    MODES,
    Objective,
    PsoParams,
    SUBSIDY_ONLY,
    TAX_ONLY,
    default_bounds,
    domain_informed_points,
    evaluate_policy,
    optimize,
    pso_run,
)
from .oracle import (
    EnumerationResult,
    GridAxis,
    enumerate_lower,
    grid_bilevel,
)
from .analysis import (
    BudgetLine,
    CalibrationAnchors,
    FixedTaxRequirement,
    ParameterSweep,
    SweepRecord,
    budget_sweep,
    calibrate_case_study,
    check_calibration,
    cheapest_route,
    closed_form_optimize,
    dominant_route,
    fit_slope,
    required_budget_for_fixed_tax,
    sensitivity_distance,
    sensitivity_loss,
    subsidy_threshold,
    tax_budget_line,
    tax_threshold,
)
from .scenario_io import (
    bundled_scenario_path,
    format_decimal,
    load_bundled_scenario,
    load_scenario,
    save_scenario,
    write_outcome_json,
    write_sensitivity_csv,
    write_svg_line_chart,
    write_sweep_csv,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "BilevelOutcome",
    "BudgetLine",
    "COMBINED",
    "CalibrationAnchors",
    "CalibrationError",
    "EcoleverError",
    "EnumerationResult",
    "FixedTaxRequirement",
    "GridAxis",
    "InfeasibleError",
    "InvalidAllocationError",
    "LinearProgram",
    "LowerResult",
    "MODES",
    "NoThresholdError",
    "NumericFailureError",
    "Objective",
    "ParameterSweep",
    "PolicyVector",
    "PsoParams",
    "ResourceBoundError",
    "ResourceLimitError",
    "RouteSpec",
    "SUBSIDY_ONLY",
    "Scenario",
    "SensitivityModifiers",
    "SimplexResult",
    "SweepRecord",
    "TAX_ONLY",
    "TieSet",
    "UnboundedError",
    "UndefinedIndexError",
    "ValidationError",
    "apply_modifiers",
    "budget_sweep",
    "bundled_scenario_path",
    "calibrate_case_study",
    "check_calibration",
    "cheapest_route",
    "closed_form_optimize",
    "default_bounds",
    "domain_informed_points",
    "dominant_route",
    "enumerate_lower",
    "evaluate_allocation",
    "evaluate_policy",
    "fit_slope",
    "format_decimal",
    "grid_bilevel",
    "load_bundled_scenario",
    "load_scenario",
    "net_unit_cost",
    "optimistic_select",
    "optimize",
    "pso_run",
    "quantize_rate",
    "required_budget_for_fixed_tax",
    "save_scenario",
    "sensitivity_distance",
    "sensitivity_loss",
    "simplex_solve",
    "solve_lower_greedy",
    "solve_lower_milp",
    "subsidy_threshold",
    "tax_budget_line",
    "tax_threshold",
    "to_decimal",
    "write_outcome_json",
    "write_sensitivity_csv",
    "write_svg_line_chart",
    "write_sweep_csv",
]
