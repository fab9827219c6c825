"""Closed-form policy analysis, budget sweeps, sensitivity drivers, and the
coffee-packaging case-study calibration.

The closed forms exploit the pure-linear follower: with one tax rate t and a
subsidy s on a single target route, the follower is indifferent between the
target and the pre-policy cheapest route exactly when s = dc - de * t (dc the
unit-cost gap, de the unit-emission saving), and the policy is self-financing
exactly when budget + t * E_target >= demand * s. Eliminating s gives a
straight line t(B) = (N * dc - B) / E_cheapest whose root is the budget at
which the tax vanishes. Everything is exact decimal arithmetic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from decimal import Decimal

from .engine import (
    BilevelOutcome,
    COMBINED,
    MODES,
    Objective,
    PsoParams,
    _fitness,
    _natural_value,
    domain_informed_points,
    evaluate_policy,
    optimize,
)
from .errors import EcoleverError, NoThresholdError, CalibrationError, ValidationError
from .model import (
    PolicyVector,
    RouteSpec,
    Scenario,
    SensitivityModifiers,
    ZERO,
    apply_modifiers,
    to_decimal,
)


def cheapest_route(scenario: Scenario) -> RouteSpec:
    """Pre-policy follower choice; ties resolve to the lexicographically
    first route id, matching the follower's canonical tie-break."""
    return min(scenario.routes, key=lambda r: (r.unit_cost, r.route_id))


def subsidy_threshold(scenario: Scenario, target_route_id: str) -> Decimal:
    """Smallest per-unit subsidy that makes the target (weakly) cheapest at
    zero tax."""
    target = scenario.route(target_route_id)
    others = [r for r in scenario.routes if r.route_id != target_route_id]
    if not others:
        return ZERO
    gap = target.unit_cost - min(r.unit_cost for r in others)
    return max(ZERO, gap)


def tax_threshold(scenario: Scenario, target_route_id: str) -> Decimal:
    """Smallest tax rate making the target (weakly) cheapest with no subsidy.

    Each competitor contributes a half-line of admissible taxes; the answer is
    the intersection. Raises NoThresholdError when some competitor stays
    cheaper at every tax rate (it pollutes no more and costs no more), so no
    tax alone can induce the switch.
    """
    target = scenario.route(target_route_id)
    lower = ZERO
    upper = None
    for r in scenario.routes:
        if r.route_id == target_route_id:
            continue
        dc = r.unit_cost - target.unit_cost        # competitor cost advantage if < 0
        de = r.unit_emissions - target.unit_emissions
        if de > 0:
            lower = max(lower, max(ZERO, -dc / de))
        elif de < 0:
            if dc < 0:
                raise NoThresholdError(
                    f"{r.route_id} stays cheaper than {target_route_id} at every tax rate")
            upper = dc / -de if upper is None else min(upper, dc / -de)
        elif dc < 0:
            raise NoThresholdError(
                f"{r.route_id} undercuts {target_route_id} at equal emissions")
    if upper is not None and lower > upper:
        raise NoThresholdError(
            f"no single tax rate makes {target_route_id} cheapest")
    return lower


@dataclass(frozen=True)
class BudgetLine:
    """Piecewise-linear minimal tax rate as a function of the leader budget,
    for policies that flip the follower onto one target route.

    Main segment (lower_kink <= B <= kink): t = intercept + slope * B with the
    indifference subsidy dc - de * t alongside. Above kink the subsidy alone
    suffices (t = 0); below lower_kink the subsidy would go negative, so the
    tax rides max(switch threshold, -B / E_target) and the subsidy is zero.
    """

    slope: Decimal
    intercept: Decimal
    kink: Decimal
    lower_kink: Decimal      # None: the subsidy stays positive at every budget
    target_emissions_total: Decimal
    threshold: Decimal       # pure-tax switch rate; None: tax alone cannot switch

    def tax_at(self, budget) -> Decimal:
        budget = to_decimal(budget, "budget")
        if budget >= self.kink:
            return ZERO
        if self.lower_kink is None or budget >= self.lower_kink:
            return self.intercept + self.slope * budget
        revenue_tax = (-budget / self.target_emissions_total
                       if self.target_emissions_total else ZERO)
        return max(self.threshold, revenue_tax)


def tax_budget_line(scenario: Scenario, target_route_id: str) -> BudgetLine:
    """Closed-form budget/tax trade-off for inducing one target route.

    Degenerates to the zero line when the target is already cheapest.
    """
    target = scenario.route(target_route_id)
    base = cheapest_route(scenario)
    dc = target.unit_cost - base.unit_cost
    n = scenario.demand
    e_base_total = base.unit_emissions * n
    e_target_total = target.unit_emissions * n
    if dc <= 0 or e_base_total == 0:
        return BudgetLine(slope=ZERO, intercept=ZERO, kink=ZERO, lower_kink=ZERO,
                          target_emissions_total=e_target_total, threshold=ZERO)
    de = base.unit_emissions - target.unit_emissions
    slope = Decimal(-1) / e_base_total
    intercept = dc * n / e_base_total
    kink = dc * n
    if de > 0:
        threshold = dc / de
        lower_kink = kink - threshold * e_base_total
    else:
        threshold = None          # dirtier target: subsidy never hits zero
        lower_kink = None
    return BudgetLine(slope=slope, intercept=intercept, kink=kink,
                      lower_kink=lower_kink,
                      target_emissions_total=e_target_total, threshold=threshold)


@dataclass(frozen=True)
class FixedTaxRequirement:
    budget: Decimal          # outlay minus revenue; negative means self-funding
    tax_income: Decimal      # t * E_target once the switch has happened
    subsidy_outlay: Decimal  # demand * indifference subsidy


def required_budget_for_fixed_tax(scenario: Scenario, tax_rate,
                                  target_route_id: str) -> FixedTaxRequirement:
    """Budget needed to flip the follower onto the target at a given tax rate,
    using the indifference subsidy for the remainder of the cost gap."""
    tax_rate = to_decimal(tax_rate, "tax_rate")
    if tax_rate < 0:
        raise ValidationError(["tax_rate must be >= 0"])
    target = scenario.route(target_route_id)
    base = cheapest_route(scenario)
    dc = target.unit_cost - base.unit_cost
    de = base.unit_emissions - target.unit_emissions
    subsidy = max(ZERO, dc - de * tax_rate)
    outlay = subsidy * scenario.demand
    income = tax_rate * target.unit_emissions * scenario.demand
    return FixedTaxRequirement(budget=outlay - income, tax_income=income,
                               subsidy_outlay=outlay)


def closed_form_optimize(scenario: Scenario, objective, budget,
                         mode: str = COMBINED) -> BilevelOutcome:
    """Evaluate only the analytic candidate policies and pick the best.

    For pure-linear scenarios the optimum always sits on one of these corners
    (zero policy, indifference subsidies, budget-balanced tax/subsidy pairs),
    so this is the fast exact counterpart to the swarm search.
    """
    objective = Objective(objective)
    budget = to_decimal(budget, "budget")
    if mode not in MODES:
        raise ValidationError([f"unknown mode: {mode!r}"])
    candidates = ([PolicyVector.zero()] if objective == Objective.MOST_PROFITABLE
                  else domain_informed_points(scenario, budget, mode))
    best = None
    for policy in candidates:
        value, result, feasible = evaluate_policy(scenario, policy, objective, budget)
        key = (not feasible, _fitness(objective, value, policy))
        if best is None or key < best[0]:
            best = (key, policy, result, feasible)
    _, policy, result, feasible = best
    upper = _natural_value(objective, result)
    return BilevelOutcome(policy=policy, response=result, upper_value=upper,
                          feasible=feasible, evaluations=len(candidates),
                          trace=((0, upper),), objective=objective,
                          mode=mode, budget=budget)


@dataclass(frozen=True)
class SweepRecord:
    budget: Decimal
    tax_rate: Decimal
    tax_income: Decimal
    subsidy_outlay: Decimal
    upper_value: Decimal
    units: dict
    industry_cost: Decimal
    feasible: bool


def _record(outcome: BilevelOutcome) -> SweepRecord:
    r = outcome.response
    return SweepRecord(
        budget=outcome.budget,
        tax_rate=outcome.policy.tax_rate,
        tax_income=r.tax_payment,
        subsidy_outlay=r.subsidy_outlay,
        upper_value=outcome.upper_value,
        units=dict(r.allocation.units),
        industry_cost=r.industry_cost,
        feasible=outcome.feasible,
    )


def budget_sweep(scenario: Scenario, objective, budgets, mode: str = COMBINED,
                 engine: str = "closed-form", params: PsoParams = None):
    """Optimize once per budget and tabulate the outcomes.

    engine is "closed-form" (analytic corners only) or "pso" (full swarm).
    A budget whose solve fails is skipped with a warning rather than sinking
    the whole sweep.
    """
    if engine not in ("closed-form", "pso"):
        raise ValidationError([f"unknown engine: {engine!r}"])
    records = []
    for budget in budgets:
        try:
            if engine == "pso":
                outcome = optimize(scenario, objective, budget, params=params, mode=mode)
            else:
                outcome = closed_form_optimize(scenario, objective, budget, mode=mode)
        except EcoleverError as exc:
            warnings.warn(f"budget {budget}: {exc}", stacklevel=2)
            continue
        records.append(_record(outcome))
    return records


def dominant_route(record: SweepRecord):
    """Route carrying the most units (ties to the first id); None when idle."""
    if not record.units:
        return None
    return max(sorted(record.units), key=lambda rid: record.units[rid])


def fit_slope(points):
    """Exact least-squares slope through (x, y) decimal pairs.

    Returns None for fewer than two distinct x values.
    """
    pts = [(to_decimal(x, "x"), to_decimal(y, "y")) for x, y in points]
    if len(pts) < 2:
        return None
    n = len(pts)
    mean_x = sum(p[0] for p in pts) / n
    mean_y = sum(p[1] for p in pts) / n
    sxx = sum((x - mean_x) ** 2 for x, _ in pts)
    if sxx == 0:
        return None
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in pts)
    return sxy / sxx


@dataclass(frozen=True)
class ParameterSweep:
    """Budget sweep at one setting of an operating parameter, plus fitted
    budget-response slopes over the records where the tax is active (the
    segment the closed forms predict to be linear)."""

    parameter: str
    value: Decimal
    records: tuple
    dominant_routes: tuple
    tax_income_slope: Decimal = None
    subsidy_slope: Decimal = None
    industry_cost_slope: Decimal = None


def _parameter_sweep(parameter, value, records) -> ParameterSweep:
    taxed = [r for r in records if r.tax_rate > 0 and r.feasible]
    return ParameterSweep(
        parameter=parameter,
        value=to_decimal(value, parameter),
        records=tuple(records),
        dominant_routes=tuple(dominant_route(r) for r in records),
        tax_income_slope=fit_slope([(r.budget, r.tax_income) for r in taxed]),
        subsidy_slope=fit_slope([(r.budget, r.subsidy_outlay) for r in taxed]),
        industry_cost_slope=fit_slope([(r.budget, r.industry_cost) for r in taxed]),
    )


def sensitivity_distance(scenario: Scenario, distances, budgets, objective,
                         mode: str = COMBINED, engine: str = "closed-form",
                         params: PsoParams = None):
    """Budget sweeps across wash-loop transport distances (miles)."""
    loss = scenario.modifiers.glass_loss_fraction
    sweeps = []
    for distance in distances:
        shifted = apply_modifiers(scenario, to_decimal(distance, "distance"), loss)
        records = budget_sweep(shifted, objective, budgets, mode=mode,
                               engine=engine, params=params)
        sweeps.append(_parameter_sweep("glass_wash_distance", distance, records))
    return sweeps


def sensitivity_loss(scenario: Scenario, losses, budgets, objective,
                     mode: str = COMBINED, engine: str = "closed-form",
                     params: PsoParams = None):
    """Budget sweeps across wash-loop breakage fractions."""
    distance = scenario.modifiers.glass_wash_distance
    sweeps = []
    for loss in losses:
        shifted = apply_modifiers(scenario, distance, to_decimal(loss, "loss"))
        records = budget_sweep(shifted, objective, budgets, mode=mode,
                               engine=engine, params=params)
        sweeps.append(_parameter_sweep("glass_loss_fraction", loss, records))
    return sweeps


# --- coffee-packaging case study -------------------------------------------

STRAP_ROUTE = "multilayer_strap_recycling"
LANDFILL_ROUTE = "multilayer_landfill"
GLASS_ROUTE = "glass_wash_reuse"


@dataclass(frozen=True)
class CalibrationAnchors:
    """Published totals the case-study scenario must reproduce, at the stated
    demand: per-pathway cost/emission/circularity aggregates, the operating
    point of the glass wash loop, and the sensitivity coefficients."""

    demand: int = 1000
    strap_total_cost: Decimal = Decimal("-0.93")
    strap_total_emissions: Decimal = Decimal("64.24")
    strap_circularity: Decimal = Decimal("1.275")
    landfill_total_cost: Decimal = Decimal("60.07")
    landfill_total_emissions: Decimal = Decimal("49.97")
    landfill_circularity: Decimal = Decimal("1.18")
    glass_total_cost: Decimal = Decimal("66.07")
    glass_total_emissions: Decimal = Decimal("50.08")
    glass_circularity: Decimal = Decimal("1.475")
    glass_wash_distance: Decimal = Decimal("65")
    glass_loss_fraction: Decimal = Decimal("0.0313")
    distance_cost_coeff: Decimal = Decimal("0.00002")
    distance_emission_coeff: Decimal = Decimal("0.0000044")
    loss_cost_coeff: Decimal = Decimal("2.63")
    loss_emission_coeff: Decimal = Decimal("0.25")
    tax_threshold_reference: Decimal = Decimal("4.3")
    tax_threshold_tolerance: Decimal = Decimal("0.02")

    def __post_init__(self):
        for fld in self.__dataclass_fields__:
            if fld == "demand":
                continue
            object.__setattr__(self, fld, to_decimal(getattr(self, fld), fld))


def check_calibration(scenario: Scenario, anchors: CalibrationAnchors = None):
    """Verify the scenario reproduces the anchors; returns residuals keyed by
    anchor name, or raises CalibrationError listing every violation."""
    anchors = anchors if anchors is not None else CalibrationAnchors()
    v = []
    residuals = {}
    n = scenario.demand
    if n != anchors.demand:
        v.append(f"demand is {n}, anchors expect {anchors.demand}")

    def probe(route_id, name, expected_cost, expected_e, expected_ci):
        try:
            r = scenario.route(route_id)
        except EcoleverError:
            v.append(f"missing route {route_id}")
            return None
        residuals[f"{name}_cost"] = r.unit_cost * n - expected_cost
        residuals[f"{name}_emissions"] = r.unit_emissions * n - expected_e
        residuals[f"{name}_circularity"] = r.unit_circularity - expected_ci
        for key in (f"{name}_cost", f"{name}_emissions", f"{name}_circularity"):
            if residuals[key] != 0:
                v.append(f"{key} off by {residuals[key]}")
        return r

    strap = probe(STRAP_ROUTE, "strap", anchors.strap_total_cost,
                  anchors.strap_total_emissions, anchors.strap_circularity)
    landfill = probe(LANDFILL_ROUTE, "landfill", anchors.landfill_total_cost,
                     anchors.landfill_total_emissions, anchors.landfill_circularity)
    glass = probe(GLASS_ROUTE, "glass", anchors.glass_total_cost,
                  anchors.glass_total_emissions, anchors.glass_circularity)

    if strap and landfill and glass:
        if not (landfill.unit_emissions < glass.unit_emissions < strap.unit_emissions):
            v.append("emission ordering must be landfill < glass < strap")
        if not (landfill.unit_circularity < strap.unit_circularity < glass.unit_circularity):
            v.append("circularity ordering must be landfill < strap < glass")
        if not (strap.unit_cost < landfill.unit_cost < glass.unit_cost):
            v.append("cost ordering must be strap < landfill < glass")
        if cheapest_route(scenario).route_id != STRAP_ROUTE:
            v.append("the strap pathway must be the pre-policy choice")
        sub_landfill = subsidy_threshold(scenario, LANDFILL_ROUTE)
        sub_glass = subsidy_threshold(scenario, GLASS_ROUTE)
        residuals["landfill_subsidy_threshold"] = sub_landfill
        residuals["glass_subsidy_threshold"] = sub_glass
        if not (ZERO < sub_landfill < sub_glass):
            v.append("subsidy thresholds must order landfill below glass")
        try:
            tau = tax_threshold(scenario, LANDFILL_ROUTE)
            residuals["landfill_tax_threshold"] = tau
            rel = (tau - anchors.tax_threshold_reference) / anchors.tax_threshold_reference
            if rel.copy_abs() > anchors.tax_threshold_tolerance:
                v.append(f"landfill tax threshold {tau} strays more than "
                         f"{anchors.tax_threshold_tolerance} from {anchors.tax_threshold_reference}")
        except NoThresholdError:
            v.append("a finite tax must be able to induce the landfill pathway")
        try:
            tax_threshold(scenario, GLASS_ROUTE)
            v.append("no finite tax may induce the glass pathway at the base point")
        except NoThresholdError:
            pass

    m = scenario.modifiers
    for fld in ("glass_wash_distance", "glass_loss_fraction", "distance_cost_coeff",
                "distance_emission_coeff", "loss_cost_coeff", "loss_emission_coeff"):
        got = getattr(m, fld)
        expected = getattr(anchors, fld)
        residuals[fld] = got - expected
        if got != expected:
            v.append(f"{fld} is {got}, anchors expect {expected}")
    if GLASS_ROUTE not in m.affected_route_ids:
        v.append("the glass route must respond to the wash-loop modifiers")

    if v:
        raise CalibrationError(v)
    return residuals


def calibrate_case_study(anchors: CalibrationAnchors = None) -> Scenario:
    """Build the coffee-packaging scenario from the anchors and verify it.

    Three calibrated pathways (multilayer pouch to strapping-based recycling,
    multilayer pouch to landfill, returnable glass jar through a wash loop)
    plus four clearly dominated alternatives that give the solvers a
    non-trivial catalog to reject.
    """
    anchors = anchors if anchors is not None else CalibrationAnchors()
    n = anchors.demand

    def unit(total):
        return total / n

    routes = (
        RouteSpec(
            route_id=STRAP_ROUTE,
            product_id="coffee_pouch_multilayer",
            technology_id="strap_recycling_line",
            unit_cost=unit(anchors.strap_total_cost),
            unit_emissions=unit(anchors.strap_total_emissions),
            unit_circularity=anchors.strap_circularity,
            recovered_outputs=("polyolefin_regranulate",),
            tags=("multilayer", "mechanical-recycling", "baseline"),
        ),
        RouteSpec(
            route_id=LANDFILL_ROUTE,
            product_id="coffee_pouch_multilayer",
            technology_id="landfill_site",
            unit_cost=unit(anchors.landfill_total_cost),
            unit_emissions=unit(anchors.landfill_total_emissions),
            unit_circularity=anchors.landfill_circularity,
            recovered_outputs=(),
            tags=("multilayer", "disposal"),
        ),
        RouteSpec(
            route_id=GLASS_ROUTE,
            product_id="coffee_jar_glass",
            technology_id="wash_reuse_loop",
            unit_cost=unit(anchors.glass_total_cost),
            unit_emissions=unit(anchors.glass_total_emissions),
            unit_circularity=anchors.glass_circularity,
            recovered_outputs=("washed_jar",),
            tags=("reuse", "glass"),
        ),
        # Dominated fillers: each costs more and emits more than some
        # calibrated pathway while recirculating less, so no sane policy
        # selects them. They keep the catalog from being a 3-way toy.
        RouteSpec(
            route_id="multilayer_incineration",
            product_id="coffee_pouch_multilayer",
            technology_id="waste_to_energy",
            unit_cost=Decimal("0.08"),
            unit_emissions=Decimal("0.095"),
            unit_circularity=Decimal("0.55"),
            tags=("multilayer", "energy-recovery"),
        ),
        RouteSpec(
            route_id="multilayer_pyrolysis",
            product_id="coffee_pouch_multilayer",
            technology_id="pyrolysis_reactor",
            unit_cost=Decimal("0.09"),
            unit_emissions=Decimal("0.088"),
            unit_circularity=Decimal("0.92"),
            recovered_outputs=("pyrolysis_oil",),
            tags=("multilayer", "chemical-recycling"),
        ),
        RouteSpec(
            route_id="monolayer_mechanical",
            product_id="coffee_pouch_monolayer",
            technology_id="film_recycling_line",
            unit_cost=Decimal("0.072"),
            unit_emissions=Decimal("0.081"),
            unit_circularity=Decimal("1.15"),
            recovered_outputs=("pe_regranulate",),
            tags=("monolayer", "mechanical-recycling"),
        ),
        RouteSpec(
            route_id="rigid_mechanical",
            product_id="coffee_can_rigid",
            technology_id="rigid_recycling_line",
            unit_cost=Decimal("0.075"),
            unit_emissions=Decimal("0.079"),
            unit_circularity=Decimal("1.05"),
            recovered_outputs=("pp_regranulate",),
            tags=("rigid", "mechanical-recycling"),
        ),
    )
    modifiers = SensitivityModifiers(
        glass_wash_distance=anchors.glass_wash_distance,
        glass_loss_fraction=anchors.glass_loss_fraction,
        distance_cost_coeff=anchors.distance_cost_coeff,
        distance_emission_coeff=anchors.distance_emission_coeff,
        loss_cost_coeff=anchors.loss_cost_coeff,
        loss_emission_coeff=anchors.loss_emission_coeff,
        affected_route_ids=(GLASS_ROUTE,),
    )
    scenario = Scenario(demand=n, routes=routes, modifiers=modifiers)
    check_calibration(scenario, anchors)
    return scenario
