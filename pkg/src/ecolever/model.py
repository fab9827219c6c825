"""Domain types and evaluation equations for policy-driven packaging recovery.

A Scenario is a catalog of end-of-life routes (product, technology, per-unit
cost / emissions / circularity) plus total demand. A PolicyVector is the
government's lever setting: one carbon tax rate and per-route subsidy rates.
The functions here evaluate allocations under a policy; they do no optimizing.

Every money, emission, and circularity quantity is an exact `decimal.Decimal`
so cost ties and policy thresholds reproduce bit for bit across platforms.
Floats are rejected at construction time; convert optimizer output explicitly
with `quantize_rate` first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation, ROUND_HALF_EVEN

from .errors import (
    InvalidAllocationError,
    UndefinedIndexError,
    ValidationError,
)

# Shared tolerances. Tie detection is far tighter than funds feasibility so a
# quantized rate sitting on an indifference line never leaks into infeasibility.
TIE_TOLERANCE = Decimal("1e-9")
FEASIBILITY_TOLERANCE = Decimal("1e-6")
RATE_QUANTUM = Decimal("1e-12")
CIRCULARITY_MAX = Decimal(2)

ZERO = Decimal(0)


def to_decimal(value, name="value", violations=None):
    """Coerce int/str/Decimal to Decimal; floats are refused.

    When a `violations` list is supplied, problems are appended there and ZERO
    is returned, letting callers gather every error before raising.
    """
    err = None
    if isinstance(value, Decimal):
        return value
    if isinstance(value, bool):
        err = f"{name}: booleans are not numeric"
    elif isinstance(value, int):
        return Decimal(value)
    elif isinstance(value, float):
        err = (f"{name}: floats are not accepted for exact quantities; "
               f"pass a string or use quantize_rate()")
    elif isinstance(value, str):
        try:
            return Decimal(value)
        except InvalidOperation:
            err = f"{name}: not a decimal literal: {value!r}"
    else:
        err = f"{name}: cannot interpret {type(value).__name__} as a decimal"
    if violations is not None:
        violations.append(err)
        return ZERO
    raise ValidationError([err])


def quantize_rate(value, rounding=ROUND_HALF_EVEN) -> Decimal:
    """Snap a float (e.g. a swarm position) onto the canonical 1e-12 rate grid."""
    return Decimal(value).quantize(RATE_QUANTUM, rounding=rounding)


@dataclass(frozen=True)
class RouteSpec:
    """One end-of-life route: a product routed through a recovery technology.

    unit_cost is the industry's net cost per packaging unit before any policy
    (production + transport + waste management - recovered-material revenue),
    so profitable routes carry negative values. unit_emissions is cradle-to-
    grave kg-CO2e per unit, unit_circularity the per-unit material circularity
    contribution (0..2). recovered_outputs and tags are descriptive metadata.
    """

    route_id: str
    product_id: str
    technology_id: str
    unit_cost: Decimal
    unit_emissions: Decimal
    unit_circularity: Decimal
    recovered_outputs: tuple = ()
    subsidizable: bool = True
    tags: tuple = ()
    stages: tuple = ()  # optional per-stage breakdown, never used in optimization

    def __post_init__(self):
        v = []
        for fld in ("unit_cost", "unit_emissions", "unit_circularity"):
            object.__setattr__(self, fld, to_decimal(getattr(self, fld), f"{self.route_id}.{fld}", v))
        object.__setattr__(self, "recovered_outputs", tuple(self.recovered_outputs))
        object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.route_id:
            v.append("route_id must be nonempty")
        if self.unit_emissions < 0:
            v.append(f"{self.route_id}: unit_emissions must be >= 0")
        if not (0 <= self.unit_circularity <= CIRCULARITY_MAX):
            v.append(f"{self.route_id}: unit_circularity must lie in [0, 2]")
        if v:
            raise ValidationError(v)


@dataclass(frozen=True)
class SensitivityModifiers:
    """Linear sensitivity state for wash-loop routes.

    Affected routes carry *effective* coefficients for the current distance and
    loss; `apply_modifiers` moves them to another operating point by adding
    coeff * (new - current). Unaffected routes never change.
    """

    glass_wash_distance: Decimal = ZERO     # one-way miles
    glass_loss_fraction: Decimal = ZERO     # breakage share per cycle, 0..1
    distance_cost_coeff: Decimal = ZERO     # $/unit/mile
    distance_emission_coeff: Decimal = ZERO  # kg/unit/mile
    loss_cost_coeff: Decimal = ZERO         # $/unit per loss fraction
    loss_emission_coeff: Decimal = ZERO     # kg/unit per loss fraction
    affected_route_ids: tuple = ()

    def __post_init__(self):
        v = []
        for fld in ("glass_wash_distance", "glass_loss_fraction",
                    "distance_cost_coeff", "distance_emission_coeff",
                    "loss_cost_coeff", "loss_emission_coeff"):
            object.__setattr__(self, fld, to_decimal(getattr(self, fld), fld, v))
        object.__setattr__(self, "affected_route_ids", tuple(self.affected_route_ids))
        if self.glass_wash_distance < 0:
            v.append("glass_wash_distance must be >= 0")
        if not (0 <= self.glass_loss_fraction < 1):
            v.append("glass_loss_fraction must lie in [0, 1)")
        if v:
            raise ValidationError(v)


@dataclass(frozen=True)
class Scenario:
    """Route catalog + demand + optional integer-programming extras."""

    demand: int
    routes: tuple
    modifiers: SensitivityModifiers = field(default_factory=SensitivityModifiers)
    technology_fixed_costs: dict = field(default_factory=dict)  # technology_id -> $ activation cost
    capacity_limits: dict = field(default_factory=dict)         # route_id -> max units

    def __post_init__(self):
        v = []
        object.__setattr__(self, "routes", tuple(self.routes))
        if not isinstance(self.demand, int) or isinstance(self.demand, bool):
            v.append("demand must be an integer")
        elif self.demand < 0:
            v.append("demand must be >= 0")
        if not self.routes:
            v.append("at least one route is required")
        ids = [r.route_id for r in self.routes]
        if len(set(ids)) != len(ids):
            v.append("route_ids must be unique")
        fixed = {}
        for tech, cost in dict(self.technology_fixed_costs).items():
            fixed[tech] = to_decimal(cost, f"technology_fixed_costs[{tech}]", v)
            if fixed[tech] < 0:
                v.append(f"technology_fixed_costs[{tech}] must be >= 0")
        object.__setattr__(self, "technology_fixed_costs", fixed)
        caps = {}
        for rid, cap in dict(self.capacity_limits).items():
            if rid not in ids:
                v.append(f"capacity_limits[{rid}]: unknown route")
            if not isinstance(cap, int) or isinstance(cap, bool) or cap < 0:
                v.append(f"capacity_limits[{rid}] must be a nonnegative integer")
            else:
                caps[rid] = cap
        object.__setattr__(self, "capacity_limits", caps)
        known_techs = {r.technology_id for r in self.routes}
        for tech in fixed:
            if tech not in known_techs:
                v.append(f"technology_fixed_costs[{tech}]: unknown technology")
        if not v and caps and all(r.route_id in caps for r in self.routes):
            if sum(caps.values()) < self.demand:
                v.append("capacity limits cannot absorb total demand")
        if v:
            raise ValidationError(v)
        object.__setattr__(self, "_by_id", {r.route_id: r for r in self.routes})

    def route(self, route_id: str) -> RouteSpec:
        try:
            return self._by_id[route_id]
        except KeyError:
            raise InvalidAllocationError(f"unknown route_id: {route_id!r}") from None

    def route_ids(self):
        """Route ids in canonical (lexicographic) order."""
        return sorted(self._by_id)

    def is_pure_linear(self) -> bool:
        """True when per-unit terms fully determine cost (no fixed costs, no capacities)."""
        return not self.technology_fixed_costs and not self.capacity_limits

    def capacity_of(self, route_id: str) -> int:
        return self.capacity_limits.get(route_id, self.demand)


@dataclass(frozen=True)
class PolicyVector:
    """Leader decision: one economy-wide carbon tax rate plus per-route subsidies.

    tax_rate is $/kg-CO2e, subsidy_rates $/unit on specific routes. Zero rates
    are dropped so two representations of the same policy compare equal.
    """

    tax_rate: Decimal = ZERO
    subsidy_rates: dict = field(default_factory=dict)

    def __post_init__(self):
        v = []
        object.__setattr__(self, "tax_rate", to_decimal(self.tax_rate, "tax_rate", v))
        rates = {}
        for rid, rate in dict(self.subsidy_rates).items():
            d = to_decimal(rate, f"subsidy_rates[{rid}]", v)
            if d < 0:
                v.append(f"subsidy_rates[{rid}] must be >= 0")
            elif d != 0:
                rates[rid] = d
        object.__setattr__(self, "subsidy_rates", rates)
        if self.tax_rate < 0:
            v.append("tax_rate must be >= 0")
        if v:
            raise ValidationError(v)

    @classmethod
    def zero(cls) -> "PolicyVector":
        return cls()

    def subsidy_for(self, route_id: str) -> Decimal:
        return self.subsidy_rates.get(route_id, ZERO)

    def total_rates(self) -> Decimal:
        return sum(self.subsidy_rates.values(), ZERO)


@dataclass(frozen=True)
class Allocation:
    """Units of demand assigned to each route. Zero entries are dropped."""

    units: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        v = []
        for rid, n in dict(self.units).items():
            if not isinstance(n, int) or isinstance(n, bool):
                v.append(f"units[{rid}] must be an integer")
            elif n < 0:
                v.append(f"units[{rid}] must be >= 0")
            elif n > 0:
                clean[rid] = n
        if v:
            raise ValidationError(v)
        object.__setattr__(self, "units", clean)

    def total(self) -> int:
        return sum(self.units.values())

    def units_for(self, route_id: str) -> int:
        return self.units.get(route_id, 0)


@dataclass(frozen=True)
class LowerResult:
    """Follower-side totals for one allocation under one policy."""

    allocation: Allocation
    industry_cost: Decimal
    total_emissions: Decimal
    circularity_index: Decimal
    subsidy_outlay: Decimal
    tax_payment: Decimal


def validate_allocation(scenario: Scenario, allocation: Allocation) -> None:
    """Raise InvalidAllocationError unless the allocation is well formed."""
    for rid, n in allocation.units.items():
        scenario.route(rid)  # raises on unknown id
        if n > scenario.capacity_of(rid):
            raise InvalidAllocationError(
                f"{rid}: {n} units exceed capacity {scenario.capacity_of(rid)}")
    if allocation.total() != scenario.demand:
        raise InvalidAllocationError(
            f"allocation covers {allocation.total()} units, demand is {scenario.demand}")


def validate_policy(scenario: Scenario, policy: PolicyVector) -> None:
    v = []
    for rid in policy.subsidy_rates:
        if rid not in scenario._by_id:
            v.append(f"subsidy_rates[{rid}]: unknown route")
        elif not scenario.route(rid).subsidizable:
            v.append(f"subsidy_rates[{rid}]: route is not subsidizable")
    if v:
        raise ValidationError(v)


def evaluate_emissions(scenario: Scenario, allocation: Allocation) -> Decimal:
    """Total kg-CO2e of an allocation."""
    validate_allocation(scenario, allocation)
    return sum((scenario.route(rid).unit_emissions * n
                for rid, n in allocation.units.items()), ZERO)


def evaluate_subsidy(scenario: Scenario, allocation: Allocation, policy: PolicyVector) -> Decimal:
    """Government subsidy outlay: sum of rate * units over subsidized routes."""
    validate_allocation(scenario, allocation)
    validate_policy(scenario, policy)
    return sum((policy.subsidy_for(rid) * n
                for rid, n in allocation.units.items()), ZERO)


def _active_fixed_costs(scenario: Scenario, allocation: Allocation) -> Decimal:
    if not scenario.technology_fixed_costs:
        return ZERO
    active = {scenario.route(rid).technology_id
              for rid, n in allocation.units.items() if n > 0}
    return sum((cost for tech, cost in scenario.technology_fixed_costs.items()
                if tech in active), ZERO)


def evaluate_cost(scenario: Scenario, allocation: Allocation, policy: PolicyVector) -> Decimal:
    """Industry total cost: unit costs + activation costs + tax - subsidies."""
    validate_allocation(scenario, allocation)
    validate_policy(scenario, policy)
    unit_part = sum((scenario.route(rid).unit_cost * n
                     for rid, n in allocation.units.items()), ZERO)
    tax = policy.tax_rate * evaluate_emissions(scenario, allocation)
    sub = evaluate_subsidy(scenario, allocation, policy)
    return unit_part + _active_fixed_costs(scenario, allocation) + tax - sub


def evaluate_circularity(scenario: Scenario, allocation: Allocation) -> Decimal:
    """Demand-weighted mean circularity of an allocation."""
    validate_allocation(scenario, allocation)
    if scenario.demand == 0:
        raise UndefinedIndexError("circularity is undefined at zero demand")
    total = sum((scenario.route(rid).unit_circularity * n
                 for rid, n in allocation.units.items()), ZERO)
    return total / Decimal(scenario.demand)


def evaluate_allocation(scenario: Scenario, allocation: Allocation,
                        policy: PolicyVector) -> LowerResult:
    """Bundle every follower-side total for one allocation under one policy."""
    emissions = evaluate_emissions(scenario, allocation)
    outlay = evaluate_subsidy(scenario, allocation, policy)
    tax_payment = policy.tax_rate * emissions
    unit_part = sum((scenario.route(rid).unit_cost * n
                     for rid, n in allocation.units.items()), ZERO)
    cost = unit_part + _active_fixed_costs(scenario, allocation) + tax_payment - outlay
    circ = evaluate_circularity(scenario, allocation) if scenario.demand else ZERO
    return LowerResult(
        allocation=allocation,
        industry_cost=cost,
        total_emissions=emissions,
        circularity_index=circ,
        subsidy_outlay=outlay,
        tax_payment=tax_payment,
    )


def apply_modifiers(scenario: Scenario, distance, loss) -> Scenario:
    """Re-situate affected routes at another (distance, loss) operating point.

    Coefficients move linearly: cost += cost_coeff * delta, emissions likewise,
    circularity never changes. Calling with the scenario's current values is an
    exact identity, and the operation is idempotent for fixed arguments.
    """
    m = scenario.modifiers
    distance = to_decimal(distance, "distance")
    loss = to_decimal(loss, "loss")
    d_delta = distance - m.glass_wash_distance
    l_delta = loss - m.glass_loss_fraction
    routes = []
    for r in scenario.routes:
        if r.route_id in m.affected_route_ids and (d_delta or l_delta):
            routes.append(RouteSpec(
                route_id=r.route_id,
                product_id=r.product_id,
                technology_id=r.technology_id,
                unit_cost=r.unit_cost + m.distance_cost_coeff * d_delta + m.loss_cost_coeff * l_delta,
                unit_emissions=r.unit_emissions + m.distance_emission_coeff * d_delta + m.loss_emission_coeff * l_delta,
                unit_circularity=r.unit_circularity,
                recovered_outputs=r.recovered_outputs,
                subsidizable=r.subsidizable,
                tags=r.tags,
                stages=r.stages,
            ))
        else:
            routes.append(r)
    new_mods = SensitivityModifiers(
        glass_wash_distance=distance,
        glass_loss_fraction=loss,
        distance_cost_coeff=m.distance_cost_coeff,
        distance_emission_coeff=m.distance_emission_coeff,
        loss_cost_coeff=m.loss_cost_coeff,
        loss_emission_coeff=m.loss_emission_coeff,
        affected_route_ids=m.affected_route_ids,
    )
    return Scenario(
        demand=scenario.demand,
        routes=tuple(routes),
        modifiers=new_mods,
        technology_fixed_costs=dict(scenario.technology_fixed_costs),
        capacity_limits=dict(scenario.capacity_limits),
    )
