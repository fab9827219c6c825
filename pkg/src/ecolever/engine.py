"""Bilevel search: a seeded particle swarm over policy space with an exact
follower solver nested inside every evaluation.

The leader fixes (tax rate, subsidy rates); the follower's cost-minimizing
allocation is solved exactly; the leader's objective of that response is the
fitness. Infeasible policies (subsidy outlay beyond budget plus tax income)
are penalized, never repaired. Fitness values are lexicographic tuples
(penalized objective, tax rate, total subsidy rate): the tail components
break ties among equally good policies toward the least-intervention corner,
which is also where the closed-form budget lines live.

Everything here is deterministic for a fixed seed: the swarm RNG is a seeded
numpy Generator, positions are quantized onto an exact decimal grid before
evaluation, and analytic seed policies are evaluated in exact arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from decimal import Decimal, ROUND_CEILING
from enum import Enum

import numpy as np

from .errors import ValidationError
from .lower import optimistic_select, solve_lower_greedy, solve_lower_milp
from .model import (
    FEASIBILITY_TOLERANCE,
    LowerResult,
    PolicyVector,
    Scenario,
    ZERO,
    evaluate_allocation,
    quantize_rate,
    to_decimal,
)

PENALTY_WEIGHT = Decimal(10000)

COMBINED = "combined"
TAX_ONLY = "tax-only"
SUBSIDY_ONLY = "subsidy-only"
MODES = (COMBINED, TAX_ONLY, SUBSIDY_ONLY)


class Objective(str, Enum):
    MIN_GHG = "min-ghg"
    MAX_CIRCULARITY = "max-circularity"
    MOST_PROFITABLE = "most-profitable"


def _natural_value(objective, result: LowerResult) -> Decimal:
    if objective == Objective.MIN_GHG:
        return result.total_emissions
    if objective == Objective.MAX_CIRCULARITY:
        return result.circularity_index
    if objective == Objective.MOST_PROFITABLE:
        return result.industry_cost
    raise ValidationError([f"unknown objective: {objective!r}"])


def _maximizing(objective) -> bool:
    return objective == Objective.MAX_CIRCULARITY


def evaluate_policy(scenario: Scenario, policy: PolicyVector, objective,
                    budget, penalty_weight: Decimal = PENALTY_WEIGHT):
    """Evaluate one leader decision: solve the follower, then score the leader.

    Returns (value, LowerResult, feasible). `value` is the leader objective of
    the induced response in natural units; when the response's subsidy outlay
    exceeds budget + tax income (beyond tolerance), the violation times
    penalty_weight is added against the optimization direction and feasible
    is False.
    """
    budget = to_decimal(budget, "budget")
    if scenario.is_pure_linear():
        tie, canonical = solve_lower_greedy(scenario, policy)
        if objective == Objective.MOST_PROFITABLE or len(tie.route_ids) == 1:
            allocation = canonical
        else:
            allocation = optimistic_select(scenario, policy, tie, objective, budget)
        result = evaluate_allocation(scenario, allocation, policy)
    else:
        result = solve_lower_milp(scenario, policy)
    violation = result.subsidy_outlay - (budget + result.tax_payment)
    feasible = violation <= FEASIBILITY_TOLERANCE
    value = _natural_value(objective, result)
    if not feasible:
        penalty = penalty_weight * violation
        value = value - penalty if _maximizing(objective) else value + penalty
    return value, result, feasible


def _fitness(objective, value, policy: PolicyVector):
    head = -value if _maximizing(objective) else value
    return (head, policy.tax_rate, policy.total_rates())


@dataclass(frozen=True)
class PsoParams:
    """Swarm settings. bounds is a (lo, hi) box per dimension; when driving
    policies, optimize() fills it from the scenario and mode if left None."""

    swarm_size: int = 10
    iterations: int = 200
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    bounds: tuple = None
    seed: int = 0
    restarts: int = 5
    initial_points: tuple = None

    def __post_init__(self):
        v = []
        if self.swarm_size < 1:
            v.append("swarm_size must be >= 1")
        if self.iterations < 0:
            v.append("iterations must be >= 0")
        if self.restarts < 1:
            v.append("restarts must be >= 1")
        if self.bounds is not None:
            bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            object.__setattr__(self, "bounds", bounds)
            if any(hi < lo for lo, hi in bounds):
                v.append("each bound must satisfy lo <= hi")
        if self.initial_points is not None:
            object.__setattr__(self, "initial_points", tuple(self.initial_points))
        if v:
            raise ValidationError(v)


@dataclass(frozen=True)
class PsoRun:
    x: tuple
    value: object
    trace: tuple
    evaluations: int


def pso_run(evaluator, params: PsoParams, rng=None, seed_positions=None) -> PsoRun:
    """Global-best PSO over the box in params.bounds.

    evaluator maps a position vector to any orderable fitness (floats and
    tuples both work); smaller is better. Velocities are clamped to the box
    width and positions reflect off the walls. The returned trace of
    (iteration, best-so-far) never worsens.
    """
    if params.bounds is None:
        raise ValidationError(["pso_run requires params.bounds"])
    lo = np.array([b[0] for b in params.bounds])
    hi = np.array([b[1] for b in params.bounds])
    width = hi - lo
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    n, d = params.swarm_size, lo.size

    X = lo + rng.random((n, d)) * width
    if seed_positions is not None:
        for k, pos in enumerate(seed_positions[:n]):
            X[k] = np.clip(np.asarray(pos, dtype=float), lo, hi)
    V = np.zeros((n, d))

    fit = [evaluator(X[i]) for i in range(n)]
    evaluations = n
    P = X.copy()
    pfit = list(fit)
    g = int(min(range(n), key=lambda i: fit[i]))
    gx, gfit = X[g].copy(), fit[g]
    trace = [(0, gfit)]

    for t in range(1, params.iterations + 1):
        r1 = rng.random((n, d))
        r2 = rng.random((n, d))
        V = (params.inertia * V
             + params.cognitive * r1 * (P - X)
             + params.social * r2 * (gx - X))
        V = np.clip(V, -width, width)
        X = X + V
        for _ in range(2):  # a clamped velocity overshoots at most twice
            X = np.where(X > hi, 2 * hi - X, X)
            X = np.where(X < lo, 2 * lo - X, X)
        X = np.clip(X, lo, hi)
        for i in range(n):
            f = evaluator(X[i])
            evaluations += 1
            if f < pfit[i]:
                pfit[i] = f
                P[i] = X[i].copy()
                if f < gfit:
                    gfit = f
                    gx = X[i].copy()
        trace.append((t, gfit))

    return PsoRun(x=tuple(gx), value=gfit, trace=tuple(trace), evaluations=evaluations)


@dataclass(frozen=True)
class BilevelOutcome:
    """Result of one bilevel search at a fixed budget."""

    policy: PolicyVector
    response: LowerResult
    upper_value: Decimal
    feasible: bool
    evaluations: int
    trace: tuple
    objective: Objective = Objective.MIN_GHG
    mode: str = COMBINED
    budget: Decimal = ZERO


def policy_dimensions(scenario: Scenario):
    """Dimension names for the search box: tax first, then subsidizable routes."""
    return ["tax"] + sorted(r.route_id for r in scenario.routes if r.subsidizable)


def default_bounds(scenario: Scenario, mode: str = COMBINED, tax_max: float = 10.0):
    """Search box per dimension; degenerate [0, 0] axes encode the mode."""
    if mode not in MODES:
        raise ValidationError([f"unknown mode: {mode!r}"])
    cheapest = min(r.unit_cost for r in scenario.routes)
    gaps = [float(r.unit_cost - cheapest) for r in scenario.routes if r.subsidizable]
    sub_max = max(0.1, 2.0 * max(gaps, default=0.0))
    bounds = []
    for dim in policy_dimensions(scenario):
        if dim == "tax":
            bounds.append((0.0, 0.0 if mode == SUBSIDY_ONLY else tax_max))
        else:
            bounds.append((0.0, 0.0 if mode == TAX_ONLY else sub_max))
    return tuple(bounds)


def vector_to_policy(scenario: Scenario, x) -> PolicyVector:
    """Quantize a raw swarm position onto the exact decimal rate grid."""
    dims = policy_dimensions(scenario)
    tax = quantize_rate(max(float(x[0]), 0.0))
    rates = {}
    for k, rid in enumerate(dims[1:], start=1):
        r = quantize_rate(max(float(x[k]), 0.0))
        if r != 0:
            rates[rid] = r
    return PolicyVector(tax_rate=tax, subsidy_rates=rates)


def _cheapest(scenario: Scenario):
    return min(scenario.routes, key=lambda r: (r.unit_cost, r.route_id))


def domain_informed_points(scenario: Scenario, budget, mode: str = COMBINED):
    """Analytic seed policies: the zero policy, per-route indifference
    subsidies at zero tax, and per-route budget-balanced corners.

    The corner for a target route solves follower indifference against the
    pre-policy cheapest route jointly with the funds balance
    budget + tax * E_target = outlay; when that subsidy would be negative the
    pure-tax segment applies (tax at the switch threshold, or higher if the
    budget is negative enough to need the revenue). Corner taxes are quantized
    upward so the funds balance errs on the feasible side.
    """
    budget = to_decimal(budget, "budget")
    base = _cheapest(scenario)
    e_least_total = base.unit_emissions * scenario.demand
    points = [PolicyVector.zero()]
    for rid in sorted(r.route_id for r in scenario.routes if r.subsidizable):
        route = scenario.route(rid)
        gap = route.unit_cost - base.unit_cost
        if gap <= 0:
            continue
        if mode != TAX_ONLY:
            points.append(PolicyVector(subsidy_rates={rid: gap}))
        if mode == SUBSIDY_ONLY or e_least_total == 0:
            continue
        e_delta = base.unit_emissions - route.unit_emissions  # >0 when target is cleaner
        if mode == TAX_ONLY:
            if e_delta <= 0:
                continue  # tax alone can never induce this switch
            tax = (gap / e_delta).quantize(Decimal("1e-12"), rounding=ROUND_CEILING)
            points.append(PolicyVector(tax_rate=tax))
            continue
        tax = (gap * scenario.demand - budget) / e_least_total
        tax = max(ZERO, tax).quantize(Decimal("1e-12"), rounding=ROUND_CEILING)
        subsidy = gap - e_delta * tax
        if subsidy < 0:
            # Past the pure-tax threshold; revenue alone must cover the budget.
            if e_delta <= 0:
                continue
            threshold = gap / e_delta
            e_target_total = route.unit_emissions * scenario.demand
            revenue_tax = (-budget / e_target_total) if e_target_total else ZERO
            tax = max(threshold, revenue_tax, ZERO).quantize(
                Decimal("1e-12"), rounding=ROUND_CEILING)
            points.append(PolicyVector(tax_rate=tax))
        else:
            points.append(PolicyVector(tax_rate=tax, subsidy_rates={rid: subsidy}))
    return points


def optimize(scenario: Scenario, objective, budget, params: PsoParams = None,
             mode: str = COMBINED, penalty_weight: Decimal = PENALTY_WEIGHT) -> BilevelOutcome:
    """Search policy space for the leader's best feasible decision.

    Analytic seed policies are evaluated exactly and also seed the first
    restart's swarm; later restarts draw fresh positions from reseeded
    generators. The best feasible policy across all evaluations wins; if
    nothing feasible was seen the least-penalized point is returned flagged
    infeasible. The trace carries (global iteration, best-so-far value) and
    never worsens.
    """
    objective = Objective(objective)
    budget = to_decimal(budget, "budget")
    params = params if params is not None else PsoParams()
    if mode not in MODES:
        raise ValidationError([f"unknown mode: {mode!r}"])

    if objective == Objective.MOST_PROFITABLE:
        zero = PolicyVector.zero()
        value, result, feasible = evaluate_policy(scenario, zero, objective, budget,
                                                  penalty_weight)
        return BilevelOutcome(policy=zero, response=result, upper_value=value,
                              feasible=feasible, evaluations=1,
                              trace=((0, value),), objective=objective,
                              mode=mode, budget=budget)

    bounds = params.bounds if params.bounds is not None else default_bounds(scenario, mode)
    if len(bounds) != len(policy_dimensions(scenario)):
        raise ValidationError([
            f"bounds must cover {len(policy_dimensions(scenario))} dimensions"])
    run_params = replace(params, bounds=bounds)

    best = {"fitness": None, "policy": None}
    evaluations = 0

    def consider(policy: PolicyVector):
        nonlocal evaluations
        value, result, feasible = evaluate_policy(scenario, policy, objective,
                                                  budget, penalty_weight)
        evaluations += 1
        fit = _fitness(objective, value, policy)
        if best["fitness"] is None or fit < best["fitness"]:
            best["fitness"] = fit
            best["policy"] = policy
        return fit

    def pso_evaluator(x):
        return consider(vector_to_policy(scenario, x))

    seeds = list(domain_informed_points(scenario, budget, mode))
    if params.initial_points:
        seeds.extend(params.initial_points)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    seed_positions = []
    dims = policy_dimensions(scenario)
    for pol in seeds:
        consider(pol)  # exact evaluation, never lost to float round-trips
        vec = [float(pol.tax_rate)] + [float(pol.subsidy_for(rid)) for rid in dims[1:]]
        seed_positions.append(np.clip(np.array(vec), lo, hi))

    running = best["fitness"][0]
    trace = [(0, running)]
    offset = 1
    for restart in range(params.restarts):
        rng = np.random.default_rng(params.seed + restart)
        run = pso_run(pso_evaluator, run_params, rng=rng,
                      seed_positions=seed_positions if restart == 0 else None)
        for t, fit in run.trace:
            running = min(running, fit[0])
            trace.append((offset + t, running))
        offset += params.iterations + 1

    policy = best["policy"]
    _, incumbent, _ = evaluate_policy(scenario, policy, objective, budget,
                                      penalty_weight)
    idle = {rid for rid in policy.subsidy_rates
            if incumbent.allocation.units_for(rid) == 0}
    if idle:
        # A subsidy nobody draws only inflates the policy; dropping it cannot
        # change the follower's choice, so the trimmed variant wins the
        # lexicographic tie-break whenever it evaluates no worse.
        trimmed = PolicyVector(
            tax_rate=policy.tax_rate,
            subsidy_rates={rid: rate for rid, rate in policy.subsidy_rates.items()
                           if rid not in idle})
        consider(trimmed)
        policy = best["policy"]
    value, result, feasible = evaluate_policy(scenario, policy, objective,
                                              budget, penalty_weight)
    upper = _natural_value(objective, result)
    # Trace values are the penalized minimization head; report naturally.
    sign = Decimal(-1) if _maximizing(objective) else Decimal(1)
    natural_trace = tuple((i, sign * v) for i, v in trace)
    return BilevelOutcome(policy=policy, response=result, upper_value=upper,
                          feasible=feasible, evaluations=evaluations,
                          trace=natural_trace, objective=objective,
                          mode=mode, budget=budget)
