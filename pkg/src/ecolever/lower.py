"""Exact solvers for the industry's cost-minimizing technology allocation.

The industry reacts to a fixed policy by routing all demand at minimum net
cost. In the pure per-unit-linear case the optimum is a greedy argmin over
per-unit net costs, with ties resolved leader-favorably (and funds-aware) by
`optimistic_select`. Scenarios with technology activation costs or capacity
limits go through a small branch-and-bound over LP relaxations instead.

Greedy paths and tie selection run in exact decimal arithmetic; the simplex
and branch-and-bound machinery is float-based with explicit tolerances, and
integer incumbents are re-priced exactly before being compared or returned.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from .errors import (
    InfeasibleError,
    NumericFailureError,
    ResourceLimitError,
    UnboundedError,
    ValidationError,
)
from .model import (
    Allocation,
    FEASIBILITY_TOLERANCE,
    LowerResult,
    PolicyVector,
    RouteSpec,
    Scenario,
    TIE_TOLERANCE,
    ZERO,
    evaluate_allocation,
    to_decimal,
    validate_policy,
)


def net_unit_cost(route: RouteSpec, policy: PolicyVector) -> Decimal:
    """Per-unit cost the industry sees on a route once tax and subsidy apply."""
    return (route.unit_cost
            + policy.tax_rate * route.unit_emissions
            - policy.subsidy_for(route.route_id))


@dataclass(frozen=True)
class TieSet:
    """Routes whose net unit costs sit within tie tolerance of the minimum."""

    route_ids: tuple
    net_unit_cost: Decimal

    def __post_init__(self):
        object.__setattr__(self, "route_ids", tuple(sorted(self.route_ids)))


def solve_lower_greedy(scenario: Scenario, policy: PolicyVector,
                       tie_tolerance: Decimal = TIE_TOLERANCE):
    """Exact follower optimum for pure-linear scenarios.

    Returns (TieSet, canonical Allocation). The canonical allocation puts all
    demand on the lexicographically first tie member; leader-aware tie
    resolution is `optimistic_select`'s job.
    """
    if not scenario.routes:
        raise InfeasibleError("no routes to allocate demand to")
    if not scenario.is_pure_linear():
        raise ValidationError(
            ["solve_lower_greedy requires a pure-linear scenario "
             "(no fixed costs, no capacity limits); use solve_lower_milp"])
    validate_policy(scenario, policy)
    costs = {r.route_id: net_unit_cost(r, policy) for r in scenario.routes}
    best = min(costs.values())
    tie_ids = sorted(rid for rid, c in costs.items() if c - best <= tie_tolerance)
    tie = TieSet(route_ids=tie_ids, net_unit_cost=best)
    units = {tie_ids[0]: scenario.demand} if scenario.demand else {}
    return tie, Allocation(units=units)


def _leader_unit_value(route: RouteSpec, leader_objective) -> Decimal:
    # Minimization form: smaller is better for the leader.
    if leader_objective == "min-ghg":
        return route.unit_emissions
    if leader_objective == "max-circularity":
        return -route.unit_circularity
    if leader_objective == "most-profitable":
        return ZERO  # no preference; canonical order decides
    raise ValidationError([f"unknown leader objective: {leader_objective!r}"])


def optimistic_select(scenario: Scenario, policy: PolicyVector, tie: TieSet,
                      leader_objective, available_funds) -> Allocation:
    """Resolve a follower tie in the leader's favor, capped by public funds.

    Every returned allocation lies on the follower's optimal face (all mass on
    tie routes), so the follower's objective is untouched. Among those, the
    funds constraint is the self-consistent balance

        subsidy_outlay(alloc) <= available_funds + tax_rate * emissions(alloc)

    i.e. a knapsack with per-unit weights subsidy_r - tax * emissions_r. The
    continuous optimum mixes at most two tie routes; each two-route mixture is
    rounded toward feasibility. If even the best single route violates funds,
    the leader-best allocation is returned anyway and the caller flags it.
    """
    funds = to_decimal(available_funds, "available_funds")
    demand = scenario.demand
    if demand == 0:
        return Allocation({})
    routes = [scenario.route(rid) for rid in tie.route_ids]
    value = {r.route_id: _leader_unit_value(r, leader_objective) for r in routes}
    weight = {r.route_id: policy.subsidy_for(r.route_id) - policy.tax_rate * r.unit_emissions
              for r in routes}
    cap = funds + FEASIBILITY_TOLERANCE

    candidates = []
    for r in routes:
        if weight[r.route_id] * demand <= cap:
            candidates.append({r.route_id: demand})
    for r1, r2 in itertools.combinations(routes, 2):
        w1, w2 = weight[r1.route_id], weight[r2.route_id]
        if w1 == w2:
            continue  # mixtures are never cheaper than the better single route
        n1 = (cap - w2 * demand) / (w1 - w2)
        n1 = int(n1.to_integral_value(rounding="ROUND_FLOOR" if w1 > w2 else "ROUND_CEILING"))
        n1 = max(0, min(demand, n1))
        mix = {r1.route_id: n1, r2.route_id: demand - n1}
        if w1 * n1 + w2 * (demand - n1) <= cap:
            candidates.append(mix)

    def score(units):
        leader = sum((value[rid] * n for rid, n in units.items()), ZERO)
        outlay = sum((policy.subsidy_for(rid) * n for rid, n in units.items()), ZERO)
        key = tuple(sorted((rid, -n) for rid, n in units.items() if n))
        return (leader, outlay, key)

    if candidates:
        best = min(candidates, key=score)
        return Allocation({rid: n for rid, n in best.items() if n})
    # Nothing affordable on the optimal face: hand back the leader's favorite.
    fallback = min(routes, key=lambda r: (value[r.route_id], r.route_id))
    return Allocation({fallback.route_id: demand})


# ---------------------------------------------------------------------------
# Linear programming: dense two-phase primal simplex.
# ---------------------------------------------------------------------------

LESS_EQUAL = "<="
EQUAL = "="
GREATER_EQUAL = ">="
_RELATIONS = (LESS_EQUAL, EQUAL, GREATER_EQUAL)


@dataclass(frozen=True)
class LinearProgram:
    """min objective . x subject to row constraints and variable bounds.

    rows are (coefficients, relation, rhs) triples with relation in
    {"<=", "=", ">="}. bounds are (lower, upper) pairs per variable; lower
    must be finite, upper may be None for +inf.
    """

    objective: tuple
    rows: tuple
    bounds: tuple

    def __post_init__(self):
        v = []
        obj = tuple(float(x) for x in self.objective)
        object.__setattr__(self, "objective", obj)
        n = len(obj)
        rows = []
        for i, (coeffs, rel, rhs) in enumerate(self.rows):
            coeffs = tuple(float(x) for x in coeffs)
            if len(coeffs) != n:
                v.append(f"row {i}: expected {n} coefficients, got {len(coeffs)}")
            if rel not in _RELATIONS:
                v.append(f"row {i}: unknown relation {rel!r}")
            rows.append((coeffs, rel, float(rhs)))
        object.__setattr__(self, "rows", tuple(rows))
        bounds = []
        for j, (lo, hi) in enumerate(self.bounds):
            lo = float(lo)
            hi = None if hi is None else float(hi)
            if not math.isfinite(lo):
                v.append(f"bound {j}: lower bound must be finite")
            if hi is not None and hi < lo:
                v.append(f"bound {j}: upper bound below lower bound")
            bounds.append((lo, hi))
        object.__setattr__(self, "bounds", tuple(bounds))
        if len(bounds) != n:
            v.append(f"expected {n} bounds, got {len(bounds)}")
        if v:
            raise ValidationError(v)


OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class SimplexResult:
    status: str
    x: tuple = ()
    objective: float = math.nan


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and abs(T[i, col]) > 0:
            T[i] -= T[i, col] * T[row]
    basis[row] = col


def _iterate(T, basis, tol, max_iterations, forbidden, bland_after=2000):
    """Run primal simplex on tableau T (last row = reduced costs, last col = rhs).

    Dantzig pricing switches to Bland's rule after `bland_after` pivots so any
    cycling degeneracy resolves; beyond max_iterations a numeric failure is
    raised. Returns "optimal" or "unbounded".
    """
    m = T.shape[0] - 1
    for it in range(max_iterations):
        z = T[-1, :-1]
        eligible = [j for j in range(T.shape[1] - 1)
                    if j not in forbidden and z[j] < -tol]
        if not eligible:
            return OPTIMAL
        if it < bland_after:
            col = min(eligible, key=lambda j: (z[j], j))
        else:
            col = eligible[0]
        ratios = [(T[i, -1] / T[i, col], basis[i], i)
                  for i in range(m) if T[i, col] > tol]
        if not ratios:
            return UNBOUNDED
        _, _, row = min(ratios)
        _pivot(T, basis, row, col)
    raise NumericFailureError(
        f"simplex did not converge within {max_iterations} pivots")


def simplex_solve(lp: LinearProgram, tolerance: float = 1e-9,
                  max_iterations: int = 10000) -> SimplexResult:
    """Two-phase dense simplex for small LPs.

    Variables are shifted to their lower bounds; finite upper bounds become
    extra rows. Returns a SimplexResult with status optimal / infeasible /
    unbounded; x and objective are populated only on optimal.
    """
    n = len(lp.objective)
    lo = np.array([b[0] for b in lp.bounds])
    c = np.array(lp.objective)

    rows = []
    for coeffs, rel, rhs in lp.rows:
        a = np.array(coeffs)
        rows.append((a, rel, rhs - float(a @ lo)))
    for j, (l, h) in enumerate(lp.bounds):
        if h is not None:
            e = np.zeros(n)
            e[j] = 1.0
            rows.append((e, LESS_EQUAL, h - l))

    # Normalize rhs >= 0, then attach slack/surplus/artificial columns.
    norm = []
    for a, rel, rhs in rows:
        if rhs < 0:
            a, rhs = -a, -rhs
            rel = {LESS_EQUAL: GREATER_EQUAL, GREATER_EQUAL: LESS_EQUAL, EQUAL: EQUAL}[rel]
        norm.append((a, rel, rhs))
    m = len(norm)
    n_slack = sum(1 for _, rel, _ in norm if rel == LESS_EQUAL)
    n_surp = sum(1 for _, rel, _ in norm if rel == GREATER_EQUAL)
    n_art = sum(1 for _, rel, _ in norm if rel != LESS_EQUAL)
    N = n + n_slack + n_surp + n_art

    T = np.zeros((m + 1, N + 1))
    basis = [0] * m
    art_cols = []
    s_at, p_at, a_at = n, n + n_slack, n + n_slack + n_surp
    for i, (a, rel, rhs) in enumerate(norm):
        T[i, :n] = a
        T[i, -1] = rhs
        if rel == LESS_EQUAL:
            T[i, s_at] = 1.0
            basis[i] = s_at
            s_at += 1
        else:
            if rel == GREATER_EQUAL:
                T[i, p_at] = -1.0
                p_at += 1
            T[i, a_at] = 1.0
            basis[i] = a_at
            art_cols.append(a_at)
            a_at += 1

    if art_cols:
        # Phase 1: minimize the artificial sum, priced against the start basis.
        for jcol in art_cols:
            T[-1, jcol] = 1.0
        for i in range(m):
            if basis[i] in art_cols:
                T[-1, :] -= T[i, :]
        status = _iterate(T, basis, tolerance, max_iterations, forbidden=set())
        if T[-1, -1] < -tolerance:
            return SimplexResult(status=INFEASIBLE)
        # Pivot leftover artificials out of the basis, dropping redundant rows.
        drop = []
        for i in range(m):
            if basis[i] in art_cols:
                piv = next((j for j in range(N) if j not in art_cols
                            and abs(T[i, j]) > tolerance), None)
                if piv is None:
                    drop.append(i)
                else:
                    _pivot(T, basis, i, piv)
        if drop:
            keep = [i for i in range(m) if i not in drop] + [m]
            T = T[keep]
            basis = [basis[i] for i in range(m) if i not in drop]
            m = len(basis)

    T[-1, :] = 0.0
    T[-1, :n] = c
    for i in range(m):
        if T[-1, basis[i]] != 0.0:
            T[-1, :] -= T[-1, basis[i]] * T[i, :]
    status = _iterate(T, basis, tolerance, max_iterations, forbidden=set(art_cols))
    if status == UNBOUNDED:
        return SimplexResult(status=UNBOUNDED)

    y = np.zeros(N)
    for i in range(m):
        y[basis[i]] = T[i, -1]
    x = y[:n] + lo
    return SimplexResult(status=OPTIMAL, x=tuple(x), objective=float(c @ x))


# ---------------------------------------------------------------------------
# Branch and bound over the LP relaxation.
# ---------------------------------------------------------------------------

_INT_TOL = 1e-6
_PRUNE_SLACK = 1e-9


@dataclass
class _Node:
    bound: float
    seq: int
    lo: tuple
    hi: tuple
    x: tuple

    def __lt__(self, other):
        return (self.bound, self.seq) < (other.bound, other.seq)


def solve_lower_milp(scenario: Scenario, policy: PolicyVector,
                     node_limit: int = 20000,
                     gap_tolerance: Decimal = Decimal("1e-6")) -> LowerResult:
    """Branch-and-bound follower optimum for scenarios with fixed costs or capacities.

    Best-bound node selection, most-fractional branching, absolute gap closed
    to `gap_tolerance`. Integer incumbents are re-priced in exact decimals, so
    on pure-linear scenarios the returned objective matches solve_lower_greedy
    exactly. Raises InfeasibleError when capacities cannot absorb demand and
    ResourceLimitError (carrying the incumbent) past node_limit.
    """
    validate_policy(scenario, policy)
    if scenario.demand == 0:
        return evaluate_allocation(scenario, Allocation({}), policy)

    rids = scenario.route_ids()
    techs = sorted(t for t in scenario.technology_fixed_costs)
    n_r, n_y = len(rids), len(techs)
    tech_of = {rid: scenario.route(rid).technology_id for rid in rids}

    obj = [float(net_unit_cost(scenario.route(rid), policy)) for rid in rids]
    obj += [float(scenario.technology_fixed_costs[t]) for t in techs]

    rows = [(tuple(1.0 if j < n_r else 0.0 for j in range(n_r + n_y)), EQUAL,
             float(scenario.demand))]
    for k, rid in enumerate(rids):
        t = tech_of[rid]
        if t in scenario.technology_fixed_costs:
            link = [0.0] * (n_r + n_y)
            link[k] = 1.0
            link[n_r + techs.index(t)] = -float(min(scenario.capacity_of(rid), scenario.demand))
            rows.append((tuple(link), LESS_EQUAL, 0.0))

    lo0 = tuple([0.0] * (n_r + n_y))
    hi0 = tuple([float(min(scenario.capacity_of(rid), scenario.demand)) for rid in rids]
                + [1.0] * n_y)

    def relax(lo, hi):
        lp = LinearProgram(objective=tuple(obj), rows=tuple(rows),
                           bounds=tuple(zip(lo, hi)))
        return simplex_solve(lp)

    root = relax(lo0, hi0)
    if root.status == UNBOUNDED:
        raise UnboundedError("lower-level relaxation is unbounded")
    if root.status != OPTIMAL:
        raise InfeasibleError("no allocation satisfies demand within capacities")

    best_alloc = None
    best_cost = None  # exact Decimal incumbent

    def try_incumbent(x):
        nonlocal best_alloc, best_cost
        units = {rid: int(round(x[k])) for k, rid in enumerate(rids)}
        alloc = Allocation({rid: u for rid, u in units.items() if u})
        if alloc.total() != scenario.demand:
            return
        cost = evaluate_allocation(scenario, alloc, policy).industry_cost
        if best_cost is None or cost < best_cost:
            best_alloc, best_cost = alloc, cost

    heap = []
    seq = itertools.count()
    heapq.heappush(heap, _Node(root.objective, next(seq), lo0, hi0, root.x))
    nodes = 0
    while heap:
        node = heapq.heappop(heap)
        if best_cost is not None and node.bound >= float(best_cost) - float(gap_tolerance):
            break  # best-bound heap: every remaining node is at least as bad
        nodes += 1
        if nodes > node_limit:
            incumbent = (evaluate_allocation(scenario, best_alloc, policy)
                         if best_alloc is not None else None)
            raise ResourceLimitError(
                f"branch-and-bound exceeded {node_limit} nodes", incumbent=incumbent)
        fracs = [abs(v - round(v)) for v in node.x]
        j = max(range(len(fracs)), key=lambda k: (fracs[k], -k))
        if fracs[j] <= _INT_TOL:
            try_incumbent(node.x)
            continue
        v = node.x[j]
        for lo_j, hi_j in ((node.lo[j], math.floor(v)), (math.ceil(v), node.hi[j])):
            lo = list(node.lo)
            hi = list(node.hi)
            lo[j], hi[j] = float(max(node.lo[j], lo_j)), float(min(node.hi[j], hi_j))
            if lo[j] > hi[j]:
                continue
            sol = relax(tuple(lo), tuple(hi))
            if sol.status != OPTIMAL:
                continue
            if best_cost is not None and sol.objective >= float(best_cost) - _PRUNE_SLACK:
                continue
            heapq.heappush(heap, _Node(sol.objective, next(seq), tuple(lo), tuple(hi), sol.x))

    if best_alloc is None:
        raise InfeasibleError("branch-and-bound found no integer allocation")
    return evaluate_allocation(scenario, best_alloc, policy)
