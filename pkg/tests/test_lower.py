from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from ecolever import (
    Allocation,
    InfeasibleError,
    LinearProgram,
    Objective,
    PolicyVector,
    RouteSpec,
    Scenario,
    UnboundedError,
    enumerate_lower,
    evaluate_allocation,
    net_unit_cost,
    optimistic_select,
    simplex_solve,
    solve_lower_greedy,
    solve_lower_milp,
)
from ecolever.model import FEASIBILITY_TOLERANCE


def _route(rid, cost, emissions, circ):
    return RouteSpec(route_id=rid, product_id="p", technology_id=f"tech_{rid}",
                     unit_cost=Decimal(cost), unit_emissions=Decimal(emissions),
                     unit_circularity=Decimal(circ))


@pytest.fixture
def trio():
    return Scenario(demand=100, routes=(
        _route("dirty_cheap", "0.01", "0.10", "1.0"),
        _route("clean_mid", "0.05", "0.02", "1.2"),
        _route("circular_dear", "0.08", "0.05", "1.8"),
    ))


def test_net_unit_cost_formula(trio):
    policy = PolicyVector(tax_rate=Decimal("2"),
                          subsidy_rates={"clean_mid": Decimal("0.03")})
    r = trio.route("clean_mid")
    assert net_unit_cost(r, policy) == Decimal("0.05") + 2 * Decimal("0.02") - Decimal("0.03")


def test_greedy_picks_cheapest_and_canonicalizes(trio):
    tie, alloc = solve_lower_greedy(trio, PolicyVector.zero())
    assert tie.route_ids == ("dirty_cheap",)
    assert alloc.units == {"dirty_cheap": 100}


def test_greedy_detects_exact_ties(trio):
    # 0.01 + t*0.10 == 0.05 + t*0.02  =>  t = 0.5
    tie, alloc = solve_lower_greedy(trio, PolicyVector(tax_rate=Decimal("0.5")))
    assert tie.route_ids == ("clean_mid", "dirty_cheap")
    assert alloc.units == {"clean_mid": 100}  # lexicographically first member


def test_optimistic_select_respects_funds(trio):
    # Subsidy ties clean_mid with dirty_cheap; funds allow only a partial move.
    policy = PolicyVector(subsidy_rates={"clean_mid": Decimal("0.04")})
    tie, _ = solve_lower_greedy(trio, policy)
    assert set(tie.route_ids) == {"clean_mid", "dirty_cheap"}
    picked = optimistic_select(trio, policy, tie, Objective.MIN_GHG, Decimal("1"))
    # 25 units at 0.04 spend the whole budget
    assert picked.units_for("clean_mid") == 25
    assert picked.total() == 100
    spent = evaluate_allocation(trio, picked, policy)
    assert spent.subsidy_outlay <= Decimal("1") + FEASIBILITY_TOLERANCE


def test_optimistic_select_prefers_leader_direction(trio):
    policy = PolicyVector(subsidy_rates={"clean_mid": Decimal("0.04")})
    tie, _ = solve_lower_greedy(trio, policy)
    generous = Decimal("1000")
    ghg = optimistic_select(trio, policy, tie, Objective.MIN_GHG, generous)
    assert ghg.units == {"clean_mid": 100}
    # maximizing circularity keeps the un-subsidized member cheapest to the
    # leader but clean_mid is still the more circular of the tied pair
    circ = optimistic_select(trio, policy, tie, Objective.MAX_CIRCULARITY, generous)
    assert circ.units == {"clean_mid": 100}
    profit = optimistic_select(trio, policy, tie, Objective.MOST_PROFITABLE, generous)
    assert profit.total() == 100


def test_optimistic_select_with_zero_funds_keeps_the_free_member(trio):
    policy = PolicyVector(subsidy_rates={"clean_mid": Decimal("0.04")})
    tie, _ = solve_lower_greedy(trio, policy)
    picked = optimistic_select(trio, policy, tie, Objective.MIN_GHG, Decimal("0"))
    assert picked.units == {"dirty_cheap": 100}


def test_optimistic_select_handles_negative_net_outlay(trio):
    # at the tax that ties the two routes, both carry negative funds weight
    # (tax income exceeds the zero subsidy), so either member is affordable
    policy = PolicyVector(tax_rate=Decimal("0.5"))
    tie, _ = solve_lower_greedy(trio, policy)
    picked = optimistic_select(trio, policy, tie, Objective.MIN_GHG, Decimal("0"))
    assert picked.units == {"clean_mid": 100}


def test_greedy_rejects_non_linear_scenarios(trio):
    capped = Scenario(demand=100, routes=trio.routes,
                      capacity_limits={"dirty_cheap": 50})
    with pytest.raises(Exception):
        solve_lower_greedy(capped, PolicyVector.zero())


# --- simplex ----------------------------------------------------------------

def test_simplex_basic_optimum():
    # min -x - 2y  s.t. x + y <= 4, x <= 3, y <= 2
    lp = LinearProgram(
        objective=[-1, -2],
        rows=[([1, 1], "<=", 4), ([1, 0], "<=", 3), ([0, 1], "<=", 2)],
        bounds=[(0, None), (0, None)],
    )
    res = simplex_solve(lp)
    assert res.status == "optimal"
    assert res.x[0] == pytest.approx(2.0, abs=1e-8)
    assert res.x[1] == pytest.approx(2.0, abs=1e-8)
    assert res.objective == pytest.approx(-6.0, abs=1e-8)


def test_simplex_equality_and_ge_rows():
    # min x + y  s.t. x + y = 5, x >= 2
    lp = LinearProgram(
        objective=[1, 1],
        rows=[([1, 1], "=", 5), ([1, 0], ">=", 2)],
        bounds=[(0, None), (0, None)],
    )
    res = simplex_solve(lp)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(5.0, abs=1e-8)
    assert res.x[0] >= 2 - 1e-9


def test_simplex_detects_infeasible():
    lp = LinearProgram(
        objective=[1],
        rows=[([1], "<=", 1), ([1], ">=", 3)],
        bounds=[(0, None)],
    )
    assert simplex_solve(lp).status == "infeasible"


def test_simplex_detects_unbounded():
    lp = LinearProgram(objective=[-1], rows=[([1], ">=", 1)], bounds=[(0, None)])
    assert simplex_solve(lp).status == "unbounded"


def test_simplex_honors_variable_bounds():
    # min -x  s.t. 1 <= x <= 2.5
    lp = LinearProgram(objective=[-1], rows=[], bounds=[(1, 2.5)])
    res = simplex_solve(lp)
    assert res.status == "optimal"
    assert res.x[0] == pytest.approx(2.5, abs=1e-9)


def test_simplex_degenerate_does_not_cycle():
    # classic degenerate corner: several redundant constraints through origin
    lp = LinearProgram(
        objective=[-0.75, 150, -0.02, 6],
        rows=[
            ([0.25, -60, -0.04, 9], "<=", 0),
            ([0.5, -90, -0.02, 3], "<=", 0),
            ([0, 0, 1, 0], "<=", 1),
        ],
        bounds=[(0, None)] * 4,
    )
    res = simplex_solve(lp)
    assert res.status == "optimal"
    assert res.objective == pytest.approx(-0.05, abs=1e-8)


@given(seed=st.integers(min_value=0, max_value=10_000))
def test_simplex_solution_is_feasible(seed):
    import numpy as np
    rng = np.random.default_rng(seed)
    n, m = 3, 4
    A = rng.uniform(-1, 2, size=(m, n))
    b = rng.uniform(1, 5, size=m)
    c = rng.uniform(-2, 2, size=n)
    lp = LinearProgram(
        objective=list(c),
        rows=[(list(A[i]), "<=", float(b[i])) for i in range(m)],
        bounds=[(0, 3)] * n,
    )
    res = simplex_solve(lp)
    # box keeps it bounded, origin keeps it feasible
    assert res.status == "optimal"
    x = np.array(res.x)
    assert np.all(x >= -1e-7) and np.all(x <= 3 + 1e-7)
    assert np.all(A @ x <= b + 1e-6)
    assert res.objective == pytest.approx(float(c @ x), abs=1e-6)


# --- branch and bound --------------------------------------------------------

def test_milp_matches_enumeration_with_caps_and_fixed_costs(capped_case):
    policy = PolicyVector(tax_rate=Decimal("2.5"),
                          subsidy_rates={"multilayer_landfill": Decimal("0.03")})
    fast = solve_lower_milp(capped_case, policy)
    reference = enumerate_lower(capped_case, policy)
    assert fast.industry_cost == reference.best.industry_cost


def test_milp_handles_pure_linear_too(small_case):
    policy = PolicyVector(tax_rate=Decimal("1.5"))
    fast = solve_lower_milp(small_case, policy)
    tie, canonical = solve_lower_greedy(small_case, policy)
    direct = evaluate_allocation(small_case, canonical, policy)
    assert fast.industry_cost == direct.industry_cost


def test_milp_respects_capacities(capped_case):
    result = solve_lower_milp(capped_case, PolicyVector.zero())
    for rid, units in result.allocation.units.items():
        assert units <= capped_case.capacity_of(rid)
    assert result.allocation.total() == capped_case.demand


def test_milp_charges_fixed_costs(trio):
    # fixed cost large enough to overcome a small per-unit advantage
    scn = Scenario(demand=100, routes=trio.routes,
                   technology_fixed_costs={"tech_dirty_cheap": Decimal("500")})
    result = solve_lower_milp(scn, PolicyVector.zero())
    assert "dirty_cheap" not in result.allocation.units
    reference = enumerate_lower(scn, PolicyVector.zero())
    assert result.industry_cost == reference.best.industry_cost


def test_milp_infeasible_when_caps_cannot_meet_demand(trio):
    # scenario validation refuses all-capped-below-demand up front
    with pytest.raises(Exception):
        Scenario(demand=100, routes=trio.routes,
                 capacity_limits={r.route_id: 10 for r in trio.routes})
