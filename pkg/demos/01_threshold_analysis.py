"""Closed-form policy thresholds for the coffee-packaging case study.

Walks the analytic layer end to end: at what carbon tax does the cheapest
pathway flip, what per-unit subsidy achieves the same flip, and how the
budget-balanced tax falls as the regulator's net budget grows.

Run: python3 demos/01_threshold_analysis.py
"""

from decimal import Decimal

from ecolever import (
    NoThresholdError,
    calibrate_case_study,
    required_budget_for_fixed_tax,
    subsidy_threshold,
    tax_budget_line,
    tax_threshold,
)
from ecolever.analysis import GLASS_ROUTE, LANDFILL_ROUTE, STRAP_ROUTE, cheapest_route


def main():
    case = calibrate_case_study()
    base = cheapest_route(case)
    print(f"scenario: {case.demand} units demanded, {len(case.routes)} routes")
    print(f"no-policy choice: {base.route_id} "
          f"(net {base.unit_cost} $/unit, {base.unit_emissions} kgCO2e/unit)")
    print()

    print("-- carbon tax alone --")
    tau = tax_threshold(case, LANDFILL_ROUTE)
    print(f"tax that flips industry onto {LANDFILL_ROUTE}: {tau:.4f} $/kg")
    print("  (the flip happens because landfill emits less per unit than the")
    print("   recycling strap once collection burdens are counted, so a high")
    print("   enough tax overturns its cost handicap)")
    try:
        tax_threshold(case, GLASS_ROUTE)
    except NoThresholdError as exc:
        print(f"no tax alone reaches {GLASS_ROUTE}: {exc}")
        print("  (landfill stays cheaper and no dirtier at every rate, so the")
        print("   wash loop needs subsidy support)")
    print()

    print("-- per-unit subsidy alone --")
    for rid in (LANDFILL_ROUTE, GLASS_ROUTE):
        s = subsidy_threshold(case, rid)
        print(f"indifference subsidy for {rid}: {s} $/unit "
              f"-> full-adoption outlay {s * case.demand} $")
    print()

    print("-- budget-balanced tax/subsidy corners --")
    for rid in (LANDFILL_ROUTE, GLASS_ROUTE):
        line = tax_budget_line(case, rid)
        print(f"target {rid}: tax(B) = {line.intercept:.4f} + {line.slope:.6f}*B,"
              f" subsidy-only above B = {line.kink}")
        for budget in (Decimal(-60), Decimal(0), Decimal(30), Decimal(60)):
            print(f"  B = {budget:>4}: tax {line.tax_at(budget):.4f} $/kg")
    print()

    print("-- operating point at a politically capped tax of 0.10 $/kg --")
    for rid in (LANDFILL_ROUTE, GLASS_ROUTE):
        req = required_budget_for_fixed_tax(case, Decimal("0.1"), rid)
        print(f"target {rid}: budget {req.budget:.2f} $ "
              f"(tax income {req.tax_income:.2f}, outlay {req.subsidy_outlay:.2f})")

    # sanity: the strap pathway needs no help to win
    assert subsidy_threshold(case, STRAP_ROUTE) == 0


if __name__ == "__main__":
    main()
