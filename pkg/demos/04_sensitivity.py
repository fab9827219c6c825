"""How the optimal pathway shifts with wash-loop logistics.

Two operating parameters control whether reusable glass beats the cheaper
one-way pathways: the distance bottles travel to the wash plant and the
fraction broken or lost per cycle. Sweeping each while re-optimizing the
policy at several budgets shows where the pathway recommendation flips and
how steeply the fiscal quantities respond.

Run: python3 demos/04_sensitivity.py
"""

from decimal import Decimal

from ecolever import (
    Objective,
    calibrate_case_study,
    sensitivity_distance,
    sensitivity_loss,
)


def show(sweeps, header):
    print(f"-- {header} --")
    print(f"{'value':>8}  pathway(s) across budgets        "
          f"{'d(income)/dB':>13} {'d(outlay)/dB':>13} {'d(cost)/dB':>11}")
    for s in sweeps:
        picks = sorted(set(s.dominant_routes))
        def fmt(x):
            return f"{x:.4f}" if x is not None else "n/a"
        print(f"{s.value:>8}  {', '.join(picks):<33} {fmt(s.tax_income_slope):>13}"
              f" {fmt(s.subsidy_slope):>13} {fmt(s.industry_cost_slope):>11}")
    print()


def main():
    case = calibrate_case_study()
    budgets = [Decimal(0), Decimal(30), Decimal(60)]
    distances = [Decimal(7), Decimal(15), Decimal(65), Decimal(140)]
    losses = [Decimal("0.01"), Decimal("0.0313"), Decimal("0.1")]

    print("= wash distance (miles), loss held at the calibrated 3.13% =\n")
    show(sensitivity_distance(case, distances, budgets, Objective.MIN_GHG),
         "minimize GHG")
    show(sensitivity_distance(case, distances, budgets, Objective.MAX_CIRCULARITY),
         "maximize circularity")
    print("reading: a short wash loop makes glass the emission winner; past the")
    print("calibrated 65 miles the trucking overhead hands min-GHG back to")
    print("landfill, while the circularity objective sticks with glass and its")
    print("tax income responds ever more steeply to budget cuts\n")

    print("= wash loss fraction, distance held at the calibrated 65 miles =\n")
    show(sensitivity_loss(case, losses, budgets, Objective.MIN_GHG),
         "minimize GHG")
    show(sensitivity_loss(case, losses, budgets, Objective.MAX_CIRCULARITY),
         "maximize circularity")
    print("reading: at 10% breakage the wash loop is so expensive that raising")
    print("the budget lowers the required tax faster than the subsidy bill")
    print("grows, so outlay and industry cost fall together (both slopes < 0)")


if __name__ == "__main__":
    main()
