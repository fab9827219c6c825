from decimal import Decimal

import pytest
from hypothesis import settings

from ecolever import Scenario, calibrate_case_study

settings.register_profile("suite", max_examples=50, deadline=None)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def case():
    """The calibrated coffee-packaging scenario."""
    return calibrate_case_study()


@pytest.fixture(scope="session")
def small_case(case):
    """Same catalog at enumeration-friendly demand."""
    return Scenario(demand=12, routes=case.routes, modifiers=case.modifiers)


@pytest.fixture(scope="session")
def capped_case(case):
    """Small demand plus capacities and technology fixed costs, to force the
    integer solver off the pure-linear fast path."""
    return Scenario(
        demand=12,
        routes=case.routes,
        modifiers=case.modifiers,
        technology_fixed_costs={
            "strap_recycling_line": Decimal("0.5"),
            "landfill_site": Decimal("0.2"),
            "wash_reuse_loop": Decimal("0.3"),
        },
        capacity_limits={rid: 6 for rid in case.route_ids()},
    )
