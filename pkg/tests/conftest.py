from __future__ import annotations

from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture
def fl_pair():
    from dualplan.pddl import parse_domain, parse_problem

    return parse_domain(fixture_text("frozenlake_domain.pddl")), parse_problem(fixture_text("frozenlake_problem.pddl"))


@pytest.fixture
def pkg_pair():
    from dualplan.pddl import parse_domain, parse_problem

    return parse_domain(fixture_text("package_domain.pddl")), parse_problem(fixture_text("package_problem.pddl"))


@pytest.fixture
def recorded_scenario():
    from dualplan.worlds import GridScenario

    return GridScenario.from_json(fixture_text("recorded_scenario.json"))
