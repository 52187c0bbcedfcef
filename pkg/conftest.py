import textwrap

import pytest

import settings
from parsers.scenario_parser import parse_scenario
from sim.mission import run

MINIMAL_MISSION = """
[mission]
name = probe
duration = 1
initial_rat = 5G
"""


def scenario_from(text: str):
    """Parse scenario text against the shipped defaults; fails the test on any error."""
    result = parse_scenario(textwrap.dedent(text))
    assert result.ok, [str(d) for d in result.diagnostics]
    return result.scenario


@pytest.fixture
def build_scenario():
    return scenario_from


@pytest.fixture(scope="session")
def default_scenario():
    return scenario_from(MINIMAL_MISSION)


@pytest.fixture(scope="session")
def matrices(default_scenario):
    return default_scenario.matrices


@pytest.fixture(scope="session")
def profiles(default_scenario):
    return default_scenario.profiles


@pytest.fixture(scope="session")
def builtin():
    """Run a shipped scenario once per session: name -> (scenario, timeline, report)."""
    from parsers.scenario_parser import load_scenario

    cache = {}

    def _run(name: str):
        if name not in cache:
            scenario = load_scenario(settings.scenario_path(name))
            cache[name] = (scenario, *run(scenario))
        return cache[name]

    return _run
