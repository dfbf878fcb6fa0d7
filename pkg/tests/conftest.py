import os

import pytest
from hypothesis import HealthCheck, settings

from petrigame import fixtures
from petrigame.corpus import generate_corpus
from petrigame.game import build_base_game, build_restart_game

settings.register_profile(
    "default", deadline=None, max_examples=50, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def n1():
    return fixtures.n1()


@pytest.fixture(scope="session")
def n1_base(n1):
    return build_base_game(n1)


@pytest.fixture(scope="session")
def n1_restart(n1_base):
    return build_restart_game(n1_base)


@pytest.fixture(scope="session")
def corpus():
    return generate_corpus()


ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


@pytest.fixture
def acceptance_lines(request):
    return request.config.stash[ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
