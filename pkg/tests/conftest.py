import pytest

from hitlpolicy import HumanModel, TimeModel, routing_scenario


@pytest.fixture
def scenario():
    """Four predicted classes, shares 1/4, ML accuracies 0.6/0.7/0.8/0.9."""
    return routing_scenario()


@pytest.fixture
def time_scenario():
    return routing_scenario(human=HumanModel(time_model=TimeModel(2.0)))


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance_log():
    """Append one ``PASS``/``FAIL`` line per acceptance criterion."""
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
