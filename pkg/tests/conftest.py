import time

import pytest

from rlgl.game import certify, run
from rlgl.scenario_io import generate_paper_scenario

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def paper_run():
    """The seed-42 reference game, simulated once per session."""
    config = generate_paper_scenario(42)
    t0 = time.perf_counter()
    log = run(config)
    wall = time.perf_counter() - t0
    report = certify(log, 1e-6)
    return config, log, report, wall


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
