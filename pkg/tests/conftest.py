import numpy as np
import pytest

from ghzaic.measurement import MeasurementPlan, Setting


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def single_setting_plan(n, setting):
    return MeasurementPlan(n, (setting,))


ACCEPTANCE_LINES = []


def record_criterion(number, name, passed, detail):
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
