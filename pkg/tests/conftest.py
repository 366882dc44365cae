import os

import pytest
from hypothesis import settings

from loopdvs import LinkSpec, ReceiverSpec, VibrationEvent, validate

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

C = 299792458.0
DATA = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def quiet_link():
    """1008 km loop geometry, every noise source off."""
    return LinkSpec(group_index=1.46803, laser_linewidth_hz=0.0, osnr_db=float("inf"))


@pytest.fixture
def quiet_rx():
    return ReceiverSpec(electrical_noise_std_a=0.0)


@pytest.fixture
def quiet_config(quiet_link, quiet_rx):
    return validate(quiet_link, quiet_rx, [VibrationEvent()])


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion for the summary."""

    def record(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
