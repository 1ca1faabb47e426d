from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.line(line[1])


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion, then assert."""
    recorded = []

    def record(number: int, title: str, ok: bool, detail: str = ""):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        print(line)
        request.config.stash[ACCEPTANCE].append((number, line))
        recorded.append(number)
        assert ok, line

    record.recorded = recorded
    yield record
    number = getattr(request.function, "criterion_number", None)
    if number is not None and not recorded:
        request.config.stash[ACCEPTANCE].append(
            (number, f"criterion {number:2d}: FAIL  {request.function.__name__} raised before reporting"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
