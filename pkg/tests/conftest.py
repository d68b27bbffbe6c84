import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from loslap import use_backend  # noqa: E402
from loslap._kernels import HAS_NUMBA  # noqa: E402

BACKENDS = ["numpy"] + (["numba"] if HAS_NUMBA else [])

ACCEPTANCE = {}


@pytest.fixture(params=BACKENDS)
def backend(request):
    with use_backend(request.param):
        yield request.param


@pytest.fixture
def record():
    """Record a pass/fail line for an acceptance criterion, then assert it."""

    def _record(criterion, ok, detail):
        ACCEPTANCE[criterion] = (bool(ok), detail)
        assert ok, f"{criterion}: {detail}"

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(ACCEPTANCE, key=lambda c: int(c.split()[1].rstrip(":"))):
        ok, detail = ACCEPTANCE[criterion]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {criterion} {detail}")
