import re

import numpy as np
import pytest


def pytest_runtest_logreport(report):
    """Print one PASS/FAIL line per acceptance criterion test."""
    if report.when != "call":
        return
    m = re.search(r"test_acceptance\.py::test_criterion_(\w+)", report.nodeid)
    if not m:
        return
    label = m.group(1)
    if report.passed:
        status = "PASS"
    elif report.skipped:
        # strict xfail lands here with an "expected failure" wasxfail marker
        status = "FAIL (expected, documented defect)" if hasattr(report, "wasxfail") else "SKIP"
    else:
        status = "FAIL"
    print(f"\n[ACCEPTANCE] criterion {label}: {status}")


@pytest.fixture
def rng():
    return np.random.default_rng(20280726)
