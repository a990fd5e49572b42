import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS, TITLES
    except ImportError:
        return
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(TITLES):
        rows = RESULTS.get(c, [])
        if not rows:
            tr.write_line(f"criterion {c}: NOT RUN   {TITLES[c]}")
            continue
        passed = sum(ok for _, ok in rows)
        verdict = "PASS" if passed == len(rows) else "FAIL"
        tr.write_line(f"criterion {c}: {verdict}  {TITLES[c]} ({passed}/{len(rows)} sub-checks)")
