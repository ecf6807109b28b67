import functools

import pytest

from abrsim.scenario import ScenarioConfig, run

CRITERIA = {
    1: "analytic column reproduced exactly",
    2: "model constants",
    3: "underload band N=5,10,20",
    4: "overload drop and band N=30,50,100",
    5: "peak timing",
    6: "underload with t = 10 ms",
    7: "insensitivity to segment size",
    8: "loss-free and conservative",
    9: "determinism",
    10: "ERICA+ unit properties",
}


@functools.lru_cache(maxsize=None)
def cached_run(n, **kw):
    """Acceptance runs are shared between criteria within one session."""
    return run(ScenarioConfig(n_sources=n, **kw))


@pytest.fixture
def sim():
    return cached_run


def pytest_configure(config):
    config._criteria = {}
    config._criteria_notes = {}


@pytest.fixture
def note(request):
    """Attach a measured-value remark to the test's acceptance criterion."""
    marker = request.node.get_closest_marker("criterion")
    notes = request.config._criteria_notes

    def add(text):
        notes.setdefault(marker.args[0], []).append(text)

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call" and report.passed:
        return
    k = marker.args[0]
    ok = item.config._criteria.get(k, True)
    item.config._criteria[k] = ok and not report.failed


def pytest_terminal_summary(terminalreporter, config):
    results = config._criteria
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        status = "PASS" if results[k] else "FAIL"
        line = f"criterion {k:2d}: {status}  {CRITERIA.get(k, '')}"
        notes = config._criteria_notes.get(k)
        if notes:
            line += "  [" + "; ".join(notes) + "]"
        terminalreporter.write_line(line)
