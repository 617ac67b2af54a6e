"""Collects acceptance-criterion outcomes and prints one line per criterion."""

import pytest

CRITERIA = {
    1: "on-off mean-rate reproduction (25.6 kbit/s at theta -> 0, 0.1%)",
    2: "hop-count linear scaling, identical theta*, < 10 s",
    3: "regression-pinned delay bounds reproduced within 0.5%",
    4: "optimizer matches exhaustive theta grid on 20-case battery, 0.5%",
    5: "finite-horizon series match geometric forms; homogeneous collapse exact",
    6: "hand-computed backlog/delay tail anchors within 1e-4",
    7: "desk-scale simulation: empirical tails below analytic bounds",
    8: "randomized property suites (>= 1000 cases)",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion id")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    _outcomes.setdefault(marker.args[0], []).append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for n in sorted(_outcomes):
        outcomes = _outcomes[n]
        verdict = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(
            f"criterion {n}: {verdict} ({len(outcomes)} test(s)) - {CRITERIA[n]}"
        )
