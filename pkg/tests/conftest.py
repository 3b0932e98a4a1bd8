"""Shared pytest hooks: named acceptance criteria echoed at session end.

Tests marked ``@pytest.mark.acceptance(name, detail)`` assert one release
criterion each.  Their outcomes are collected and re-printed as one line per
criterion after the normal pytest summary, so a teed test log carries an
explicit PASS/FAIL verdict for every criterion including the two that are
deliberately red (strict expected-failures documenting measured reality).
"""

import pytest

_RESULTS: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(name, detail): test asserts one named acceptance "
        "criterion; its outcome is echoed in the terminal summary",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.args[0]
    detail = marker.args[1] if len(marker.args) > 1 else ""
    if hasattr(report, "wasxfail"):
        # Strict expected-failure: the criterion is not met and the test
        # documents that honestly instead of papering over it.
        status = "FAIL (expected)" if report.skipped else "PASS (unexpectedly)"
    elif report.passed:
        status = "PASS"
    elif report.failed:
        status = "FAIL"
    else:
        status = "SKIPPED"
    _RESULTS[name] = (status, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, (status, detail) in _RESULTS.items():
        suffix = f" — {detail}" if detail else ""
        terminalreporter.write_line(f"ACCEPTANCE: {status:<15s} {name}{suffix}")
