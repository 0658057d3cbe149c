"""Per-criterion PASS/FAIL summary for the acceptance suite.

Acceptance tests carry ``@pytest.mark.criterion("AC<n>", "short title")``. A
criterion passes only when every test bound to it passed; an expected failure
counts as FAIL so an unattainable criterion stays visible.
"""

from __future__ import annotations

import pytest

_OUTCOMES: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion a test belongs to")
    config.addinivalue_line("markers", "slow: long-running acceptance sweep")


def _key(cid: str) -> tuple[int, str]:
    digits = "".join(ch for ch in cid if ch.isdigit())
    return (int(digits) if digits else 0, cid)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    cid, title = mark.args[0], mark.args[1] if len(mark.args) > 1 else ""
    entry = _OUTCOMES.setdefault(cid, {"title": title, "passed": 0, "failed": [], "xfailed": []})
    if report.when == "call":
        if hasattr(report, "wasxfail"):
            (entry["failed"] if report.passed else entry["xfailed"]).append(item.name)
        elif report.passed:
            entry["passed"] += 1
        elif report.failed:
            entry["failed"].append(item.name)
    elif report.failed:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_OUTCOMES, key=_key):
        e = _OUTCOMES[cid]
        ok = not e["failed"] and not e["xfailed"] and e["passed"] > 0
        line = f"{cid} {'PASS' if ok else 'FAIL'}  {e['title']}  ({e['passed']} passed"
        if e["xfailed"]:
            line += f", {len(e['xfailed'])} known-unattainable: {', '.join(e['xfailed'])}"
        if e["failed"]:
            line += f", failed: {', '.join(e['failed'])}"
        terminalreporter.write_line(line + ")")
