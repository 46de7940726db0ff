"""Test-session plumbing: one visible PASS/FAIL line per acceptance criterion."""

from __future__ import annotations

ACCEPTANCE_MODULE = "test_acceptance.py"


def _criterion_label(nodeid: str) -> str | None:
    name = nodeid.split("::")[-1]
    if not name.startswith("test_criterion_"):
        return None
    number, _, slug = name.removeprefix("test_criterion_").partition("_")
    return f"criterion {number} ({slug.replace('_', ' ')})"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines: dict[str, str] = {}
    for reports in terminalreporter.stats.values():
        for report in reports:
            nodeid = getattr(report, "nodeid", "")
            when = getattr(report, "when", None)
            if ACCEPTANCE_MODULE not in nodeid:
                continue
            label = _criterion_label(nodeid)
            if label is None:
                continue
            if when == "call":
                lines[label] = "PASS" if report.passed else "FAIL"
            elif when == "setup" and not report.passed:
                lines[label] = "FAIL (setup)"
    if lines:
        terminalreporter.section("acceptance criteria")
        for label in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(f"{label}: {lines[label]}")
