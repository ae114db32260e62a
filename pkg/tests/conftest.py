"""Shared pytest configuration.

Prints one PASS/FAIL line per acceptance criterion at the end of the run so
the gate can be read off the terminal without scanning the full report.
"""

import re

from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=60,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

_CRITERION = re.compile(r"test_criterion_(\d+)_([a-z0-9_]+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for category, word in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL"),
                           ("skipped", "SKIP")):
        for report in terminalreporter.stats.get(category, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            match = _CRITERION.search(nodeid)
            if match:
                outcomes[(int(match.group(1)), match.group(2))] = word
    if not outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for (num, slug), word in sorted(outcomes.items()):
        terminalreporter.write_line(f"CRITERION {num:02d} ({slug}): {word}")
