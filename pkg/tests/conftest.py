import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

CRITERIA_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA_RESULTS):
        status, title = CRITERIA_RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}: {title}")
