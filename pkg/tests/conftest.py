"""Shared pytest wiring.

The acceptance tests append one human-readable line per criterion to
``ACCEPTANCE_LINES``; the terminal-summary hook reprints them in a
dedicated section so the pass/fail overview survives output capture.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
