"""Shared pytest wiring: the acceptance verdict log.

test_acceptance.py appends one "PASS/FAIL <criterion>" line per contract;
re-emitting them here, after capture has ended, keeps the verdicts visible
in the terminal report no matter the capture mode.
"""

ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_VERDICTS:
        terminalreporter.write_line(line)
