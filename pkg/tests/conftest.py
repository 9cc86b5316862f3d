"""Shared pytest plumbing: acceptance verdict reporting.

Acceptance tests register one `[ACCEPTANCE] <name>: PASS|FAIL` line each;
printing them from the terminal-summary hook keeps them visible under
pytest's output capture.
"""

acceptance_verdicts: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if acceptance_verdicts:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_verdicts:
            terminalreporter.write_line(line)
