"""Shared pytest plumbing: the acceptance gate reports one line per criterion
here so the lines survive output capture and land in the terminal summary."""

gate_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if gate_lines:
        terminalreporter.section("acceptance gate")
        for line in gate_lines:
            terminalreporter.write_line(line)
