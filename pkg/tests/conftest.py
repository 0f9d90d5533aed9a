"""Shared pytest wiring: collects acceptance criterion lines for the summary."""

acceptance_lines: list[str] = []


def record_acceptance_line(line: str) -> None:
    acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
