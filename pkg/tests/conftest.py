import pytest

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """Record ``(number, title, passed, detail)`` for the end-of-run acceptance table."""

    def record(number, title, checks, detail=""):
        passed = all(checks.values())
        failed = ", ".join(k for k, v in checks.items() if not v)
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title}"
        if detail:
            line += f" | {detail}"
        if failed:
            line += f" | failed: {failed}"
        _ACCEPTANCE.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE):
        terminalreporter.write_line(line)
