import pytest

_LINES: list[str] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.call_passed = rep.passed


@pytest.fixture
def criterion(request):
    """Collects one summary line per acceptance criterion; the verdict is the test outcome."""
    info = {"number": None, "detail": ""}

    def record(number: int, detail: str = "") -> None:
        info["number"] = number
        info["detail"] = detail

    yield record
    if info["number"] is not None:
        status = "PASS" if getattr(request.node, "call_passed", False) else "FAIL"
        line = f"criterion {info['number']:>2}: {status}"
        if info["detail"]:
            line += f"  ({info['detail']})"
        _LINES.append(line)
        print(line)


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
