from __future__ import annotations

import pytest


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.fixture
def report(request):
    """Attach a one-line result detail to the running acceptance test."""
    marker = request.node.get_closest_marker("criterion")
    request.node.user_properties.append(("criterion", marker.args[0] if marker else None))

    def add(detail: str) -> None:
        request.node.user_properties.append(("detail", detail))

    return add


_results: dict[int, tuple[str, list[str]]] = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    n = props.get("criterion")
    if n is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        details = [v for k, v in report.user_properties if k == "detail"]
        _results[n] = ("PASS" if report.outcome == "passed" else "FAIL", details)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        status, details = _results[n]
        terminalreporter.write_line(f"criterion {n}: {status}  {'; '.join(details)}")
