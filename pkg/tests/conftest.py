import pytest
from hypothesis import HealthCheck, settings

from eyepeek.config import reference_scene

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None:
        for key, value in report.user_properties:
            if key == "criterion":
                crit = value
    if crit is None:
        return
    num, title = crit
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[num] = (title, "PASS" if report.outcome == "passed" else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_ACCEPTANCE):
        title, outcome = _ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d} [{outcome}] {title}")


@pytest.fixture
def criterion(record_property):
    def mark(num: int, title: str):
        record_property("criterion", (num, title))
    return mark


@pytest.fixture(scope="session")
def ref_scene():
    return reference_scene
