import numpy as np
import pytest

from ladderhop.ladder import LevelScheme


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def f32():
    return LevelScheme(1.5)


@pytest.fixture(scope="session")
def f52():
    return LevelScheme(2.5)


# --------------------------------------------------------------------------
# acceptance summary: one line per criterion


_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n = mark.args[0]
    entry = _criteria.setdefault(n, {"ok": True, "tests": []})
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        passed = rep.outcome == "passed" and not hasattr(rep, "wasxfail")
        entry["ok"] &= passed
        entry["tests"].append((item.name, "pass" if passed else ("xfail" if hasattr(rep, "wasxfail") else rep.outcome)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        entry = _criteria[n]
        detail = ", ".join(f"{name}={state}" for name, state in entry["tests"])
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if entry['ok'] else 'FAIL'}  ({detail})")
