import functools
import math

import pytest

from qpspec import core, tqse

SQRT5 = math.sqrt(5.0)

# (criterion number) -> list of outcomes, filled by the hook below
_CRITERIA: dict[int, dict] = {}


def pytest_addoption(parser):
    parser.addoption("--run-qsm32", action="store_true", default=False,
                     help="also run the QSM benchmark at N=32 (about an hour)")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")
    config.addinivalue_line("markers", "qsm32: QSM benchmark at N=32, run only with --run-qsm32")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-qsm32"):
        return
    skip = pytest.mark.skip(reason="QSM at N=32 needs --run-qsm32")
    for item in items:
        if "qsm32" in item.keywords:
            item.add_marker(skip)


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": 0, "failed": 0, "skipped": 0, "expected": 0})
    if call.when == "setup" and call.excinfo is not None:
        key = "skipped" if call.excinfo.errisinstance(pytest.skip.Exception) else "failed"
        entry[key] += 1
    elif call.when == "call":
        if call.excinfo is None:
            entry["passed"] += 1
        elif call.excinfo.errisinstance(pytest.skip.Exception):
            entry["skipped"] += 1
        else:
            entry["failed"] += 1
            # a known, documented failure still fails the criterion; it is only labelled
            if item.get_closest_marker("xfail") is not None:
                entry["expected"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        status = "FAIL" if e["failed"] else ("PASS" if e["passed"] else "SKIP")
        failed = f"{e['failed']} failed"
        if e["expected"]:
            failed += f" ({e['expected']} known, xfail)"
        extra = f", {e['skipped']} skipped" if e["skipped"] else ""
        terminalreporter.write_line(
            f"criterion {number}: {status}  {e['title']}  [{e['passed']} passed, {failed}{extra}]")


@pytest.fixture(scope="session")
def problem():
    return tqse.default_problem()


@pytest.fixture(scope="session")
def reference(problem):
    return tqse.reference_solution(problem)


@functools.lru_cache(maxsize=None)
def _cached_run(method, N, L=None, M=None):
    problem = tqse.default_problem()
    return tqse.run(problem, method, N, L=L, M=M, reference=tqse.reference_solution(problem))


@pytest.fixture(scope="session")
def default_run(reference):
    """Memoized ``tqse.run`` on the default problem: ``default_run(method, N, L=None, M=None)``."""
    return _cached_run


@pytest.fixture
def P5():
    return core.ProjectionMatrix([[1.0, SQRT5]])
