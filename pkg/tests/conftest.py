import numpy as np
import pytest

from eventpixel import event_stream as es

PAPER = es.ModelParams(5.0, 0.002, 0.96, 0.94)
LONG_RHO = es.ModelParams(5.0, 0.39, 0.96, 0.94)
SYMMETRIC = es.ModelParams(5.0, 0.002, 0.95, 0.95)

_ACCEPTANCE = []


def pytest_addoption(parser):
    parser.addoption("--run-extended", action="store_true", default=False,
                     help="run the full-scale 10^6-event reproduction")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-extended"):
        return
    skip = pytest.mark.skip(reason="needs --run-extended")
    for item in items:
        if "extended" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(tag, ok, detail)``."""

    def record(tag, ok, detail=""):
        _ACCEPTANCE.append((tag, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for tag, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {tag}  {detail}")


@pytest.fixture(scope="session")
def paper_stream():
    from eventpixel.cli import component_rng
    return es.simulate_event_stream(PAPER, 0.0, 100_000, component_rng(1, "stream"), seed=1)


@pytest.fixture(scope="session")
def long_rho_stream():
    from eventpixel.cli import component_rng
    return es.simulate_event_stream(LONG_RHO, 0.0, 100_000, component_rng(1, "stream"), seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
