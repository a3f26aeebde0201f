import numpy as np
import pytest

from idmdp.examples import build_example


@pytest.fixture(scope="session")
def toy():
    return build_example("toy")


@pytest.fixture(scope="session")
def ex3():
    return build_example("ex3")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
