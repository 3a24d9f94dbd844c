import numpy as np
import pytest

from guidecloak.green import GreenEvaluator
from guidecloak.modal import CrossSection, build_mode_basis

SQUARE_K2 = 30.0
RECT_K2 = 100.0


@pytest.fixture(scope="session")
def square():
    return CrossSection(1.0, 1.0)


@pytest.fixture(scope="session")
def square_basis(square):
    return build_mode_basis(square, SQUARE_K2)


@pytest.fixture(scope="session")
def square_ev(square_basis):
    return GreenEvaluator(square_basis)


@pytest.fixture(scope="session")
def rect():
    return CrossSection(1.0, 0.5)


@pytest.fixture(scope="session")
def rect_basis(rect):
    return build_mode_basis(rect, RECT_K2)


@pytest.fixture(scope="session")
def rect_ev(rect_basis):
    return GreenEvaluator(rect_basis)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
