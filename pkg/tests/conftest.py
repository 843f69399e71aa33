import numpy as np
import pytest

from tavi.objectives import Objective


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def counting(obj: Objective, attr: str = "grad"):
    """Wrap ``obj.<attr>`` so calls are counted in ``obj.calls``."""
    inner = getattr(obj, attr)
    obj.calls = 0

    def wrapped(x):
        obj.calls += 1
        return inner(x)

    setattr(obj, attr, wrapped)
    return obj


def quartic_1d():
    """f(x) = (x - 1)^4 on R^1, i.e. the d = 1 quartic."""
    return Objective(f=lambda x: float((x[0] - 1.0) ** 4), grad=lambda x: 4.0 * (x - 1.0) ** 3, dim=1, f_star=0.0)


def flat(dim):
    return Objective(f=lambda x: 0.0, grad=lambda x: np.zeros(dim), dim=dim, f_star=0.0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
