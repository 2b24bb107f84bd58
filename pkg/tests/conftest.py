from fractions import Fraction

import numpy as np
import pytest

from qcube.signs import SignLaw, sample_sign_function


def random_eps(n, q=Fraction(1, 2), seed=0, *coords):
    return sample_sign_function(n, SignLaw(q, seed), "test", *coords)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[(5, Fraction(1, 2)), (6, Fraction(0)), (7, Fraction(-1, 2))])
def eps(request):
    n, q = request.param
    return random_eps(n, q, 99)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not getattr(module, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[num])
