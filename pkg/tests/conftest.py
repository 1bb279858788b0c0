import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cmalab.calculus import GridFunction, DiscreteMeasure  # noqa: E402
from cmalab.grid import build_domain  # noqa: E402


@pytest.fixture(scope="session")
def disc65():
    return build_domain("disc", 65)


@pytest.fixture(scope="session")
def disc129():
    return build_domain("disc", 129)


@pytest.fixture(scope="session")
def ball13():
    return build_domain("ball", 13)


@pytest.fixture(scope="session")
def polydisc9():
    return build_domain("polydisc", 9)


def quadratic(domain, scale=1.0):
    """scale * (|z|^2 - 1) sampled on the interior nodes."""
    return GridFunction.from_function(domain, lambda p: scale * (np.sum(p ** 2, axis=1) - 1.0))


def constant_measure(domain, c):
    return DiscreteMeasure(domain, np.full(domain.num_interior, float(c)))


# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE = {}


def record_criterion(number, title, passed, detail):
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE[(number, title)] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
