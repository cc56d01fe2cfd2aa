import numpy as np
import pytest

from tmsvlab.fock import FockSpace, basis_state


@pytest.fixture(scope="session")
def space10():
    return FockSpace(10)


@pytest.fixture(scope="session")
def space4():
    return FockSpace(4)


@pytest.fixture(scope="session")
def vacuum10(space10):
    return basis_state(space10, 0, 0).projector()


def assert_within_se(value, expected, se, n_se=3.0):
    assert abs(value - expected) <= n_se * se, (
        f"{value} deviates from {expected} by more than {n_se} standard errors ({se})")
