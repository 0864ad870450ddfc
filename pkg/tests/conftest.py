import pytest

from twofold.polynomial import Poly3
from twofold.pws import extract_coefficients
from twofold.regularizer import RegularizationFn

X = Poly3.variable("x")
U = Poly3.variable("u")
ONE = Poly3.constant(1.0)


def ii2_model():
    return extract_coefficients((-1 - 7 * X, X + 2 * X ** 2), (1 - 6 * X, U - 2 * U ** 2))


def vi3_model():
    return extract_coefficients((1 + 0.5 * X, X - X ** 3), (-ONE, -2 * U + U ** 2))


@pytest.fixture
def ii2():
    return ii2_model()


@pytest.fixture
def vi3():
    return vi3_model()


@pytest.fixture
def linear():
    return RegularizationFn.linear()


@pytest.fixture
def cubic():
    return RegularizationFn.cubic()


@pytest.fixture
def septic():
    return RegularizationFn.septic()
