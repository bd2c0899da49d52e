"""Shared model fixtures: the small models exercised throughout the suite."""
from fractions import Fraction

import pytest

from divmax.exactlin import RationalMatrix
from divmax.toricmodel import ToricModel

BINOMIAL_A = [[1, 1, 1, 1], [0, 1, 2, 3]]
INDEP22_A = [[1, 1, 1, 1], [0, 0, 1, 1], [0, 1, 0, 1]]
PENTAGON_A = [[1, 1, 1, 1, 1], [0, 1, 2, 3, 2], [1, 0, 0, 1, 2]]
INDEP23_A = [
    [1, 1, 1, 1, 1, 1],
    [0, 0, 0, 1, 1, 1],
    [0, 1, 0, 0, 1, 0],
    [0, 0, 1, 0, 0, 1],
]
TRAPEZOID111_A = [[1, 1, 1, 1, 1], [0, 0, 1, 1, 2], [0, 1, 0, 1, 0]]


@pytest.fixture(scope="session")
def binomial_model():
    return ToricModel(BINOMIAL_A, weights=(1, 3, 3, 1), name="binomial3")


@pytest.fixture(scope="session")
def indep22_model():
    return ToricModel(INDEP22_A, name="independence-2x2")


@pytest.fixture(scope="session")
def pentagon_model():
    return ToricModel(PENTAGON_A, name="pentagon")


@pytest.fixture(scope="session")
def indep23_model():
    return ToricModel(INDEP23_A, name="independence-2x3")


@pytest.fixture(scope="session")
def trapezoid111_model():
    return ToricModel(TRAPEZOID111_A, weights=(1, 1, 2, 1, 1), name="trapezoid-1-1-1")


def matrix(rows) -> RationalMatrix:
    return RationalMatrix.from_rows(rows)


def frac(x) -> Fraction:
    return Fraction(x)
