import pytest

from util import two_route_circuit, motivating_problem


@pytest.fixture
def route_circuit():
    return two_route_circuit()


@pytest.fixture
def route_problem():
    return motivating_problem(0.5)
