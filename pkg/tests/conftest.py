import pytest

import orosoar as oro


@pytest.fixture
def quadratic_polar():
    """s(v) = 0.5 + 0.05 (v - 8)^2 on [4, 14]."""
    return oro.GlidePolar(coeffs=(3.7, -0.8, 0.05, 0.0), v_min=4.0, v_max=14.0)


@pytest.fixture
def default_polar():
    return oro.default_polar()


@pytest.fixture
def cylinder9():
    return oro.CylinderField(freestream=9.0, radius=1.0)


@pytest.fixture
def airframe():
    return oro.default_airframe()
