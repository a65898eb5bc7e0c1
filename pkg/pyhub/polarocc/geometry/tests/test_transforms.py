import math

import numpy as np
import pytest

from pyhub.polarocc.geometry import (
    CartPoint,
    PolarPoint,
    cart_to_polar,
    cart_to_polar_arrays,
    normalize_angle,
    polar_to_cart,
)


@pytest.mark.parametrize(
    "cart,expected",
    [
        ((1.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
        ((0.0, 2.0, -1.0), (2.0, math.pi / 2, -1.0)),
        ((-1.0, -1.0, 3.0), (math.sqrt(2), -3 * math.pi / 4, 3.0)),
        # 원점은 θ=0
        ((0.0, 0.0, 4.0), (0.0, 0.0, 4.0)),
        # 음의 x 축은 +π 쪽
        ((-2.0, -0.0, 0.0), (2.0, math.pi, 0.0)),
    ],
)
def test_cart_to_polar(cart, expected):
    p = cart_to_polar(CartPoint(*cart))
    assert p.r == pytest.approx(expected[0], abs=1e-15)
    assert p.theta == pytest.approx(expected[1], abs=1e-15)
    assert p.z == expected[2]


@pytest.mark.parametrize(
    "polar,expected",
    [
        ((1.0, math.pi / 2, 0.0), (0.0, 1.0, 0.0)),
        ((0.0, 1.234, 5.0), (0.0, 0.0, 5.0)),
    ],
)
def test_polar_to_cart(polar, expected):
    c = polar_to_cart(PolarPoint(*polar))
    assert (c.x, c.y, c.z) == pytest.approx(expected, abs=1e-15)


def test_round_trip():
    p = PolarPoint(3.7, 2.1, -0.4)
    q = cart_to_polar(polar_to_cart(p))
    assert abs(q.r - p.r) < 1e-12 and abs(q.theta - p.theta) < 1e-12 and q.z == p.z

    rng = np.random.default_rng(0)
    for x, y, z in rng.uniform(-50, 50, (200, 3)):
        c = polar_to_cart(cart_to_polar(CartPoint(x, y, z)))
        assert abs(c.x - x) < 1e-12 and abs(c.y - y) < 1e-12


@pytest.mark.parametrize("theta", [-math.pi, math.pi, 3 * math.pi, -2.5, 7.0])
def test_normalize_angle_range(theta):
    t = normalize_angle(theta)
    assert -math.pi < t <= math.pi
    assert math.cos(t) == pytest.approx(math.cos(theta)) and math.sin(t) == pytest.approx(math.sin(theta), abs=1e-12)


def test_array_version_matches_scalar():
    rng = np.random.default_rng(1)
    xy = rng.uniform(-5, 5, (100, 2))
    r, theta = cart_to_polar_arrays(xy[:, 0], xy[:, 1])
    for (x, y), ri, ti in zip(xy, r, theta):
        p = cart_to_polar(CartPoint(x, y, 0.0))
        assert p.r == ri and p.theta == ti
