import math

import numpy as np
import pytest

from mgetrans import build_quadrature
from mgetrans.quadrature import SUPPORTED_ORDERS, _MU1, octant_signs

import oracles


def test_s2_is_the_cube_diagonals():
    q = build_quadrature(2)
    assert len(q) == 8
    assert np.allclose(np.abs(q.ordinates), 1 / math.sqrt(3))
    assert np.allclose(q.weights, math.pi / 2)


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_counts_and_normalization(order):
    q = build_quadrature(order)
    assert len(q) == order * (order + 2)
    assert q.weights.sum() == pytest.approx(4 * math.pi, rel=1e-14)
    assert np.all(q.weights > 0)
    assert np.allclose(np.linalg.norm(q.ordinates, axis=1), 1.0, atol=1e-14)


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_odd_moments_vanish_and_second_moment(order):
    q = build_quadrature(order)
    for axis in range(3):
        mu = q.ordinates[:, axis]
        assert abs(np.dot(q.weights, mu)) < 1e-13
        assert abs(np.dot(q.weights, mu ** 3)) < 1e-13
        assert np.dot(q.weights, mu ** 2) == pytest.approx(4 * math.pi / 3, rel=1e-12)


@pytest.mark.parametrize("order", SUPPORTED_ORDERS)
def test_matches_moment_condition_oracle(order):
    pts, classes = oracles.level_symmetric_points(order, _MU1[order])
    w_ref = oracles.moment_weights(pts, classes)
    base, w = build_quadrature(order).first_octant()
    for p, wr in zip(pts, w_ref):
        n = np.argmin(np.linalg.norm(base - p, axis=1))
        assert np.linalg.norm(base[n] - p) < 1e-6
        assert w[n] == pytest.approx(wr, rel=1e-6)


def test_s4_mu1_makes_the_levels_consistent():
    mu1 = _MU1[4]
    # mu1^2 + mu1^2 + mu2^2 = 1 with mu2^2 = mu1^2 + 2(1 - 3 mu1^2)/2
    assert 2 * mu1 ** 2 + (mu1 ** 2 + (1 - 3 * mu1 ** 2)) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("order", [0, 1, 3, 10, 16])
def test_unsupported_order(order):
    with pytest.raises(ValueError, match="unsupported order"):
        build_quadrature(order)


def test_octant_symmetry():
    q = build_quadrature(6)
    base, w = q.first_octant()
    assert len(octant_signs()) == 8
    for s in octant_signs():
        flipped = base * np.array(s)
        for p in flipped:
            assert np.min(np.linalg.norm(q.ordinates - p, axis=1)) < 1e-14
