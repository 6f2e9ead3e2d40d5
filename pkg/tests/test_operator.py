import math

import numpy as np
import pytest

from mgetrans import (CartesianMesh, Discretization, MaterialCrossSections, TransportOperator,
                      build_quadrature, reduce_plus_scatter, synth_upscatter_fixture)
from mgetrans.operator import build_fixed_rhs, scatter_matvec, solve_cascade, within_group_gmres

import oracles


def _disc(xs, shape=(1, 1, 1), bc="vacuum", order=4):
    mesh = CartesianMesh(*shape, boundary=(bc,) * 6)
    return Discretization(mesh, {0: xs}, build_quadrature(order))


def test_scatter_matvec_zero():
    d = _disc(MaterialCrossSections.from_arrays([1.0, 1.0], np.zeros((2, 2))))
    assert not scatter_matvec(d, np.ones((2, 1)), range(2), range(2)).any()


def test_scatter_matvec_two_groups():
    d = _disc(MaterialCrossSections.from_arrays([1.0, 1.0], [[0, 0.3], [0.2, 0]]))
    out = scatter_matvec(d, np.ones((2, 1)), range(2), range(2))
    assert out[:, 0].tolist() == [0.3, 0.2]


def test_scatter_matvec_fixture_band():
    d = _disc(synth_upscatter_fixture(10, 5))
    v = np.zeros((10, 1))
    v[9] = 1.0
    out = scatter_matvec(d, v, range(10), range(10))
    assert set(np.flatnonzero(out[:, 0])) == {8, 9}


def test_scatter_with_two_materials():
    a = MaterialCrossSections.from_arrays([1.0], [[0.5]])
    b = MaterialCrossSections.from_arrays([1.0], [[0.1]])
    mesh = CartesianMesh(2, 1, 1, material_id=[0, 1])
    d = Discretization(mesh, {0: a, 1: b}, build_quadrature(2))
    assert d.scatter(np.ones((1, 2)), range(1), range(1)).tolist() == [[0.5, 0.1]]


def test_reduce_plus_scatter():
    u = np.arange(6.0).reshape(3, 2)
    assert np.array_equal(reduce_plus_scatter([u], [range(3)])[0], u)
    w = np.ones((3, 2))
    parts = reduce_plus_scatter([u, w], [range(0, 2), range(2, 3)])
    assert np.array_equal(parts[0], (u + w)[:2])
    assert np.array_equal(parts[1], (u + w)[2:])


def test_operator_is_identity_without_scatter():
    d = _disc(MaterialCrossSections.from_arrays([1.0, 2.0], np.zeros((2, 2))), (2, 2, 2))
    v = np.random.default_rng(0).random((2, 8))
    assert np.array_equal(TransportOperator(d).apply(v), v)


@pytest.mark.parametrize("c", [0.0, 0.3, 0.9])
def test_infinite_medium(c):
    sig = 1.7
    d = _disc(MaterialCrossSections.from_arrays([sig], [[c * sig]]), bc="reflect")
    out = TransportOperator(d).apply(np.array([[2.5]]))
    assert out[0, 0] == pytest.approx((1 - c) * 2.5, rel=1e-9)


def test_assembled_operator_matches_oracle():
    xs = synth_upscatter_fixture(10, 5).subset(range(7, 10))
    d = _disc(xs, (2, 2, 1), order=2)
    q = d.quadrature
    A_ref, _ = oracles.dense_transport_matrix(xs.sigma_s, xs.sigma_t, q.ordinates, q.weights,
                                              (2, 2, 1), (1.0, 1.0, 1.0))
    A = TransportOperator(d).assemble()
    assert np.allclose(A, A_ref, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("sets", [[range(0, 5), range(5, 10)],
                                  [range(0, 2), range(2, 4), range(4, 6), range(6, 8),
                                   range(8, 10)],
                                  [range(0, 7), range(7, 10)]])
@pytest.mark.parametrize("bc", ["vacuum", "reflect"])
def test_energy_sets_do_not_change_the_operator(sets, bc):
    d = _disc(synth_upscatter_fixture(10, 5), (3, 3, 3), bc=bc)
    v = np.random.default_rng(5).standard_normal((10, 27))
    ref = TransportOperator(d).apply(v)
    got = TransportOperator(d, range(10), sets).apply(v)
    threaded = TransportOperator(d, range(10), sets, workers=4).apply(v)
    assert np.linalg.norm(got - ref) <= 1e-12 * np.linalg.norm(ref)
    assert np.array_equal(got, threaded)


def test_sets_must_cover_block():
    d = _disc(synth_upscatter_fixture(4, 2))
    with pytest.raises(ValueError):
        TransportOperator(d, range(4), [range(0, 2), range(3, 4)])


def test_fixed_rhs_is_swept_source():
    xs = synth_upscatter_fixture(3, 1)
    d = _disc(xs, (2, 2, 2))
    q = np.zeros((3, 8))
    q[0] = 1.0
    b = build_fixed_rhs(d, q, range(3))
    assert np.allclose(b, d.sweep(q, range(3)))
    assert not build_fixed_rhs(d, np.zeros((3, 8)), range(3)).any()


def test_fixed_rhs_includes_cascade_downscatter():
    xs = synth_upscatter_fixture(4, 1)
    d = _disc(xs, (2, 1, 1))
    q = np.zeros((4, 2))
    phi = np.zeros((4, 2))
    phi[:2] = 1.0
    b = build_fixed_rhs(d, q, range(2, 4), (0, 1), phi)
    src = xs.sigma_s[2:4, :2] @ phi[:2]
    assert np.allclose(b, d.sweep(src, range(2, 4)))


def test_cascade_without_self_scatter_is_one_sweep_each():
    S = np.array([[0.0, 0.0], [0.4, 0.0]])
    d = _disc(MaterialCrossSections.from_arrays([1.0, 1.0], S), bc="reflect")
    phi, iters = solve_cascade(d, np.array([[1.0], [0.0]]), (0, 1), within_group_gmres(1e-12))
    # infinite medium: phi0 = 1, phi1 = 0.4
    assert phi[:, 0] == pytest.approx([1.0, 0.4], rel=1e-9)


def test_cascade_two_group_closed_form():
    S = np.array([[0.5, 0.0], [0.3, 0.6]])
    d = _disc(MaterialCrossSections.from_arrays([1.0, 1.0], S), bc="reflect")
    phi, _ = solve_cascade(d, np.array([[1.0], [0.5]]), (0, 1), within_group_gmres(1e-12))
    phi0 = 1.0 / 0.5
    phi1 = (0.5 + 0.3 * phi0) / 0.4
    assert phi[:, 0] == pytest.approx([phi0, phi1], rel=1e-9)
