import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mgetrans import (CartesianMesh, MaterialCrossSections, MGEPreconditioner, build_hierarchy,
                      build_quadrature, grid_depth, prolong_vector, restrict_material,
                      restrict_vector, synth_upscatter_fixture)
from mgetrans.mge import relax_richardson, restrict_scatter, v_cycle

import oracles

MESH = CartesianMesh(2, 2, 2)
Q4 = build_quadrature(4)


def _hier(xs, sets, depth, mesh=MESH, quad=Q4):
    return build_hierarchy({0: xs}, sets, depth, mesh, quad)


def test_depth_matches_chain_for_all_sizes():
    for G in range(1, 513):
        assert grid_depth(G) == oracles.chain_length(G), G


def test_depth_examples():
    assert grid_depth(27) == 6
    assert grid_depth(2) == 2
    assert grid_depth(1) == 1


def test_depth_with_sets_is_clamped(caplog):
    assert grid_depth(27, 10, min_set_size=2) == 2
    assert grid_depth(10, 2, min_set_size=5) == 4
    with caplog.at_level(logging.WARNING):
        assert grid_depth(10, override=9) == 5
    assert "not achievable" in caplog.text


def test_restrict_examples():
    assert restrict_vector([3.0] * 4).tolist() == [3.0, 3.0]
    assert restrict_vector([1, 2, 3, 4, 5]).tolist() == [1.5, 3.5, 5]
    assert restrict_vector([4, 6]).tolist() == [5]


def test_prolong_examples():
    assert prolong_vector([7.0], 2).tolist() == [7.0, 7.0]
    assert prolong_vector([2, 4], 4).tolist() == [2, 3, 4, 4]
    assert prolong_vector([2, 4], 3).tolist() == [2, 3, 4]
    with pytest.raises(ValueError):
        prolong_vector([1, 2, 3], 4)


def test_scatter_restriction_examples():
    a, b, c, d = 1.0, 2.0, 3.0, 5.0
    assert restrict_scatter(np.array([[a, b], [c, d]])).tolist() == [[(a + b + c + d) / 4]]
    S = np.arange(9.0).reshape(3, 3)
    C = restrict_scatter(S)
    assert C[1, 1] == S[2, 2]
    assert C[1, 0] == 0.5 * (S[2, 0] + S[2, 1])
    assert C[0, 1] == 0.5 * (S[0, 2] + S[1, 2])


def test_transfers_match_loop_formulas_exhaustively():
    rng = np.random.default_rng(11)
    for N in range(1, 34):
        for _ in range(5):
            v = rng.standard_normal(N)
            assert np.allclose(restrict_vector(v), oracles.restrict_loop(v), rtol=0, atol=1e-15)
            c = rng.standard_normal(-(-N // 2))
            assert np.array_equal(prolong_vector(c, N), oracles.prolong_loop(c, N))
            S = rng.random((N, N))
            assert np.allclose(restrict_scatter(S), oracles.restrict_scatter_loop(S),
                               rtol=0, atol=1e-15)
        k = 3.25
        assert np.all(restrict_vector(np.full(N, k)) == k)
        assert np.all(prolong_vector(np.full(-(-N // 2), k), N) == k)
        assert np.all(restrict_scatter(np.full((N, N), k)) == k)


def test_restriction_acts_cellwise():
    v = np.arange(10.0).reshape(5, 2)
    assert np.array_equal(restrict_vector(v)[:, 1], restrict_vector(v[:, 1]))


def test_restrict_material_odd():
    xs = synth_upscatter_fixture(5, 2)
    xs = MaterialCrossSections(xs.sigma_t, xs.sigma_s, np.arange(5.0), np.array([.5, .3, .1, .1, 0]))
    c = restrict_material(xs)
    assert c.num_groups == 3
    assert c.sigma_t[2] == xs.sigma_t[4]
    assert c.chi.sum() == pytest.approx(1.0)
    assert c.chi.tolist() == pytest.approx([0.8, 0.2, 0.0])


def test_hierarchy_counts():
    xs = synth_upscatter_fixture(10, 5)
    h = _hier(xs, [range(10)], grid_depth(10))
    assert h.group_counts() == [10, 5, 3, 2, 1]
    h2 = _hier(xs, [range(0, 5), range(5, 10)], grid_depth(10, 2, min_set_size=5))
    assert h2.group_counts(0) == h2.group_counts(1) == [5, 3, 2, 1]
    h1 = _hier(xs, [range(10)], 1)
    assert np.array_equal(h1.levels[0][0].materials[0].sigma_s, xs.sigma_s)


def test_hierarchy_clamps_depth(caplog):
    with caplog.at_level(logging.WARNING):
        h = _hier(synth_upscatter_fixture(4, 2), [range(4)], 7)
    assert h.depth == 3
    assert "clamping" in caplog.text


def test_hierarchy_truncates_to_sets():
    xs = synth_upscatter_fixture(10, 5)
    h = _hier(xs, [range(0, 5), range(5, 10)], 1)
    assert np.array_equal(h.levels[1][0].materials[0].sigma_s, xs.sigma_s[5:, 5:])


def _no_scatter(G):
    return MaterialCrossSections.from_arrays(np.linspace(1, 2, G), np.zeros((G, G)))


def test_richardson_without_scatter_returns_b():
    op = _hier(_no_scatter(3), [range(3)], 1).levels[0][0].operator
    b = np.random.default_rng(0).random((3, 8))
    assert np.array_equal(relax_richardson(np.ones((3, 8)), b, op, 1.0), b)
    assert np.array_equal(relax_richardson(None, b, op, 1.0), b)


def test_richardson_fixed_point():
    h = _hier(synth_upscatter_fixture(4, 2), [range(4)], 1)
    op = h.levels[0][0].operator
    A = op.assemble()
    b = np.random.default_rng(1).random(A.shape[0])
    x = np.linalg.solve(A, b).reshape(4, 8)
    out = relax_richardson(x, b.reshape(4, 8), op, 1.3)
    assert np.linalg.norm(out - x) <= 1e-12 * np.linalg.norm(x)


def test_vcycle_depth_one_is_plain_relaxation():
    h = _hier(synth_upscatter_fixture(4, 2), [range(4)], 1)
    op = h.levels[0][0].operator
    b = np.random.default_rng(2).random((4, 8))
    x = None
    for _ in range(3):
        x = relax_richardson(x, b, op, 0.8)
    assert np.allclose(v_cycle(b, h.levels[0], 0, 3, 0.8), x, rtol=1e-14)


def test_vcycle_without_scatter_is_exact():
    h = _hier(_no_scatter(6), [range(6)], 3)
    b = np.random.default_rng(3).random((6, 8))
    assert np.array_equal(v_cycle(b, h.levels[0], 0, 2, 1.0), b)
    pc = MGEPreconditioner(h, 1.0, 2, 2)
    assert np.allclose(pc.apply(b), b, rtol=0, atol=1e-15)


def _dense_transfers(N):
    R = np.array([oracles.restrict_loop(e) for e in np.eye(N)]).T
    P = np.array([oracles.prolong_loop(e, N) for e in np.eye(-(-N // 2))]).T
    return R, P


def test_vcycle_matches_dense_two_grid_oracle():
    xs = synth_upscatter_fixture(5, 3)
    h = _hier(xs, [range(5)], 2, mesh=CartesianMesh(2, 1, 1))
    nc = 2
    A0 = h.levels[0][0].operator.assemble()
    A1 = h.levels[0][1].operator.assemble()
    R, P = _dense_transfers(5)
    R, P = np.kron(R, np.eye(nc)), np.kron(P, np.eye(nc))
    w, r = 0.9, 2
    b = np.random.default_rng(4).random(5 * nc)

    def relax(A, x, rhs):
        for _ in range(r):
            x = x + w * (rhs - A @ x)
        return x

    x = relax(A0, np.zeros_like(b), b)
    e = relax(A1, np.zeros(A1.shape[0]), R @ (b - A0 @ x))
    x = relax(A0, x + P @ e, b)
    got = v_cycle(b.reshape(5, nc), h.levels[0], 0, r, w).ravel()
    assert np.allclose(got, x, rtol=1e-12)
    # two V-cycles composed as x + V(b - A x)
    x2 = x + v_cycle((b - A0 @ x).reshape(5, nc), h.levels[0], 0, r, w).ravel()
    pc = MGEPreconditioner(h, w, r, 2)
    assert np.allclose(pc(b), x2, rtol=1e-12)


def _fixture_pc(sets, weight=1.0, relax=2, vcycles=2, mesh=CartesianMesh(3, 3, 3)):
    xs = synth_upscatter_fixture(10, 5)
    depth = grid_depth(10, len(sets), min_set_size=min(len(s) for s in sets))
    return MGEPreconditioner(_hier(xs, sets, depth, mesh), weight, relax, vcycles)


def test_zero_maps_to_zero():
    pc = _fixture_pc([range(10)])
    assert not pc(np.zeros(270)).any()


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_preconditioner_is_linear(seed, alpha, beta):
    pc = _fixture_pc([range(10)])
    rng = np.random.default_rng(seed)
    u, v = rng.standard_normal((2, 270))
    lhs = pc(alpha * u + beta * v)
    rhs = alpha * pc(u) + beta * pc(v)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * (np.linalg.norm(u) + np.linalg.norm(v))


def test_set_order_and_immutability():
    sets = [range(0, 4), range(4, 7), range(7, 10)]
    pc = _fixture_pc(sets)
    before = [lv.materials[0].sigma_s.copy() for lvs in pc.hierarchy.levels for lv in lvs]
    u = np.random.default_rng(6).standard_normal((10, 27))
    a = pc.apply(u)
    b = pc.apply(u, order=[2, 0, 1])
    assert np.array_equal(a, b)
    after = [lv.materials[0].sigma_s for lvs in pc.hierarchy.levels for lv in lvs]
    assert all(np.array_equal(x, y) for x, y in zip(before, after))
    with pytest.raises(ValueError):
        after[0][0, 0] = 1.0


def test_sets_are_independent():
    # the preconditioner acts block-diagonally across sets
    pc = _fixture_pc([range(0, 5), range(5, 10)])
    u = np.zeros((10, 27))
    u[2] = 1.0
    out = pc.apply(u)
    assert not out[5:].any()
    assert out[:5].any()


REFLECT_CELL = CartesianMesh(1, 1, 1, boundary=("reflect",) * 6)


def test_richardson_infinite_medium_closed_form():
    c, w, x, b = 0.6, 1.4, 2.0, 0.5
    xs = MaterialCrossSections.from_arrays([1.3], [[c * 1.3]])
    op = _hier(xs, [range(1)], 1, mesh=REFLECT_CELL).levels[0][0].operator
    out = relax_richardson(np.array([[x]]), np.array([[b]]), op, w)
    assert out[0, 0] == pytest.approx((1 - w + w * c) * x + w * b, rel=1e-12)


def test_vcycle_two_groups_one_cell_closed_form():
    # in an infinite medium T M is diag(1 / sigma_t), so A = I - diag(1/st) S
    st = np.array([1.0, 1.5])
    S = np.array([[0.4, 0.1], [0.3, 0.9]])
    h = _hier(MaterialCrossSections.from_arrays(st, S), [range(2)], 2, mesh=REFLECT_CELL)
    A0 = np.eye(2) - S / st[:, None]
    st_c, S_c = st.mean(), S.sum() / 4
    A1 = np.array([[1 - S_c / st_c]])
    w, b = 0.8, np.array([1.0, 2.0])
    x = w * b
    x = x + w * (b - A0 @ x)
    e = w * (np.array([0.5, 0.5]) @ (b - A0 @ x))
    e = e + w * ((np.array([0.5, 0.5]) @ (b - A0 @ x)) - A1[0, 0] * e)
    x = x + np.array([e, e])
    for _ in range(2):
        x = x + w * (b - A0 @ x)
    got = v_cycle(b[:, None], h.levels[0], 0, 2, w)[:, 0]
    assert np.allclose(got, x, rtol=1e-10)
