import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpspec import core, pm, qsm
from oracles import parent_point_value, random_map

SQRT5 = math.sqrt(5.0)


def mode_field(k, N):
    grid = pm.TorusGrid(len(k), N)
    return pm.TorusField(grid, np.exp(1j * grid.nodes() @ np.asarray(k, float)))


def test_grid_geometry():
    g = pm.TorusGrid(2, 3)
    assert g.h == pytest.approx(math.pi / 3)
    assert g.shape == (6, 6) and g.size == 36
    nodes = g.nodes()
    assert nodes[0].tolist() == [0.0, 0.0]
    assert nodes[1].tolist() == pytest.approx([0.0, math.pi / 3])
    assert nodes[6].tolist() == pytest.approx([math.pi / 3, 0.0])
    with pytest.raises(ValueError):
        pm.TorusGrid(2, 0)


def test_field_size_check():
    with pytest.raises(ValueError):
        pm.TorusField(pm.TorusGrid(2, 2), np.zeros(15))


def test_inner_product_examples():
    N = 3
    one = pm.TorusField(pm.TorusGrid(2, N), np.ones(36))
    assert pm.discrete_inner_product(one, one) == pytest.approx(1.0)
    assert abs(pm.discrete_inner_product(mode_field((1, 2), N), mode_field((0, 2), N))) < 1e-14
    assert pm.discrete_inner_product(mode_field((1, 2), N), mode_field((1 + 2 * N, 2), N)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        pm.discrete_inner_product(one, pm.TorusField(pm.TorusGrid(2, 2), np.ones(16)))


def test_inner_product_matches_loop():
    rng = np.random.default_rng(3)
    grid = pm.TorusGrid(2, 2)
    F = pm.TorusField(grid, rng.normal(size=16) + 1j * rng.normal(size=16))
    G = pm.TorusField(grid, rng.normal(size=16) + 1j * rng.normal(size=16))
    want = sum(a * b.conjugate() for a, b in zip(F.values.ravel(), G.values.ravel())) / 16
    assert pm.discrete_inner_product(F, G) == pytest.approx(want, abs=1e-14)


def test_forward_dft_examples():
    N = 3
    c = pm.forward_dft(pm.TorusField(pm.TorusGrid(2, N), np.full(36, 2.5)))
    assert c.coeffs[0, 0] == pytest.approx(2.5)
    assert np.max(np.abs(c.coeffs.ravel()[1:])) < 1e-15
    c = pm.forward_dft(mode_field((-2, 1), N)).to_map()
    assert c[(-2, 1)] == pytest.approx(1.0)
    rest = np.abs(c.values)[np.any(c.indices != (-2, 1), axis=1)]
    assert rest.max() <= 1e-13


def test_forward_dft_sums_aliased_pair():
    N, k0 = 2, (1, -1)
    a, b = 0.7 - 0.2j, -1.1j
    f = core.QpCoefficientMap.from_dict(np.eye(2), {k0: a, (k0[0] + 2 * N, k0[1] - 2 * N): b})
    c = pm.forward_dft(pm.sample_on_collocation(f, N)).to_map()
    assert c[k0] == pytest.approx(a + b, abs=1e-14)


def test_forward_dft_matches_inner_product_definition():
    rng = np.random.default_rng(4)
    N = 2
    grid = pm.TorusGrid(2, N)
    F = pm.TorusField(grid, rng.normal(size=16) + 1j * rng.normal(size=16))
    c = pm.forward_dft(F).to_map()
    for k in core.index_box(2, N):
        assert c[k] == pytest.approx(pm.discrete_inner_product(F, mode_field(k, N)), abs=1e-14)


def test_layout_is_fft_order():
    c = pm.forward_dft(mode_field((-1, 2), 3))
    assert abs(c.coeffs[(-1) % 6, 2 % 6] - 1) < 1e-14


def test_collocation_points_examples():
    x = pm.collocation_points([[1.0, SQRT5]], 1)
    # node order is row-major, so (pi, pi) is the last of the 4 nodes
    assert x[-1, 0] == pytest.approx(math.pi * (1 + SQRT5))
    assert x[-1, 0] == pytest.approx(10.1664, abs=1e-4)
    assert x[0, 0] == 0.0
    np.testing.assert_allclose(pm.collocation_points([[1.0]], 2)[:, 0], [0, math.pi / 2, math.pi, 3 * math.pi / 2])


def test_sampling_examples(P5):
    N = 3
    f = core.QpCoefficientMap.single_mode(P5, (2, -1))
    np.testing.assert_allclose(pm.sample_on_collocation(f, N).values, mode_field((2, -1), N).values, atol=1e-14)
    const = core.QpCoefficientMap.from_dict(P5, {(0, 0): 4.0})
    np.testing.assert_allclose(pm.sample_on_collocation(const, N).values, 4.0)
    alias = core.QpCoefficientMap.single_mode(P5, (2 + 2 * N, -1))
    np.testing.assert_allclose(pm.sample_on_collocation(alias, N).values, mode_field((2, -1), N).values, atol=1e-12)


def test_sampling_matches_pointwise_parent_oracle(P5):
    rng = np.random.default_rng(5)
    f = random_map(rng, P5, 9, 7)
    F = pm.sample_on_collocation(f, 2)
    nodes = pm.TorusGrid(2, 2).nodes()
    want = [parent_point_value(f.as_dict(), y) for y in nodes]
    np.testing.assert_allclose(F.values.ravel(), want, atol=1e-12)


def test_sampling_dense_fallback_matches(P5):
    # two far-apart modes force the chunked evaluation path
    f = core.QpCoefficientMap.from_dict(P5, {(-400, 3): 1.0, (500, -700): 2j})
    F = pm.sample_on_collocation(f, 2)
    want = [parent_point_value(f.as_dict(), y) for y in pm.TorusGrid(2, 2).nodes()]
    np.testing.assert_allclose(F.values.ravel(), want, atol=1e-10)


def test_interpolate_examples(P5, problem):
    N = 3
    g = pm.interpolate(mode_field((1, -3), N), P5)
    assert g[(1, -3)] == pytest.approx(1.0)
    g = pm.interpolate(pm.sample_on_collocation(problem.potential, N), P5)
    assert len(g) == 36
    for k in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
        assert g[k] == pytest.approx(1.0, abs=1e-13)
    others = [abs(c) for k, c in g.as_dict().items() if k not in {(1, 0), (-1, 0), (0, 1), (0, -1)}]
    assert max(others) <= 1e-13
    out = core.QpCoefficientMap.single_mode(P5, (N, 0))
    g = pm.interpolate(pm.sample_on_collocation(out, N), P5)
    assert g[(-N, 0)] == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_interpolation_is_exact_at_collocation_nodes(seed, N):
    P = core.ProjectionMatrix([[1.0, SQRT5]])
    f = random_map(np.random.default_rng(seed), P, 12, 3 * N)
    g = pm.interpolate(pm.sample_on_collocation(f, N), P)
    # I_N f and f agree at every node y_j that carries x_j = P y_j
    gap = pm.sample_on_collocation(g, N).values - pm.sample_on_collocation(f, N).values
    assert np.max(np.abs(gap)) <= 1e-10 * core.parseval_l2_norm(f)


def test_physical_points_need_the_lift(P5):
    # at x_j = P y_j itself, exp(i (Pk) x_j) is not exp(i k.y_j) when P^T P is not the identity
    f = core.QpCoefficientMap.single_mode(P5, (0, 1))
    N = 2
    direct = core.evaluate(f, pm.collocation_points(P5, N))
    lifted = pm.sample_on_collocation(f, N).values.ravel()
    assert np.max(np.abs(direct - lifted)) > 0.1


def test_collocation_exact_in_physical_space_for_identity():
    P = core.ProjectionMatrix(np.eye(2))
    f = random_map(np.random.default_rng(9), P, 10, 6)
    N = 3
    g = pm.interpolate(pm.sample_on_collocation(f, N), P)
    x = pm.collocation_points(P, N)
    assert np.max(np.abs(core.evaluate(g, x) - core.evaluate(f, x))) <= 1e-10 * core.parseval_l2_norm(f)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_reproduction_inside_box(seed, N):
    P = core.ProjectionMatrix([[1.0, SQRT5]])
    rng = np.random.default_rng(seed)
    k = rng.integers(-N, N, size=(6, 2))
    f = core.QpCoefficientMap(P, k, rng.normal(size=6) + 1j * rng.normal(size=6))
    g = pm.interpolate(pm.sample_on_collocation(f, N), P)
    for kk, c in f.as_dict().items():
        assert abs(g[kk] - c) <= 1e-12 * core.parseval_l2_norm(f)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_aliasing_identity(seed, N):
    P = core.ProjectionMatrix([[1.0, SQRT5]])
    rng = np.random.default_rng(seed)
    k = rng.integers(-3 * N, 3 * N, size=(15, 2))
    f = core.QpCoefficientMap(P, k, rng.normal(size=15) + 1j * rng.normal(size=15))
    g = pm.interpolate(pm.sample_on_collocation(f, N), P)
    trunc, alias = pm.aliasing_decompose(f, N)
    # R_N from the direct fold sum, independently of aliasing_decompose
    folded = {}
    for kk, c in f.as_dict().items():
        if not all(-N <= v < N for v in kk):
            img = tuple(((v + N) % (2 * N)) - N for v in kk)
            folded[img] = folded.get(img, 0) + c
    assert alias.as_dict() == pytest.approx(folded)
    assert trunc.as_dict() == {kk: c for kk, c in f.as_dict().items() if all(-N <= v < N for v in kk)}
    diff = g - qsm.truncate(f, N).to_map() - alias
    assert np.max(np.abs(diff.values)) <= 1e-12 * max(1.0, core.parseval_l2_norm(f))


def test_aliasing_examples(P5):
    N = 2
    inside = core.QpCoefficientMap.from_dict(P5, {(1, -2): 1.0, (0, 0): 2.0})
    assert len(pm.aliasing_decompose(inside, N)[1]) == 0
    one = core.QpCoefficientMap.single_mode(P5, (1, -1 + 2 * N), 0.3j)
    assert pm.aliasing_decompose(one, N)[1].as_dict() == {(1, -1): 0.3j}
    pair = core.QpCoefficientMap.from_dict(P5, {(1, 0): 2.0, (1 + 2 * N, 0): -0.5})
    g = pm.interpolate(pm.sample_on_collocation(pair, N), P5)
    assert g[(1, 0)] == pytest.approx(1.5)


def test_periodic_reduction_round_trip():
    rng = np.random.default_rng(11)
    for n in (1, 2, 3):
        grid = pm.TorusGrid(n, 3)
        F = pm.TorusField(grid, rng.normal(size=grid.size) + 1j * rng.normal(size=grid.size))
        c = pm.forward_dft(F, np.eye(n))
        np.testing.assert_allclose(pm.inverse_dft(c).values, F.values, atol=1e-12)
        # classical normalized DFT on the same grid
        np.testing.assert_allclose(c.coeffs, np.fft.fftn(F.values) / grid.size, atol=1e-14)


def test_binary_field_dump(tmp_path):
    rng = np.random.default_rng(12)
    grid = pm.TorusGrid(2, 3)
    F = pm.TorusField(grid, rng.normal(size=36) + 1j * rng.normal(size=36))
    path = tmp_path / "field.bin"
    pm.dump_field(F, path)
    raw = path.read_bytes()
    assert len(raw) == 16 + 36 * 16
    assert np.frombuffer(raw[:16], "<i8").tolist() == [2, 3]
    assert np.frombuffer(raw[16:32], "<f8").tolist() == [F.values[0, 0].real, F.values[0, 0].imag]
    G = pm.load_field(path)
    assert G.grid == grid and np.array_equal(G.values, F.values)
    path.write_bytes(raw[:-16])
    with pytest.raises(ValueError):
        pm.load_field(path)
