import io

import numpy as np
import pytest

from matedcrt.crtmap import build_map
from matedcrt.errors import DomainError, SizeError, StructuralError
from matedcrt.harmonic import (cg_solve, default_max_iter, dense_solve, hitting_probabilities,
                               laplacian_apply, laplacian_matrix, solve_dirichlet,
                               write_field_csv)
from matedcrt.rng import stream
from matedcrt.walks import exit_vertices

from conftest import disk_path, plane_path, sphere_path, toy_map


def test_laplacian_examples():
    single = toy_map(2, [(0, 1, 1)])
    np.testing.assert_array_equal(laplacian_apply(single, np.array([1.0, 0.0])), [1, -1])
    double = toy_map(2, [(0, 1, 2)])
    np.testing.assert_array_equal(laplacian_apply(double, np.array([1.0, 0.0])), [2, -2])
    np.testing.assert_array_equal(laplacian_apply(double, np.ones(2)), [0, 0])


def test_laplacian_length_mismatch():
    with pytest.raises(DomainError, match="length"):
        laplacian_apply(toy_map(2, [(0, 1, 1)]), np.ones(3))


def test_laplacian_matches_matrix(disk_small):
    _, m = disk_small
    v = stream(0, "v").standard_normal(m.n_vertices)
    np.testing.assert_allclose(laplacian_apply(m, v), laplacian_matrix(m) @ v, atol=1e-12)
    np.testing.assert_allclose(laplacian_apply(m, np.ones(m.n_vertices)), 0, atol=1e-12)


def test_path_graph_midpoint():
    m = toy_map(3, [(0, 1, 1), (1, 2, 1)])
    f = solve_dirichlet(m, [0, 2], [0.0, 1.0])
    assert f.values[1] == pytest.approx(0.5, abs=1e-12)
    assert f.converged


def test_constant_boundary_gives_constant(disk_small):
    _, m = disk_small
    f = solve_dirichlet(m, m.boundary_order, np.full(m.boundary_order.size, 3.5))
    np.testing.assert_allclose(f.values, 3.5, atol=1e-10)


def test_boundary_order_does_not_matter(disk_small):
    _, m = disk_small
    b = m.boundary_order
    vals = np.linspace(0, 1, b.size)
    f1 = solve_dirichlet(m, b, vals).values
    perm = stream(1, "p").permutation(b.size)
    f2 = solve_dirichlet(m, b[perm], vals[perm]).values
    np.testing.assert_allclose(f1, f2, atol=1e-9)


def _maps_small(seed):
    return [build_map(disk_path(60 + 2 * seed, seed)),
            build_map(sphere_path(100 + seed, seed)),
            build_map(plane_path(60 + 2 * seed, seed))]


@pytest.mark.parametrize("seed", range(15))
def test_cg_matches_dense(seed):
    g = stream(seed, "dense")
    for m in _maps_small(seed):
        if m.boundary_order.size:
            b = m.boundary_order
        else:
            b = np.unique(g.integers(0, m.n_vertices, 8))
        vals = g.standard_normal(b.size)
        it = solve_dirichlet(m, b, vals, tol=1e-12)
        ref = dense_solve(m, b, vals)
        assert np.max(np.abs(it.values - ref)) <= 1e-8
        assert it.residual_inf_norm <= 1e-12


def test_mean_value_and_maximum_principle(disk_medium):
    _, m = disk_medium
    b = m.boundary_order
    vals = stream(2, "mv").random(b.size)
    f = solve_dirichlet(m, b, vals, tol=1e-10)
    u = f.values
    inner = ~f.boundary_mask
    w = m.weights
    mean = (w @ u) / m.degrees
    assert np.max(np.abs(u[inner] - mean[inner])) <= 1e-10
    assert vals.min() - 1e-10 <= u.min() and u.max() <= vals.max() + 1e-10


def test_linearity(disk_medium):
    _, m = disk_medium
    b = m.boundary_order
    g = stream(3, "lin")
    g1, g2 = g.standard_normal(b.size), g.standard_normal(b.size)
    tol = 1e-10
    s = lambda v: solve_dirichlet(m, b, v, tol=tol).values
    np.testing.assert_allclose(s(2 * g1 - 3 * g2), 2 * s(g1) - 3 * s(g2), atol=10 * tol * 5)


def test_complex_and_jacobi(disk_medium):
    _, m = disk_medium
    b = m.boundary_order
    z = np.exp(2j * np.pi * np.arange(b.size) / b.size)
    fz = solve_dirichlet(m, b, z).values
    fx = solve_dirichlet(m, b, z.real, jacobi=True).values
    fy = solve_dirichlet(m, b, z.imag).values
    np.testing.assert_allclose(fz.real, fx, atol=1e-9)
    np.testing.assert_allclose(fz.imag, fy, atol=1e-9)


def test_warm_start(disk_medium):
    _, m = disk_medium
    b = m.boundary_order
    vals = np.linspace(-1, 1, b.size)
    f = solve_dirichlet(m, b, vals)
    again = solve_dirichlet(m, b, vals, x0=f.values)
    assert again.iterations <= 1
    np.testing.assert_allclose(again.values, f.values, atol=1e-10)


def test_nonconvergence_is_flagged(disk_medium):
    _, m = disk_medium
    b = m.boundary_order
    f = solve_dirichlet(m, b, np.linspace(0, 1, b.size), max_iter=2)
    assert not f.converged and f.iterations == 2


def test_default_max_iter():
    assert default_max_iter(100) == 200
    assert default_max_iter(1) == 50


def test_errors():
    m = toy_map(4, [(0, 1, 1), (2, 3, 1)])
    with pytest.raises(DomainError):
        solve_dirichlet(m, [], [])
    with pytest.raises(DomainError):
        solve_dirichlet(m, [0], [1.0, 2.0])
    with pytest.raises(DomainError):
        solve_dirichlet(m, [0, 0], [1.0, 1.0])
    # vertices 2 and 3 have no path to the boundary vertex 0
    with pytest.raises(StructuralError):
        solve_dirichlet(m, [0], [1.0])


def test_dense_size_guard():
    m = build_map(plane_path(5000, 0, half=0.5))
    with pytest.raises(SizeError):
        dense_solve(m, [0], [0.0])


def test_subset_marks_outside_nan(disk_small):
    _, m = disk_small
    sub = np.zeros(m.n_vertices, dtype=bool)
    sub[:50] = True
    f = solve_dirichlet(m, [0, 49], [0.0, 1.0], subset=sub)
    assert np.all(np.isnan(f.values[50:]))
    assert np.all(np.isfinite(f.values[:50]))


def test_cg_solve_multiple_columns():
    A = laplacian_matrix(toy_map(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)]))
    A = A + np.eye(3)
    import scipy.sparse as sp
    A = sp.csr_matrix(A)
    b = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    x, res, _ = cg_solve(A, b, 1e-12, 100)
    np.testing.assert_allclose(A @ x, b, atol=1e-11)
    assert res <= 1e-12


def test_hitting_path_graph():
    m = toy_map(3, [(0, 1, 1), (1, 2, 1)])
    h = hitting_probabilities(m, 1, [0, 2])
    np.testing.assert_allclose(h.exit_mass, [0.5, 0.5])
    np.testing.assert_allclose(h.p, [0.5, 1.0])


def test_hitting_star():
    k = 7
    m = toy_map(k + 1, [(0, j, 1) for j in range(1, k + 1)])
    h = hitting_probabilities(m, 0, np.arange(1, k + 1))
    np.testing.assert_allclose(h.exit_mass, 1.0 / k)
    assert h.p[-1] == 1.0


def test_hitting_double_edge_weight():
    # root 0 joined to 1 by a double edge and to 2 by a single edge
    m = toy_map(3, [(0, 1, 2), (0, 2, 1)])
    h = hitting_probabilities(m, 0, [1, 2])
    np.testing.assert_allclose(h.exit_mass, [2 / 3, 1 / 3])


def test_hitting_root_on_boundary():
    m = toy_map(3, [(0, 1, 1), (1, 2, 1)])
    with pytest.raises(DomainError, match="boundary"):
        hitting_probabilities(m, 0, [0, 2])


def test_hitting_masses_sum_to_one(disk_medium):
    _, m = disk_medium
    root = m.n_vertices // 2
    if root in set(m.boundary_order.tolist()):
        root += 1
    h = hitting_probabilities(m, root, m.boundary_order)
    assert np.all(h.exit_mass >= 0)
    assert abs(h.exit_mass.sum() - 1) <= 1e-8
    assert np.all(np.diff(h.p) >= 0) and h.p[-1] == 1.0


def test_hitting_matches_monte_carlo(disk_small):
    _, m = disk_small
    b = m.boundary_order
    bset = set(b.tolist())
    root = next(v for v in range(m.n_vertices // 2, m.n_vertices) if v not in bset)
    h = hitting_probabilities(m, root, b)
    walks = 40000
    stop = np.zeros(m.n_vertices, dtype=np.uint8)
    stop[b] = 1
    verts, _ = exit_vertices(m, root, stop, walks, seed=1)
    rank = np.full(m.n_vertices, -1)
    rank[b] = np.arange(b.size)
    freq = np.bincount(rank[verts], minlength=b.size) / walks
    se = np.sqrt(h.exit_mass * (1 - h.exit_mass) / walks)
    assert np.all(np.abs(freq - h.exit_mass) <= 4.5 * se + 1e-12)


def test_field_csv(disk_small):
    _, m = disk_small
    f = solve_dirichlet(m, m.boundary_order, np.ones(m.boundary_order.size))
    buf = io.StringIO()
    write_field_csv(f, buf)
    rows = buf.getvalue().splitlines()
    assert rows[0] == "vertex,value" and len(rows) == m.n_vertices + 1
    assert float(rows[1].split(",")[1]) == pytest.approx(1.0)
