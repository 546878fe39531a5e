import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from matedcrt.errors import BudgetError, DomainError, SizeError
from matedcrt.rng import stream
from matedcrt.walks import (EmbeddedCurve, brownian_reference, circle_ks, cmp_distance,
                            cmp_distance_loc, discrete_circle_ks, embed_walk,
                            exit_law_vs_harmonic_measure, exit_vertices, frechet_all_couplings,
                            frechet_exhaustive, poisson_cdf, poisson_uniformize, simplify,
                            simulate_walk, stop_at_radius, stop_mask_boundary)

from conftest import toy_map


def curve(points):
    points = np.asarray(points, dtype=complex)
    return EmbeddedCurve(points, np.arange(points.size, dtype=float))


# ----------------------------------------------------------------------------
# walks

def test_two_vertex_alternation():
    m = toy_map(2, [(0, 1, 1)])
    np.testing.assert_array_equal(simulate_walk(m, 0, stop=5), [0, 1, 0, 1, 0, 1])
    np.testing.assert_array_equal(simulate_walk(m, 1, stop=0), [1])


def test_double_edge_weight():
    m = toy_map(3, [(0, 1, 2), (0, 2, 1)])
    mask = np.array([0, 1, 1], dtype=np.uint8)
    walks = 30000
    verts, steps = exit_vertices(m, 0, mask, walks, seed=3)
    assert np.all(steps == 1)
    hits = int(np.sum(verts == 1))
    assert stats.binomtest(hits, walks, 2 / 3).pvalue > 1e-3


def test_walk_determinism(disk_small):
    _, m = disk_small
    a = simulate_walk(m, m.n_vertices // 2, stop=1000, seed=9)
    b = simulate_walk(m, m.n_vertices // 2, stop=1000, seed=9)
    c = simulate_walk(m, m.n_vertices // 2, stop=1000, seed=10)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_walk_steps_follow_edges(disk_small):
    _, m = disk_small
    w = simulate_walk(m, 5, stop=2000, seed=1)
    pairs = set(zip(m.edge_u.tolist(), m.edge_v.tolist()))
    assert all((min(a, b), max(a, b)) in pairs for a, b in zip(w[:-1], w[1:]))


def test_exit_vertices_thread_independent(disk_small):
    _, m = disk_small
    mask = stop_mask_boundary(m)
    start = next(v for v in range(m.n_vertices // 2, m.n_vertices) if not mask[v])
    v1, s1 = exit_vertices(m, start, mask, 1000, seed=2, threads=1)
    v4, s4 = exit_vertices(m, start, mask, 1000, seed=2, threads=4)
    np.testing.assert_array_equal(v1, v4)
    np.testing.assert_array_equal(s1, s4)
    assert np.all(mask[v1] == 1)


def test_boundary_stop(disk_small):
    _, m = disk_small
    mask = stop_mask_boundary(m)
    start = next(v for v in range(m.n_vertices // 2, m.n_vertices) if not mask[v])
    w = simulate_walk(m, start, seed=4)
    assert mask[w[-1]] and not mask[w[:-1]].any()


def test_budget_and_truncation(disk_small):
    _, m = disk_small
    mask = np.zeros(m.n_vertices, dtype=np.uint8)
    with pytest.raises(BudgetError):
        simulate_walk(m, 0, stop=mask, max_steps=50)
    w = simulate_walk(m, 0, stop=mask, max_steps=50, truncate=True)
    assert w.size == 51


def test_walk_argument_errors(disk_small):
    _, m = disk_small
    with pytest.raises(DomainError):
        simulate_walk(m, -1)
    with pytest.raises(DomainError):
        simulate_walk(m, 0, stop="nowhere")
    with pytest.raises(DomainError):
        simulate_walk(m, 0, stop=-3)


def test_exit_radius(disk_embedding):
    e = disk_embedding
    w = simulate_walk(e.cmap, e.root, stop=("exit_radius", e, 0.5), seed=6)
    r = np.abs(e.positions[w])
    assert r[-1] >= 0.5 and np.all(r[:-1] < 0.5)


def test_stationary_distribution_proportional_to_degree(disk_small):
    _, m = disk_small
    w = simulate_walk(m, 0, stop=400000, seed=8)
    freq = np.bincount(w[1:], minlength=m.n_vertices) / (w.size - 1)
    pi = m.degrees / m.degrees.sum()
    assert 0.5 * np.abs(freq - pi).sum() < 0.03


def test_embed_walk(disk_embedding, sphere_small):
    e = disk_embedding
    w = simulate_walk(e.cmap, e.root, stop=10, seed=0)
    c = embed_walk(w, e)
    assert c.kind == "Walk" and len(c) == 11
    assert c.points[0] == e.positions[e.root]
    from matedcrt.tutte import embed_sphere
    p, m = sphere_small
    es = embed_sphere(m, p, seed=1)
    outside = int(np.flatnonzero(~es.embedded_mask)[0])
    with pytest.raises(DomainError):
        embed_walk([outside], es)


def test_exit_law_result(disk_embedding):
    e = disk_embedding
    res = exit_law_vs_harmonic_measure(e.cmap, e, e.root, 2000, seed=1)
    assert 0 <= res.ks_statistic <= 1 and 0 <= res.ks_vertex <= 1
    np.testing.assert_allclose(np.abs(res.samples), 1, atol=1e-12)
    again = exit_law_vs_harmonic_measure(e.cmap, e, e.root, 2000, seed=1)
    assert again.ks_statistic == res.ks_statistic
    with pytest.raises(DomainError):
        exit_law_vs_harmonic_measure(e.cmap, e, int(e.boundary[0]), 10)


# ----------------------------------------------------------------------------
# curves and distances

def test_curve_validation():
    with pytest.raises(DomainError):
        EmbeddedCurve([0, 1], [1.0, 0.0])
    with pytest.raises(DomainError):
        EmbeddedCurve([0, 1], [0.0])
    with pytest.raises(DomainError):
        EmbeddedCurve([], [])


def test_curve_csv_round_trip():
    c = EmbeddedCurve([0.1 + 0.2j, 1 / 3 - 1j, 2.0], [0.0, 0.5, 0.5])
    buf = io.StringIO()
    c.write_csv(buf)
    buf.seek(0)
    back = EmbeddedCurve.read_csv(buf)
    np.testing.assert_array_equal(back.points, c.points)
    np.testing.assert_array_equal(back.times, c.times)


def test_frechet_examples():
    assert cmp_distance(curve([0, 1]), curve([0, 1])) == 0.0
    assert cmp_distance(curve([0]), curve([3 + 4j])) == 5.0
    assert cmp_distance(curve([0, 1, 2]), curve([0, 2])) == 1.0
    assert cmp_distance(curve([0, 1]), curve([1, 0])) == 1.0


def test_frechet_duplication_invariance():
    g = stream(0, "dup")
    p = g.standard_normal(12) + 1j * g.standard_normal(12)
    q = g.standard_normal(9) + 1j * g.standard_normal(9)
    base = cmp_distance(curve(p), curve(q))
    assert cmp_distance(curve(np.repeat(p, 2)), curve(q)) == base
    assert cmp_distance(curve(p), curve(np.insert(q, 4, q[4]))) == base


def test_frechet_rigid_motion():
    g = stream(1, "rigid")
    p = g.standard_normal(20) + 1j * g.standard_normal(20)
    q = g.standard_normal(15) + 1j * g.standard_normal(15)
    rot = np.exp(0.7j)
    d0 = cmp_distance(curve(p), curve(q))
    d1 = cmp_distance(curve(rot * p + 3 - 2j), curve(rot * q + 3 - 2j))
    assert d1 == pytest.approx(d0, rel=1e-12)


points = st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                  min_size=1, max_size=6)


@settings(max_examples=200, deadline=None)
@given(points, points)
def test_frechet_matches_exhaustive(p, q):
    d = cmp_distance(curve(p), curve(q))
    assert d == frechet_exhaustive(p, q) == frechet_all_couplings(p, q)


def test_frechet_guards():
    with pytest.raises(SizeError):
        cmp_distance(curve(np.zeros(100)), curve(np.zeros(100)), guard=1000)
    with pytest.raises(SizeError):
        frechet_exhaustive(np.zeros(10), np.zeros(10))


def test_simplify_bound():
    g = stream(2, "simp")
    pts = np.cumsum(0.01 * (g.standard_normal(3000) + 1j * g.standard_normal(3000)))
    c = curve(pts)
    for delta in (0.01, 0.05, 0.2):
        s = simplify(c, delta)
        assert len(s) < len(c)
        assert s.points[0] == c.points[0] and s.points[-1] == c.points[-1]
        assert cmp_distance(c, s) < delta


def test_stop_at_radius():
    c = EmbeddedCurve([0, 0.5, 2.0], [0.0, 1.0, 2.0])
    s, exited = stop_at_radius(c, 1.0)
    assert exited and len(s) == 3
    assert s.points[-1] == pytest.approx(1.0) and s.times[-1] == pytest.approx(4 / 3)
    same, exited = stop_at_radius(c, 5.0)
    assert not exited and same is c
    first, exited = stop_at_radius(EmbeddedCurve([3.0, 0.0], [0.0, 1.0]), 1.0)
    assert exited and len(first) == 1


def test_cmp_distance_loc_identical():
    g = stream(3, "loc")
    c = curve(np.cumsum(0.1 * (g.standard_normal(200) + 1j * g.standard_normal(200))))
    assert cmp_distance_loc(c, c, np.linspace(1, 5, 17)) == 0.0


def test_cmp_distance_loc_grid_refinement():
    g = stream(4, "loc")
    c1 = curve(np.cumsum(0.1 * (g.standard_normal(300) + 1j * g.standard_normal(300))))
    c2 = curve(np.cumsum(0.1 * (g.standard_normal(300) + 1j * g.standard_normal(300))))
    coarse = cmp_distance_loc(c1, c2, np.linspace(1, 6, 41))
    fine = cmp_distance_loc(c1, c2, np.linspace(1, 6, 321))
    # the integrand is at most exp(-r); trapezoid overshoot on it is O(h^2)
    assert 0 < fine <= math.exp(-1) * (1 + 1e-3)
    assert abs(coarse - fine) < 0.02
    with pytest.raises(DomainError):
        cmp_distance_loc(c1, c2, [0.5])


def test_brownian_reference_exits():
    c = brownian_reference(0.2 + 0.1j, 1e-4, seed=1)
    assert c.kind == "Brownian"
    assert abs(abs(c.points[-1]) - 1) < 1e-12
    assert np.all(np.abs(c.points[:-1]) < 1)
    assert c.points[0] == 0.2 + 0.1j


# ----------------------------------------------------------------------------
# circular laws

def test_circle_ks_uniform():
    u = stream(5, "ks").random(20000)
    assert circle_ks(u) < 0.015
    assert circle_ks(np.full(100, 0.3)) == pytest.approx(0.5, abs=0.01)


def test_circle_ks_rotation_invariant():
    u = stream(6, "ks").random(500) ** 2
    assert circle_ks(u) == pytest.approx(circle_ks(u + 0.37), abs=1e-12)


def test_poisson_at_center_is_uniform():
    theta = stream(7, "poisson").random(1000)
    w = np.exp(2j * np.pi * theta)
    np.testing.assert_allclose(poisson_uniformize(w, 0j), theta, atol=1e-12)
    np.testing.assert_allclose(poisson_cdf(theta, 0j), theta, atol=1e-12)


def test_poisson_uniformizes_harmonic_measure():
    z = 0.5 - 0.3j
    t = np.exp(2j * np.pi * stream(8, "poisson").random(20000))
    # pull uniform points back through the automorphism sending z to 0
    w = (t + z) / (1 + np.conj(z) * t)
    assert circle_ks(poisson_uniformize(w, z)) < 0.015
    assert circle_ks(np.angle(w) / (2 * np.pi)) > 0.1


def test_discrete_circle_ks():
    p = np.array([0.25, 0.5, 0.75, 1.0])
    assert discrete_circle_ks([1, 1, 1, 1], p) == 0.0
    assert discrete_circle_ks([4, 0, 0, 0], p) > 0.3
