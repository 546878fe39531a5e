"""The compiled and pure-Python backends agree bit for bit."""
import numpy as np
import pytest

from matedcrt import kernels
from matedcrt.brownian import covariance_factor
from matedcrt.crtmap import rotation_system_and_faces
from matedcrt.rng import stream

from conftest import SQRT2, disk_path
from matedcrt.crtmap import build_map

IMPLS = kernels.implementations()
needs_both = pytest.mark.skipif(len(IMPLS) < 2, reason="compiled extension not built")


def test_backend_name():
    assert kernels.BACKEND in ("compiled", "python")


@needs_both
@pytest.mark.parametrize("seed", range(5))
def test_visible_pairs_agree(seed):
    m = stream(seed, "t").standard_normal(2000).cumsum()
    a = IMPLS["python"].visible_pairs(m)
    b = IMPLS["compiled"].visible_pairs(m)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)


@needs_both
def test_visible_pairs_ties_agree():
    m = np.array([0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 2.0, 0.0])
    for x, y in zip(IMPLS["python"].visible_pairs(m), IMPLS["compiled"].visible_pairs(m)):
        np.testing.assert_array_equal(x, y)


@needs_both
@pytest.mark.parametrize("seed", range(3))
def test_bridge_rejection_agree(seed):
    n = 200
    A = covariance_factor(SQRT2)
    h = 1.0 / n
    y = np.linalg.solve(A, [1.0, 0.0])
    z = stream(seed, "z").standard_normal(1 << 16)
    outs = []
    for impl in (IMPLS["python"], IMPLS["compiled"]):
        ol, orr = np.empty(n + 1), np.empty(n + 1)
        res = impl.bridge_rejection(z, 0, n, h, A[0, 0], A[1, 0], A[1, 1], y[0], y[1],
                                    1.0, 0.0, 1e-8 * h ** 0.5, ol, orr, 10**6)
        outs.append((res, ol.copy(), orr.copy()))
    (r1, l1, q1), (r2, l2, q2) = outs
    assert r1 == r2
    if r1[0]:
        np.testing.assert_array_equal(l1, l2)
        np.testing.assert_array_equal(q1, q2)


@needs_both
def test_trace_faces_agree():
    planar = rotation_system_and_faces(build_map(disk_path(500, 2)))
    phi = np.ascontiguousarray(planar.phi, dtype=np.int64)
    a = IMPLS["python"].trace_faces(phi)
    b = IMPLS["compiled"].trace_faces(phi)
    for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
        np.testing.assert_array_equal(x, y)


@needs_both
def test_walk_batch_agree():
    cmap = build_map(disk_path(500, 4))
    indptr, indices = cmap.walk_csr
    stop = np.zeros(cmap.n_vertices, dtype=np.uint8)
    stop[cmap.boundary_order] = 1
    u = stream(1, "u").random(50000)
    res = []
    for impl in (IMPLS["python"], IMPLS["compiled"]):
        cur = np.full(16, cmap.n_vertices // 2, dtype=np.int64)
        steps = np.zeros(16, dtype=np.int64)
        w, upos = impl.walk_batch(indptr, indices, stop, 10**6, u, 0, cur, steps, 0,
                                  np.empty(0, dtype=np.int64))
        res.append((w, upos, cur.copy(), steps.copy()))
    assert res[0][:2] == res[1][:2]
    np.testing.assert_array_equal(res[0][2], res[1][2])
    np.testing.assert_array_equal(res[0][3], res[1][3])


@needs_both
def test_walk_batch_path_recording_agree():
    cmap = build_map(disk_path(200, 4))
    indptr, indices = cmap.walk_csr
    stop = np.zeros(cmap.n_vertices, dtype=np.uint8)
    u = stream(2, "u").random(1000)
    paths = []
    for impl in (IMPLS["python"], IMPLS["compiled"]):
        cur = np.array([3], dtype=np.int64)
        steps = np.zeros(1, dtype=np.int64)
        path = np.zeros(1001, dtype=np.int64)
        impl.walk_batch(indptr, indices, stop, 1000, u, 0, cur, steps, 0, path)
        paths.append(path)
    np.testing.assert_array_equal(*paths)


@needs_both
@pytest.mark.parametrize("seed", range(5))
def test_discrete_frechet_agree(seed):
    g = stream(seed, "f")
    p = g.standard_normal((int(g.integers(1, 300)), 2))
    q = g.standard_normal((int(g.integers(1, 300)), 2))
    assert IMPLS["python"].discrete_frechet(p, q) == IMPLS["compiled"].discrete_frechet(p, q)


@needs_both
def test_simplify_indices_agree():
    g = stream(0, "s")
    xy = g.standard_normal((5000, 2)).cumsum(axis=0) * 0.01
    x, y = np.ascontiguousarray(xy[:, 0]), np.ascontiguousarray(xy[:, 1])
    np.testing.assert_array_equal(IMPLS["python"].simplify_indices(x, y, 0.05),
                                  IMPLS["compiled"].simplify_indices(x, y, 0.05))
