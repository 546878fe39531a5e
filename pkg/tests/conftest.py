import math

import numpy as np
import pytest

from matedcrt.brownian import disk_path_with_n, sample_plane, sample_sphere_excursion
from matedcrt.crtmap import build_map

SQRT2 = math.sqrt(2.0)
SQRT83 = math.sqrt(8.0 / 3.0)


def disk_path(n, seed, gamma=SQRT2):
    return disk_path_with_n(gamma, n, seed, max_attempts=10**9)


def sphere_path(n, seed, gamma=SQRT83):
    return sample_sphere_excursion(gamma, 1.0 / n, seed, max_attempts=10**9)


def plane_path(n, seed, gamma=SQRT2, half=0.5):
    return sample_plane(gamma, 1.0 / n, (-half, half), seed)


@pytest.fixture(scope="session")
def disk_small():
    p = disk_path(300, 11)
    return p, build_map(p)


@pytest.fixture(scope="session")
def disk_medium():
    p = disk_path(3000, 5)
    return p, build_map(p)


@pytest.fixture(scope="session")
def disk_embedding(disk_medium):
    from matedcrt.tutte import embed_disk
    p, m = disk_medium
    return embed_disk(m, p, seed=5)


@pytest.fixture(scope="session")
def sphere_small():
    p = sphere_path(400, 3)
    return p, build_map(p)


@pytest.fixture(scope="session")
def plane_small():
    p = plane_path(400, 7)
    return p, build_map(p)


def toy_map(n, edges, boundary=(), topology="disk"):
    """Map from an explicit edge list ``[(u, v, mult), ...]`` (sides are nominal)."""
    from matedcrt.brownian import Topology
    from matedcrt.crtmap import MatedCrtMap
    e = sorted((min(u, v), max(u, v), k) for u, v, k in edges)
    u = np.array([a for a, _, _ in e], dtype=np.int64)
    v = np.array([b for _, b, _ in e], dtype=np.int64)
    mult = np.array([k for _, _, k in e], dtype=np.uint8)
    side = np.where(mult == 2, 2, np.where(v == u + 1, 3, 0)).astype(np.uint8)
    return MatedCrtMap(n, np.arange(1, n + 1, dtype=float), u, v, mult, side,
                       np.asarray(boundary, dtype=np.int64), Topology(topology), 1.0)
