import json

import numpy as np
import pytest

from matedcrt.crtmap import degree_histogram
from matedcrt.diagnostics import (degree_tail_fit, diagnose, dirichlet_energy,
                                  energy_perturbation_check, max_face_diameter,
                                  mean_interior_degree, mean_value_residual,
                                  two_scale_consistency)
from matedcrt.errors import DomainError, StatisticsError
from matedcrt.harmonic import laplacian_matrix
from matedcrt.rng import stream
from matedcrt.tutte import TutteEmbedding, embed_disk

from conftest import disk_path, toy_map


def test_energy_examples():
    single = toy_map(2, [(0, 1, 1)])
    assert dirichlet_energy(single, np.zeros(2)) == 0.0
    assert dirichlet_energy(single, np.array([0.0, 1.0])) == 1.0
    double = toy_map(2, [(0, 1, 2)])
    assert dirichlet_energy(double, np.array([0.0, 1.0])) == 2.0
    assert dirichlet_energy(single, np.array([0, 1j])) == 1.0


def test_energy_is_quadratic_form(disk_small):
    _, m = disk_small
    v = stream(0, "energy").standard_normal(m.n_vertices)
    assert dirichlet_energy(m, v) == pytest.approx(float(v @ (laplacian_matrix(m) @ v)),
                                                   rel=1e-12)
    with pytest.raises(DomainError):
        dirichlet_energy(m, np.zeros(3))


def test_tail_fit_geometric():
    q = 0.6
    k = np.arange(60)
    hist = 1e7 * (1 - q) * q ** k
    fit = degree_tail_fit(hist, k_min=2, min_tail=30)
    assert fit.c1 == pytest.approx(-np.log(q), rel=1e-3)
    assert fit.r2 > 0.9999


def test_tail_fit_degenerate():
    with pytest.raises(StatisticsError):
        degree_tail_fit(np.zeros(10))
    with pytest.raises(StatisticsError):
        degree_tail_fit(np.array([0, 0, 0, 5, 5, 5]))


def test_tail_fit_on_map(disk_medium):
    _, m = disk_medium
    fit = degree_tail_fit(degree_histogram(m))
    assert fit.c1 > 0 and fit.k_range[0] == 5


def _triangle_embedding(scale=1.0):
    from matedcrt.brownian import Topology
    m = toy_map(4, [(0, 1, 1), (1, 2, 1), (0, 2, 1), (0, 3, 1), (1, 3, 1), (2, 3, 1)],
                boundary=[0, 1, 2])
    pos = scale * np.array([0, 1, 0.5 + np.sqrt(3) / 2 * 1j, 0.5 + np.sqrt(3) / 6 * 1j])
    return TutteEmbedding(pos, Topology.DISK, 3, (), (1 + 0j, 0j), np.ones(4, bool),
                          np.array([0, 1, 2]), np.array([1 / 3, 2 / 3, 1.0]), 0.0, 0, m)


def test_unit_triangle_diameter():
    e = _triangle_embedding()
    d, skipped = max_face_diameter(e)
    assert d == pytest.approx(1.0, abs=1e-12) and skipped == 0
    assert mean_value_residual(e) == pytest.approx(0.0, abs=1e-15)
    assert mean_interior_degree(e.cmap) == 3.0


def test_diameter_scaling(disk_embedding):
    d1, _ = max_face_diameter(disk_embedding)
    e = disk_embedding
    scaled = TutteEmbedding(3 * e.positions, e.topology, e.root, e.marks, e.normalization,
                            e.embedded_mask, e.boundary, e.p, e.residual, e.iterations, e.cmap)
    d3, _ = max_face_diameter(scaled)
    assert d3 == pytest.approx(3 * d1, rel=1e-12)
    assert 0 < d1 <= 2


def test_energy_minimality(disk_embedding):
    assert energy_perturbation_check(disk_embedding, trials=50) == 1.0
    assert mean_value_residual(disk_embedding) <= 1e-8


def test_two_scale_consistency():
    p = disk_path(2000, 3)
    assert two_scale_consistency(p, p.step, p.step) == 0.0
    d = two_scale_consistency(p, p.step, 4 * p.step, seed=3)
    assert 0 < d <= 1
    with pytest.raises(DomainError):
        two_scale_consistency(p, p.step, 3 * p.step)
    with pytest.raises(DomainError):
        two_scale_consistency(p, 0.5 * p.step, p.step)


def test_diagnose_map_and_embedding(disk_medium, disk_embedding):
    _, m = disk_medium
    rep = diagnose(m)
    assert rep.ok and rep.euler_characteristic == 2
    assert {"handshake", "euler", "triangular_faces", "no_self_loops"} <= set(rep.passes)
    full = diagnose(m, disk_embedding)
    assert full.ok and full.passes["energy_minimality"]
    data = json.loads(full.to_json())
    assert data["n"] == m.n_vertices and data["passes"]["mean_value_residual"] is True
    assert "PASS handshake" in full.to_text()


def test_diagnose_plane(plane_small):
    _, m = plane_small
    rep = diagnose(m)
    assert "euler" not in rep.passes and rep.ok
