"""Checkable functionals of maps and embeddings, and the report that collects them."""
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .brownian import Topology
from .crtmap import build_map, degree_histogram, rotation_system_and_faces
from .errors import DomainError, StatisticsError
from .rng import stream
from .tutte import embed_disk, prokhorov_proxy, vertex_measure


def dirichlet_energy(cmap, f):
    """Sum over edges, counted with multiplicity, of ``|f(x) - f(y)|^2``."""
    f = np.asarray(f)
    if f.shape != (cmap.n_vertices,):
        raise DomainError(f"f has shape {f.shape}, expected ({cmap.n_vertices},)")
    d = f[cmap.edge_u] - f[cmap.edge_v]
    return float(np.sum(cmap.edge_mult * (d.real ** 2 + d.imag ** 2 if np.iscomplexobj(d)
                                          else d ** 2)))


@dataclass(frozen=True)
class TailFit:
    c0: float
    c1: float
    r2: float
    k_range: tuple


def degree_tail_fit(histogram, k_min=5, min_tail=30):
    """Least-squares fit of ``log P[deg > k] ~ log c0 - c1 k``.

    Uses ``k`` from ``k_min`` up to the largest ``k`` with at least
    ``min_tail`` vertices of degree ``> k``.

    Raises
    ------
    StatisticsError
        If fewer than three values of ``k`` qualify.
    """
    h = np.asarray(histogram, dtype=float)
    total = h.sum()
    if total <= 0:
        raise StatisticsError("empty histogram")
    # above[k] = number of vertices with degree > k
    above = total - np.cumsum(h)
    ks = np.arange(h.size)
    ok = (ks >= k_min) & (above >= min_tail)
    if ok.sum() < 3:
        raise StatisticsError(f"only {int(ok.sum())} tail points with >= {min_tail} samples "
                              f"beyond k >= {k_min}")
    k_max = int(ks[ok].max())
    sel = (ks >= k_min) & (ks <= k_max)
    x = ks[sel].astype(float)
    y = np.log(above[sel] / total)
    slope, intercept = np.polyfit(x, y, 1)
    fit = intercept + slope * x
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return TailFit(math.exp(intercept), -float(slope), r2, (k_min, k_max))


def max_face_diameter(embedding, planar=None):
    """Largest Euclidean diameter of an embedded face, excluding the outer face.

    Faces with a vertex that is not embedded are skipped. Returns
    ``(diameter, skipped_count)``.
    """
    cmap = embedding.cmap
    if planar is None:
        planar = rotation_system_and_faces(cmap)
    ptr, verts = planar.face_vertices
    sizes = np.diff(ptr)
    pos = embedding.positions
    emb = embedding.embedded_mask
    faces = np.arange(planar.n_faces)
    ok_face = np.ones(planar.n_faces, dtype=bool)
    bad = ~emb[verts]
    if bad.any():
        ok_face[np.searchsorted(ptr, np.flatnonzero(bad), side="right") - 1] = False
    ok_face[planar.outer_face] = True
    skipped = int(np.sum(~ok_face))
    ok_face[planar.outer_face] = False
    best = 0.0
    tri = ok_face & (sizes == 3)
    if tri.any():
        v = verts[ptr[faces[tri]][:, None] + np.arange(3)]
        z = pos[v]
        d = np.maximum.reduce([np.abs(z[:, 0] - z[:, 1]), np.abs(z[:, 1] - z[:, 2]),
                               np.abs(z[:, 0] - z[:, 2])])
        best = float(d.max())
    for f in faces[ok_face & (sizes != 3)]:
        z = pos[verts[ptr[f]:ptr[f + 1]]]
        best = max(best, float(np.max(np.abs(z[:, None] - z[None, :]))))
    return best, skipped


def mean_interior_degree(cmap):
    deg = cmap.degrees
    if cmap.boundary_order.size:
        mask = np.ones(cmap.n_vertices, dtype=bool)
        mask[cmap.boundary_order] = False
        return float(deg[mask].mean())
    return float(deg.mean())


def mean_value_residual(embedding):
    """Largest deviation of an interior embedded position from its neighbour mean."""
    cmap = embedding.cmap
    inner = embedding.interior_mask
    pos = np.where(embedding.embedded_mask, embedding.positions, 0)
    w = cmap.weights[inner]
    mean = (w @ pos) / np.asarray(w.sum(axis=1)).ravel()
    return float(np.max(np.abs(pos[inner] - mean))) if inner.any() else 0.0


def energy_perturbation_check(embedding, trials=100, size=1e-3, seed=0):
    """Fraction of random single-vertex perturbations of the embedding that raise
    its Dirichlet energy (1.0 for a harmonic embedding)."""
    cmap = embedding.cmap
    idx = np.flatnonzero(embedding.interior_mask)
    if idx.size == 0:
        return 1.0
    pos = np.where(embedding.embedded_mask, embedding.positions, 0)
    base = dirichlet_energy(cmap, pos)
    g = stream(seed, "energy-perturbation")
    up = 0
    for _ in range(trials):
        v = int(idx[g.integers(idx.size)])
        delta = size * np.exp(2j * np.pi * g.random())
        moved = pos.copy()
        moved[v] += delta
        if dirichlet_energy(cmap, moved) > base:
            up += 1
    return up / trials


def two_scale_consistency(path, eps_fine, eps_coarse, seed=0, bins=512, tol=1e-10,
                          fine_embedding=None):
    """Prokhorov proxy between the vertex measures of two disk embeddings built
    from the same path at steps ``eps_fine`` and ``eps_coarse``.

    Both embeddings use the same seed, hence the same root time. A
    precomputed fine embedding (same path, seed and step) can be passed in.
    """
    if path.topology is not Topology.DISK:
        raise DomainError("two-scale consistency is defined for disk paths")
    k_fine = int(round(eps_fine / path.step))
    ratio = eps_coarse / eps_fine
    k = int(round(ratio))
    if k_fine < 1 or abs(k_fine * path.step - eps_fine) > 1e-9 * eps_fine:
        raise DomainError("eps_fine must be a multiple of the path step")
    if abs(ratio - k) > 1e-9 or k not in (1, 2, 4, 8):
        raise DomainError(f"eps_coarse / eps_fine must be 1, 2, 4 or 8, got {ratio}")
    if k == 1:
        return 0.0
    e1 = fine_embedding
    if e1 is None:
        e1 = embed_disk(build_map(path, coarsen=k_fine), path, seed, tol)
    m2 = build_map(path, coarsen=k_fine * k)
    e2 = embed_disk(m2, path, seed, tol)
    return prokhorov_proxy(*vertex_measure(e1), *vertex_measure(e2), bins=bins)


@dataclass
class DiagnosticsReport:
    """Summary values of one map/embedding; ``passes`` maps check names to booleans."""

    n: int
    edges: int
    boundary_size: int
    euler_characteristic: int
    mean_interior_degree: float
    tail_fit: dict | None = None
    energies: dict = field(default_factory=dict)
    max_face_diameter: float | None = None
    prokhorov_proxy: dict = field(default_factory=dict)
    passes: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(self.passes.values())

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_text(self):
        lines = [f"n = {self.n}", f"edges = {self.edges}", f"boundary = {self.boundary_size}",
                 f"euler = {self.euler_characteristic}",
                 f"mean interior degree = {self.mean_interior_degree:.4f}"]
        if self.tail_fit:
            lines.append("tail fit: c0 = {c0:.4g}, c1 = {c1:.4g}, r2 = {r2:.4f}".format(
                **self.tail_fit))
        for k, v in sorted(self.energies.items()):
            lines.append(f"energy[{k}] = {v:.6g}")
        if self.max_face_diameter is not None:
            lines.append(f"max face diameter = {self.max_face_diameter:.4g}")
        for k, v in sorted(self.passes.items()):
            lines.append(f"{'PASS' if v else 'FAIL'} {k}")
        return "\n".join(lines)


def diagnose(cmap, embedding=None, seed=0):
    """Run the structural checks (and embedding checks when given) on one map."""
    planar = rotation_system_and_faces(cmap)
    rep = DiagnosticsReport(cmap.n_vertices, cmap.n_edges, int(cmap.boundary_order.size),
                            planar.euler_characteristic, mean_interior_degree(cmap))
    deg = cmap.degrees
    rep.passes["handshake"] = int(deg.sum()) == 2 * cmap.n_edges
    if cmap.topology is not Topology.PLANE:
        rep.passes["euler"] = planar.euler_characteristic == 2
        sizes = planar.face_sizes.copy()
        sizes[planar.outer_face] = 3
        rep.passes["triangular_faces"] = bool(np.all(sizes == 3))
    rep.passes["no_self_loops"] = bool(np.all(cmap.edge_u != cmap.edge_v))
    try:
        fit = degree_tail_fit(degree_histogram(cmap))
        rep.tail_fit = asdict(fit)
    except StatisticsError:
        pass
    if embedding is not None:
        pos = np.where(embedding.embedded_mask, embedding.positions, 0)
        rep.energies["tutte"] = dirichlet_energy(cmap, pos)
        rep.max_face_diameter = max_face_diameter(embedding, planar)[0]
        rep.passes["mean_value_residual"] = mean_value_residual(embedding) <= 1e-8
        rep.passes["energy_minimality"] = energy_perturbation_check(embedding, 100,
                                                                    seed=seed) == 1.0
    return rep
