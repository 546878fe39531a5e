"""Tutte (harmonic) embeddings of mated-CRT maps.

Disk maps: boundary vertex ``y_j`` goes to ``exp(2 pi i p(y_j))`` where
``p(y_j)`` is the probability that a walk from the root first hits the
boundary at ``y_1, ..., y_j``; interior vertices are placed by harmonic
extension.

Plane and sphere maps are cut down to a window of times first. The embedded
set is the component ``V`` of the root in the window minus its inner
boundary, together with the boundary vertices adjacent to it. ``V`` is then
embedded like a disk and normalised by a complex affine map pinning two
marked vertices to 0 and 1.
"""
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .brownian import Topology
from .crtmap import rotation_system_and_faces
from .errors import DomainError, HorizonError, InvariantViolation, StructuralError
from .harmonic import DEFAULT_TOL, hitting_probabilities, solve_dirichlet
from .rng import stream
from .walks import EmbeddedCurve

MARK_RETRIES = 100


@dataclass(frozen=True, eq=False)
class TutteEmbedding:
    """Planar positions of the embedded vertices of a map.

    ``positions`` is NaN off ``embedded_mask``. ``boundary`` lists the
    boundary cycle in the order used for ``p`` (so ``p[-1] == 1``), and
    ``normalization = (a, b)`` is the affine map ``z -> a z + b`` applied
    after the unit-disk embedding (identity for disks).
    """

    positions: np.ndarray
    topology: Topology
    root: int
    marks: tuple
    normalization: tuple
    embedded_mask: np.ndarray
    boundary: np.ndarray
    p: np.ndarray
    residual: float
    iterations: int
    cmap: object = field(repr=False)
    root_time: float = float("nan")

    @property
    def n_embedded(self):
        return int(self.embedded_mask.sum())

    @property
    def boundary_mask(self):
        m = np.zeros(self.embedded_mask.size, dtype=bool)
        m[self.boundary] = True
        return m

    @property
    def interior_mask(self):
        return self.embedded_mask & ~self.boundary_mask

    @property
    def disk_positions(self):
        """Positions before the affine normalisation."""
        a, b = self.normalization
        return (self.positions - b) / a


def _uniform_time(seed, name, index, t0, t1):
    return t0 + (t1 - t0) * float(stream(seed, name, index).random())


def _place_boundary(p):
    # p == 1 maps to exactly 1
    return np.exp(2j * np.pi * np.mod(p, 1.0))


def embed_disk(cmap, path=None, seed=0, tol=DEFAULT_TOL, jacobi=True, root=None):
    """Tutte embedding of a disk map centred at a uniformly chosen cell.

    Parameters
    ----------
    cmap : MatedCrtMap
        Map with disk topology.
    path : BrownianPath, optional
        Only used to read the total time; defaults to the map's time span.
    seed : int
        Seeds the root time; up to 100 draws are made until the root is an
        interior vertex.
    root : int, optional
        Use this interior vertex instead of a random one.

    Returns
    -------
    TutteEmbedding
    """
    if cmap.topology is not Topology.DISK:
        raise DomainError(f"embed_disk needs a disk map, got {cmap.topology.value}")
    bnd = cmap.boundary_order
    bmask = np.zeros(cmap.n_vertices, dtype=bool)
    bmask[bnd] = True
    t0 = cmap.start_time
    t1 = t0 + path.total_time if path is not None else float(cmap.vertex_times[-1])
    t_root = float("nan")
    if root is None:
        for k in range(MARK_RETRIES):
            t_root = _uniform_time(seed, "tutte-root", k, t0, t1)
            v = cmap.vertex_at_time(t_root)
            if not bmask[v]:
                root = v
                break
        else:
            raise StructuralError(f"root landed on the boundary in {MARK_RETRIES} draws")
    elif bmask[root]:
        raise DomainError(f"root {root} is a boundary vertex")
    hit = hitting_probabilities(cmap, root, bnd, tol, jacobi=jacobi)
    field_ = solve_dirichlet(cmap, bnd, _place_boundary(hit.p), tol, jacobi=jacobi)
    emb = np.ones(cmap.n_vertices, dtype=bool)
    return TutteEmbedding(field_.values, Topology.DISK, int(root), (), (1.0 + 0j, 0j), emb,
                          bnd, hit.p, max(field_.residual_inf_norm,
                                        hit.potential.residual_inf_norm),
                          field_.iterations, cmap, t_root)


# ----------------------------------------------------------------------------
# windows of plane and sphere maps

@dataclass(frozen=True, eq=False)
class WindowRegion:
    """``inner`` is the component of the root in the window minus its inner boundary;
    ``boundary`` the inner-boundary vertices adjacent to it; ``cut`` the whole inner boundary."""

    window: np.ndarray
    cut: np.ndarray
    inner: np.ndarray
    boundary: np.ndarray

    @property
    def embedded(self):
        return self.inner | self.boundary


def plane_cut(cmap, lo, hi):
    """Vertices ``lo..hi`` adjacent in the whole-line map to a vertex outside ``lo..hi``.

    For coordinate ``C`` and cell infima ``m``, vertex ``x`` has a neighbour
    after ``hi`` iff ``m[x] <= min(m[x+1..hi])`` and one before ``lo`` iff
    ``m[x] <= min(m[lo..x-1])``; Brownian motion reaches every lower level on
    both sides, so these hold regardless of the simulated window.
    """
    mask = np.zeros(cmap.n_vertices, dtype=bool)
    for m in cmap.cell_minima:
        seg = m[lo:hi + 1]
        after = np.empty_like(seg)
        after[-1] = np.inf
        after[:-1] = np.minimum.accumulate(seg[::-1])[::-1][1:]
        before = np.empty_like(seg)
        before[0] = np.inf
        before[1:] = np.minimum.accumulate(seg)[:-1]
        mask[lo:hi + 1] |= (seg <= after) | (seg <= before)
    return mask


def adjacency_cut(cmap, window):
    """Window vertices with a map neighbour outside the window."""
    u, v = cmap.edge_u, cmap.edge_v
    cross = window[u] != window[v]
    mask = np.zeros(cmap.n_vertices, dtype=bool)
    mask[u[cross & window[u]]] = True
    mask[v[cross & window[v]]] = True
    return mask


def window_region(cmap, window, cut, root):
    """Component of ``root`` in ``window \\ cut`` and its attached cut vertices."""
    n = cmap.n_vertices
    inner = np.zeros(n, dtype=bool)
    bnd = np.zeros(n, dtype=bool)
    if window[root] and not cut[root]:
        free = window & ~cut
        idx = np.flatnonzero(free)
        pos = np.full(n, -1, dtype=np.int64)
        pos[idx] = np.arange(idx.size)
        sub = cmap.weights[idx][:, idx]
        reached = breadth_first_order(sub, int(pos[root]), directed=False,
                                      return_predecessors=False)
        inner[idx[reached]] = True
        nb = cmap.weights[inner].indices
        bnd[nb] = True
        bnd &= cut
    return WindowRegion(window, cut, inner, bnd)


def region_faces(planar, inner):
    """Faces of the region spanned by ``inner``: every face except those reachable
    from the unbounded face without crossing a face that touches ``inner``."""
    tail, face = planar.tail, planar.face_of_dart
    touch = np.zeros(planar.n_faces, dtype=bool)
    touch[face[inner[tail]]] = True
    if touch[planar.outer_face]:
        raise StructuralError("the unbounded face touches the region interior")
    f1 = face[0::2]
    f2 = face[1::2]
    keep = ~touch[f1] & ~touch[f2]
    nf = planar.n_faces
    g = sp.csr_matrix((np.ones(int(keep.sum())), (f1[keep], f2[keep])), shape=(nf, nf))
    _, labels = connected_components(g, directed=False)
    outside = (labels == labels[planar.outer_face]) & ~touch
    return ~outside


def region_boundary_walk(planar, inner, boundary, inside=None):
    """Order the boundary of the region made of the faces in ``inside``.

    ``inside`` defaults to :func:`region_faces`. Walks the darts with an
    inside face on one side and an outside face on the other and returns the
    closed walk as a vertex sequence, in the same rotational sense as the
    time order of a disk map's boundary. Vertices visited more than once
    (pinch points) appear more than once.
    """
    tail, phi, face = planar.tail, planar.phi, planar.face_of_dart
    if inside is None:
        inside = region_faces(planar, inner)
    rev = np.arange(tail.size) ^ 1
    is_bd = inside[face] & ~inside[face[rev]]
    darts = np.flatnonzero(is_bd)
    if darts.size == 0:
        raise StructuralError("region has no boundary")
    cyc = []
    d = int(darts[0])
    seen = np.zeros(tail.size, dtype=bool)
    while not seen[d]:
        seen[d] = True
        cyc.append(d)
        c = int(phi[d])
        while inside[face[c ^ 1]]:
            c = int(phi[c ^ 1])
        d = c
    if len(cyc) != darts.size or not np.all(np.isin(np.flatnonzero(boundary), tail[cyc])):
        raise InvariantViolation("region boundary is not a single closed walk through "
                                 "all boundary vertices")
    # following phi along the inside faces runs the disk boundary in time order
    return tail[cyc].copy()


def anchored_order(walk):
    """Rotate a closed walk to end at its chronologically last vertex and keep
    the last visit of each repeated vertex."""
    walk = np.asarray(walk)
    last = int(walk.max())
    k = int(np.flatnonzero(walk == last)[0])
    rot = np.concatenate([walk[k + 1:], walk[:k + 1]])
    _, first_from_end = np.unique(rot[::-1], return_index=True)
    keep = np.sort(rot.size - 1 - first_from_end)
    return rot[keep]


def _embed_region(cmap, region, walk_root, root, marks, tol, jacobi):
    planar = rotation_system_and_faces(cmap)
    walk = region_boundary_walk(planar, region.inner, region.boundary)
    order = anchored_order(walk)
    hit = hitting_probabilities(cmap, walk_root, order, tol, jacobi=jacobi)
    emb = region.embedded
    field_ = solve_dirichlet(cmap, order, _place_boundary(hit.p), tol, jacobi=jacobi,
                             subset=emb)
    potential = field_.values
    a = 1.0 / (potential[marks[0]] - potential[root])
    if abs(a) * field_.residual_inf_norm > tol:
        # the affine map scales residuals by |a|; tighten so the final ones meet tol
        field_ = solve_dirichlet(cmap, order, _place_boundary(hit.p), tol / abs(a),
                                 jacobi=jacobi, subset=emb, x0=np.where(emb, potential, 0))
        potential = field_.values
        a = 1.0 / (potential[marks[0]] - potential[root])
    b = -a * potential[root]
    pos = np.where(emb, a * potential + b, np.nan + 0j)
    pos[root] = 0.0
    pos[marks[0]] = 1.0
    res = max(abs(a) * field_.residual_inf_norm, hit.potential.residual_inf_norm)
    return pos, order, hit.p, (complex(a), complex(b)), res, field_.iterations, emb


def embed_plane(cmap, path=None, horizon=1.0, seed=0, tol=DEFAULT_TOL, jacobi=True):
    """Tutte embedding of the window ``[-horizon, horizon]`` of a plane map.

    The root is the cell ending at time ``step * theta`` and the mark the cell
    ending at ``step * floor(1 / step) + step * theta``; these go to 0 and 1.

    Raises
    ------
    HorizonError
        If some cell ending in ``[0, 1 + step * theta]`` is not embedded.
    """
    if cmap.topology is not Topology.PLANE:
        raise DomainError(f"embed_plane needs a plane map, got {cmap.topology.value}")
    eps = cmap.source_step
    times = cmap.vertex_times
    theta = path.index_shift if path is not None else float(np.mod(times[0] / eps, 1.0))
    if times[0] > -horizon + eps or times[-1] < horizon - eps:
        raise DomainError(f"map window [{times[0]:.4g}, {times[-1]:.4g}] does not cover "
                          f"[-{horizon}, {horizon}]")
    window = (times >= -horizon) & (times <= horizon)
    lo, hi = np.flatnonzero(window)[[0, -1]]
    cut = plane_cut(cmap, lo, hi)
    root = int(np.argmin(np.abs(times - eps * theta)))
    mark = int(np.argmin(np.abs(times - (eps * math.floor(1.0 / eps) + eps * theta))))
    region = window_region(cmap, window, cut, root)
    need = (times >= -0.5 * eps) & (times <= 1.0 + eps * theta + 0.5 * eps)
    if not region.embedded[need].all() or not region.inner[root]:
        raise HorizonError(f"cells in [0, 1 + step*theta] are not all embedded at horizon "
                           f"{horizon}; increase the horizon")
    pos, order, p, norm, res, its, emb = _embed_region(cmap, region, root, root, (mark,),
                                                       tol, jacobi)
    return TutteEmbedding(pos, Topology.PLANE, root, (mark,), norm, emb, order, p, res, its,
                          cmap, eps * theta)


def embed_sphere(cmap, path=None, delta=0.05, seed=0, tol=DEFAULT_TOL, jacobi=True):
    """Tutte embedding of the window ``[delta, 1 - delta]`` of a sphere map.

    Two cells drawn from independent uniform times go to 0 and 1; the hitting
    probabilities are those of the walk started from the first cell. Up to 100
    pairs of times are drawn until both cells are embedded.
    """
    if cmap.topology is not Topology.SPHERE:
        raise DomainError(f"embed_sphere needs a sphere map, got {cmap.topology.value}")
    if not (0.0 < delta < 0.25):
        raise DomainError(f"delta must lie in (0, 1/4), got {delta}")
    times = cmap.vertex_times
    window = (times >= delta) & (times <= 1.0 - delta)
    if window[0]:
        raise DomainError("delta is smaller than the step; the first cell lies in the window")
    cut = adjacency_cut(cmap, window)
    for k in range(MARK_RETRIES):
        g = stream(seed, "sphere-marks", k)
        t, t2 = g.random(2)
        x = cmap.vertex_at_time(float(t))
        x2 = cmap.vertex_at_time(float(t2))
        if x == x2:
            continue
        region = window_region(cmap, window, cut, x)
        if region.inner[x] and region.embedded[x2]:
            break
    else:
        raise StructuralError(f"no admissible pair of marks in {MARK_RETRIES} draws")
    pos, order, p, norm, res, its, emb = _embed_region(cmap, region, 0, x, (x2,), tol, jacobi)
    return TutteEmbedding(pos, Topology.SPHERE, x, (x2, 0), norm, emb, order, p, res, its,
                          cmap, float(t))


# ----------------------------------------------------------------------------
# derived objects

def vertex_measure(embedding):
    """Embedded positions with mass ``1 / n_embedded`` each: ``(points, masses)``."""
    pts = embedding.positions[embedding.embedded_mask]
    return pts, np.full(pts.size, 1.0 / pts.size)


def space_filling_polyline(embedding):
    """Embedded vertices in time order, time-stamped by ``index / n``."""
    idx = np.flatnonzero(embedding.embedded_mask)
    n = embedding.cmap.n_vertices
    return EmbeddedCurve(embedding.positions[idx], idx / n, "SpaceFilling")


def max_jump(curve):
    """Largest distance between consecutive points of a curve."""
    return float(np.max(np.abs(np.diff(curve.points)))) if curve.points.size > 1 else 0.0


def prokhorov_proxy(points1, masses1, points2, masses2, bins=512):
    """Upper-bound style proxy for the Prokhorov distance between two planar measures.

    Both measures are binned on a common ``bins x bins`` grid. For ``r`` on
    ``{0} U {cell * 2^k}``, ``D(r)`` is the largest excess
    ``mu1(B) - mu2(B^r)`` (and symmetrically) over dyadic boxes ``B``, with
    ``B^r`` the box grown by ``r`` on every side. Returns
    ``min_r max(r, D(r))``, which lies in ``[0, 1]`` for probability measures
    and is 0 for equal ones.
    """
    p1 = np.asarray(points1)
    p2 = np.asarray(points2)
    allp = np.concatenate([p1, p2])
    x0, x1 = allp.real.min(), allp.real.max()
    y0, y1 = allp.imag.min(), allp.imag.max()
    side = max(x1 - x0, y1 - y0, 1e-12)
    cell = side / bins

    def hist(p, w):
        i = np.minimum(((p.real - x0) / cell).astype(np.int64), bins - 1)
        j = np.minimum(((p.imag - y0) / cell).astype(np.int64), bins - 1)
        h = np.zeros((bins + 1, bins + 1))
        np.add.at(h, (i + 1, j + 1), w)
        return h.cumsum(0).cumsum(1)

    c1 = hist(p1, np.asarray(masses1, dtype=float))
    c2 = hist(p2, np.asarray(masses2, dtype=float))

    def box_mass(c, i0, i1, j0, j1):
        i0 = np.clip(i0, 0, bins)
        i1 = np.clip(i1, 0, bins)
        j0 = np.clip(j0, 0, bins)
        j1 = np.clip(j1, 0, bins)
        return c[i1[:, None], j1[None, :]] - c[i0[:, None], j1[None, :]] \
            - c[i1[:, None], j0[None, :]] + c[i0[:, None], j0[None, :]]

    radii = [0.0] + [cell * 2.0 ** k for k in range(int(math.log2(bins)) + 2)]
    best = 1.0
    for r in radii:
        g = int(math.ceil(r / cell - 1e-12))
        worst = 0.0
        level = 0
        while (1 << level) <= bins:
            w = bins >> level
            lo = np.arange(0, bins, w)
            hi = lo + w
            a1 = box_mass(c1, lo, hi, lo, hi)
            a2 = box_mass(c2, lo, hi, lo, hi)
            g1 = box_mass(c1, lo - g, hi + g, lo - g, hi + g)
            g2 = box_mass(c2, lo - g, hi + g, lo - g, hi + g)
            worst = max(worst, float(np.max(a1 - g2)), float(np.max(a2 - g1)))
            level += 1
        best = min(best, max(r, worst))
        if r >= best:
            break
    return best


# ----------------------------------------------------------------------------
# export

def write_embedding_csv(embedding, fh):
    fh.write("vertex,time,x,y,boundary_flag,embedded_flag\n")
    bm = embedding.boundary_mask
    for v, (t, z, b, e) in enumerate(zip(embedding.cmap.vertex_times, embedding.positions, bm,
                                         embedding.embedded_mask)):
        fh.write(f"{v},{float(t)!r},{float(z.real)!r},{float(z.imag)!r},{int(b)},{int(e)}\n")


def write_svg(embedding, fh, size=800, edges=True, color_by_time=True):
    """SVG drawing: one ``<circle>`` per embedded vertex, radius growing with log-degree."""
    cmap = embedding.cmap
    emb = embedding.embedded_mask
    pos = embedding.positions
    pts = pos[emb]
    x0, x1 = pts.real.min(), pts.real.max()
    y0, y1 = pts.imag.min(), pts.imag.max()
    span = max(x1 - x0, y1 - y0, 1e-12)
    pad = 10.0
    scale = (size - 2 * pad) / span

    def xy(z):
        return pad + (z.real - x0) * scale, size - pad - (z.imag - y0) * scale

    fh.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">\n')
    fh.write(f'<rect width="{size}" height="{size}" fill="white"/>\n')
    if edges:
        fh.write('<g stroke="#777" stroke-width="0.2" fill="none">\n')
        for u, v in zip(cmap.edge_u, cmap.edge_v):
            if emb[u] and emb[v]:
                ax, ay = xy(pos[u])
                bx, by = xy(pos[v])
                fh.write(f'<line x1="{ax:.2f}" y1="{ay:.2f}" x2="{bx:.2f}" y2="{by:.2f}"/>\n')
        fh.write("</g>\n")
    idx = np.flatnonzero(emb)
    deg = cmap.degrees
    n = cmap.n_vertices
    fh.write('<g stroke="none">\n')
    for v in idx:
        cx, cy = xy(pos[v])
        r = 0.3 + 0.25 * math.log(max(int(deg[v]), 1))
        if color_by_time:
            hue = int(300 * v / max(n - 1, 1))
            fill = f"hsl({hue},80%,45%)"
        else:
            fill = "black"
        fh.write(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{r:.2f}" fill="{fill}"/>\n')
    fh.write("</g>\n</svg>\n")
