"""Mated-CRT maps: cells of a Brownian path joined by running-infimum adjacency.

Vertex ``i`` is the cell ``[x_i - step, x_i]`` where ``x_i`` is the right end
of the ``i``-th grid interval (or of the ``i``-th block of ``coarsen``
intervals). Two cells ``i < j`` are joined through coordinate ``C`` when

    max(inf_{cell i} C, inf_{cell j} C) <= inf_{[x_i, x_j - step]} C.

Consecutive cells always satisfy this. Non-consecutive cells satisfying it
for both coordinates get a double edge.

The drawing used for the rotation system puts the vertices on a horizontal
line in time order, L-edges as arcs above the line and R-edges as arcs below.
"""
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import kernels
from .brownian import BrownianPath, Topology, _CODE_TOPOLOGY, _TOPOLOGY_CODE
from .errors import DomainError, InvariantViolation, SizeError

SIDE_L = 0
SIDE_R = 1
SIDE_BOTH = 2
SIDE_CONSECUTIVE = 3
SIDE_NAMES = ("L", "R", "Both", "Consecutive")

BRUTE_FORCE_LIMIT = 5000


@dataclass(frozen=True, eq=False)
class MatedCrtMap:
    """Immutable mated-CRT multigraph.

    Edges are stored once each as ``(u, v, mult, side)`` with ``u < v``, sorted
    lexicographically. ``boundary_order`` lists the boundary vertices of a
    disk map in time order (empty for other topologies).
    """

    n_vertices: int
    vertex_times: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_mult: np.ndarray
    edge_side: np.ndarray
    boundary_order: np.ndarray
    topology: Topology
    source_step: float
    cell_minima: tuple = field(default=None, repr=False)

    @property
    def n_edges(self):
        """Number of edges counted with multiplicity."""
        return int(self.edge_mult.sum())

    @property
    def start_time(self):
        return float(self.vertex_times[0]) - self.source_step

    @cached_property
    def weights(self):
        """Symmetric CSR matrix of edge multiplicities."""
        n = self.n_vertices
        rows = np.concatenate([self.edge_u, self.edge_v])
        cols = np.concatenate([self.edge_v, self.edge_u])
        vals = np.concatenate([self.edge_mult, self.edge_mult]).astype(np.float64)
        w = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        w.sort_indices()
        return w

    @cached_property
    def degrees(self):
        """Degree of each vertex, counting multiplicity."""
        deg = np.zeros(self.n_vertices, dtype=np.int64)
        np.add.at(deg, self.edge_u, self.edge_mult)
        np.add.at(deg, self.edge_v, self.edge_mult)
        return deg

    @cached_property
    def walk_csr(self):
        """``(indptr, indices)`` with each neighbour repeated ``mult`` times."""
        w = self.weights
        reps = w.data.astype(np.int64)
        indices = np.repeat(w.indices.astype(np.int64), reps)
        csum = np.concatenate([[0], np.cumsum(reps)])
        return csum[w.indptr].astype(np.int64), indices

    def adjacency(self, v):
        """Ordered ``[(neighbour, mult, side_name), ...]`` of vertex ``v``."""
        m = (self.edge_u == v) | (self.edge_v == v)
        out = []
        for u, w, k, s in zip(self.edge_u[m], self.edge_v[m], self.edge_mult[m],
                              self.edge_side[m]):
            out.append((int(w if u == v else u), int(k), SIDE_NAMES[s]))
        out.sort()
        return out

    def edge_multiset(self):
        """``{(u, v): (mult, side_name)}`` for comparisons."""
        return {(int(u), int(v)): (int(k), SIDE_NAMES[s]) for u, v, k, s in
                zip(self.edge_u, self.edge_v, self.edge_mult, self.edge_side)}

    def vertex_at_time(self, t):
        """Index of the cell ``[x - step, x]`` containing time ``t`` (closed on the right)."""
        i = int(np.searchsorted(self.vertex_times, t, side="left"))
        return min(max(i, 0), self.n_vertices - 1)


def cell_minima(path, coarsen=1, minima="bridge"):
    """Per-cell infimum of ``L`` and ``R``, plus the grid values at cell right ends.

    Returns ``(mL, mR, gL, gR, times)``; ``gL[i]`` is ``L`` at ``x_i``.
    """
    if coarsen < 1:
        raise DomainError(f"coarsen must be >= 1, got {coarsen}")
    muL, muR = path.interval_minima(minima)
    n_int = muL.size
    starts = np.arange(0, n_int, coarsen)
    mL = np.minimum.reduceat(muL, starts)
    mR = np.minimum.reduceat(muR, starts)
    ends = np.minimum(starts + coarsen, n_int)
    times = path.times[ends]
    return mL, mR, path.L[ends], path.R[ends], times


def build_map(path, coarsen=1, minima="bridge"):
    """Build the mated-CRT map of ``path`` in ``O(n + #edges)``.

    Parameters
    ----------
    path : BrownianPath
    coarsen : int
        Number of grid intervals per cell. ``coarsen=k`` gives the map with
        step ``k * path.step`` driven by the same path; a short final block
        becomes a truncated last cell.
    minima : {"bridge", "grid"}
        How the infimum over a grid interval is resolved; see
        :meth:`BrownianPath.interval_minima`.

    Returns
    -------
    MatedCrtMap
    """
    mL, mR, _, _, times = cell_minima(path, coarsen, minima)
    n = mL.size
    li, lj = kernels.visible_pairs(mL)
    ri, rj = kernels.visible_pairs(mR)
    cons = np.arange(n - 1, dtype=np.int64)
    # merge by pair key; L-pairs and R-pairs are each duplicate-free
    key_l = li * n + lj
    key_r = ri * n + rj
    both = np.intersect1d(key_l, key_r, assume_unique=True)
    only_l = np.setdiff1d(key_l, both, assume_unique=True)
    only_r = np.setdiff1d(key_r, both, assume_unique=True)
    keys = np.concatenate([cons * n + cons + 1, only_l, only_r, both])
    sides = np.concatenate([
        np.full(n - 1, SIDE_CONSECUTIVE, np.uint8),
        np.full(only_l.size, SIDE_L, np.uint8),
        np.full(only_r.size, SIDE_R, np.uint8),
        np.full(both.size, SIDE_BOTH, np.uint8)])
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    sides = sides[order]
    mult = np.where(sides == SIDE_BOTH, 2, 1).astype(np.uint8)
    bnd = _boundary_from_minima(mL, path.L[-1]) if path.topology is Topology.DISK \
        else np.empty(0, np.int64)
    return MatedCrtMap(n, times, keys // n, keys % n, mult, sides, bnd, path.topology,
                       path.step * coarsen, cell_minima=(mL, mR))


def brute_force_adjacency(path, coarsen=1, minima="bridge"):
    """Evaluate the adjacency condition on every pair directly; ``O(n^2)``.

    Returns ``{(i, j): (mult, side_name)}`` for ``i < j``.

    Raises
    ------
    SizeError
        If the map would have more than 5000 vertices.
    """
    mL, mR, gL, gR, _ = cell_minima(path, coarsen, minima)
    n = mL.size
    if n > BRUTE_FORCE_LIMIT:
        raise SizeError(f"brute force limited to n <= {BRUTE_FORCE_LIMIT}, got {n}")
    out = {}
    for i in range(n - 1):
        hits = []
        for m, g in ((mL, gL), (mR, gR)):
            # inf over [x_i, x_j - step]: the point x_i when j = i + 1, else the
            # cells strictly between i and j (their infima include x_i)
            gap = np.empty(n - i - 1)
            gap[0] = g[i]
            if n - i - 2 > 0:
                gap[1:] = np.minimum.accumulate(m[i + 1:n - 1])
            hits.append(np.maximum(m[i], m[i + 1:]) <= gap)
        for off in np.flatnonzero(hits[0] | hits[1]):
            j = i + 1 + int(off)
            if j == i + 1:
                out[(i, j)] = (1, "Consecutive")
            elif hits[0][off] and hits[1][off]:
                out[(i, j)] = (2, "Both")
            else:
                out[(i, j)] = (1, "L" if hits[0][off] else "R")
    return out


def _boundary_from_minima(mL, l_end):
    n = mL.size
    future = np.empty(n)
    future[-1] = l_end
    if n > 1:
        future[:-1] = np.minimum.accumulate(mL[::-1])[::-1][1:]
    mask = mL <= future
    idx = np.flatnonzero(mask)
    # ordering by the level at which the running future-infimum reaches each
    # cell; the threshold is nondecreasing in time, so ties keep time order
    return idx[np.argsort(future[idx], kind="stable")].astype(np.int64)


def boundary_vertices(path, coarsen=1, minima="bridge"):
    """Boundary vertices of a disk map, in boundary order.

    A cell ``[x - step, x]`` is on the boundary when its ``L``-infimum is at most
    the infimum of ``L`` over ``[x, area]``.
    """
    if path.topology is not Topology.DISK:
        raise DomainError(f"boundary vertices are defined for disk paths, got {path.topology.value}")
    mL, *_ = cell_minima(path, coarsen, minima)
    return _boundary_from_minima(mL, path.L[-1])


def degree_histogram(cmap):
    """``counts[k]`` = number of vertices of degree ``k`` (with multiplicity)."""
    return np.bincount(cmap.degrees)


# ----------------------------------------------------------------------------
# rotation system and faces

@dataclass(frozen=True, eq=False)
class PlanarStructure:
    """Combinatorial embedding of a map.

    Darts ``2e`` and ``2e + 1`` are the two orientations of unit edge ``e``
    (double edges are split into an upper and a lower copy). ``sigma`` gives
    the next dart counterclockwise around its tail, ``phi = sigma o reverse``
    walks faces.
    """

    tail: np.ndarray
    head: np.ndarray
    sigma: np.ndarray
    phi: np.ndarray
    face_of_dart: np.ndarray
    n_faces: int
    outer_face: int
    n_vertices: int

    @property
    def n_edges(self):
        return self.tail.size // 2

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    @cached_property
    def face_sizes(self):
        return np.bincount(self.face_of_dart, minlength=self.n_faces)

    @cached_property
    def face_vertices(self):
        """``(ptr, verts)``: tails of the darts of face ``f`` are ``verts[ptr[f]:ptr[f+1]]``."""
        order = np.argsort(self.face_of_dart, kind="stable")
        ptr = np.zeros(self.n_faces + 1, dtype=np.int64)
        np.cumsum(self.face_sizes, out=ptr[1:])
        return ptr, self.tail[order]

    def face_cycle(self, f):
        """Darts of face ``f`` in traversal order."""
        start = int(np.flatnonzero(self.face_of_dart == f)[0])
        out = [start]
        d = int(self.phi[start])
        while d != start:
            out.append(d)
            d = int(self.phi[d])
        return out

    def interior_faces(self):
        return np.array([f for f in range(self.n_faces) if f != self.outer_face], dtype=np.int64)

    def check_triangulation(self, outer_sizes=None):
        """Raise :class:`InvariantViolation` unless the map is a planar triangulation.

        ``outer_sizes`` optionally restricts the allowed outer-face degree.
        """
        if np.any(self.tail == self.head):
            raise InvariantViolation("self-loop present")
        if self.euler_characteristic != 2:
            raise InvariantViolation(f"V - E + F = {self.euler_characteristic}, expected 2")
        sizes = self.face_sizes.copy()
        outer = sizes[self.outer_face]
        sizes[self.outer_face] = 3
        bad = np.flatnonzero(sizes != 3)
        if bad.size:
            raise InvariantViolation(f"{bad.size} interior faces are not triangles "
                                     f"(sizes {sorted(set(sizes[bad].tolist()))[:5]})")
        if outer_sizes is not None and outer not in outer_sizes:
            raise InvariantViolation(f"outer face has degree {outer}")


def unit_edges(cmap):
    """Split edges into unit edges: ``(u, v, geometric_side)`` with Both -> L and R copies."""
    both = cmap.edge_side == SIDE_BOTH
    u = np.concatenate([cmap.edge_u, cmap.edge_u[both]])
    v = np.concatenate([cmap.edge_v, cmap.edge_v[both]])
    side = cmap.edge_side.copy()
    side[both] = SIDE_L
    side = np.concatenate([side, np.full(int(both.sum()), SIDE_R, np.uint8)])
    return u, v, side


def rotation_system_and_faces(cmap):
    """Rotation system of the line drawing and its faces.

    Counterclockwise around a vertex: the segment to the successor, upper arcs
    to the right from short to long, upper arcs to the left from long to short,
    the segment to the predecessor, lower arcs to the left from short to long,
    lower arcs to the right from long to short.

    Returns
    -------
    PlanarStructure
    """
    n = cmap.n_vertices
    eu, ev, eside = unit_edges(cmap)
    ne = eu.size
    tail = np.empty(2 * ne, dtype=np.int64)
    head = np.empty(2 * ne, dtype=np.int64)
    tail[0::2] = eu
    tail[1::2] = ev
    head[0::2] = ev
    head[1::2] = eu
    side = np.repeat(eside, 2)
    right = head > tail
    dist = np.abs(head - tail)
    sec = np.empty(2 * ne, dtype=np.int64)
    off = np.zeros(2 * ne, dtype=np.int64)
    c = side == SIDE_CONSECUTIVE
    up = side == SIDE_L
    lo = side == SIDE_R
    sec[c & right] = 0
    sec[c & ~right] = 3
    sec[up & right] = 1
    sec[up & ~right] = 2
    sec[lo & ~right] = 4
    sec[lo & right] = 5
    off[up & right] = dist[up & right]
    off[lo & ~right] = dist[lo & ~right]
    far = (up & ~right) | (lo & right)
    off[far] = (n + 1) - dist[far]
    key = sec * (n + 2) + off
    order = np.lexsort((key, tail))
    t_sorted = tail[order]
    starts = np.searchsorted(t_sorted, np.arange(n), side="left")
    ends = np.searchsorted(t_sorted, np.arange(n), side="right")
    nxt = np.roll(order, -1)
    last = ends[ends > starts] - 1
    nxt[last] = order[starts[ends > starts]]
    sigma = np.empty(2 * ne, dtype=np.int64)
    sigma[order] = nxt
    phi = sigma[np.arange(2 * ne) ^ 1]
    face, nf = kernels.trace_faces(phi)
    # outer face: the corner at vertex 0 after its last upper (or segment) dart
    k0 = order[starts[0]:ends[0]]
    upper = k0[sec[k0] <= 1]
    u_last = upper[-1] if upper.size else k0[-1]
    outer = int(face[u_last ^ 1])
    return PlanarStructure(tail, head, sigma, phi, face, int(nf), outer, n)


# ----------------------------------------------------------------------------
# persistence

MAP_MAGIC = b"MCRTMAP0"
MAP_VERSION = 1
_MAP_HEADER = struct.Struct("<8sIQBdd")
_RECORD = np.dtype([("nbr", "<u4"), ("mult", "u1"), ("side", "u1")])


def write_map(cmap, fh):
    """Write ``cmap`` in the little-endian CSR binary format."""
    n = cmap.n_vertices
    fh.write(_MAP_HEADER.pack(MAP_MAGIC, MAP_VERSION, n, _TOPOLOGY_CODE[cmap.topology],
                              cmap.source_step, float(cmap.vertex_times[0])))
    src = np.concatenate([cmap.edge_u, cmap.edge_v])
    dst = np.concatenate([cmap.edge_v, cmap.edge_u])
    mult = np.concatenate([cmap.edge_mult, cmap.edge_mult])
    side = np.concatenate([cmap.edge_side, cmap.edge_side])
    order = np.lexsort((dst, src))
    offsets = np.zeros(n + 1, dtype="<u8")
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    rec = np.empty(src.size, dtype=_RECORD)
    rec["nbr"] = dst[order]
    rec["mult"] = mult[order]
    rec["side"] = side[order]
    fh.write(offsets.tobytes())
    fh.write(rec.tobytes())
    fh.write(struct.pack("<Q", cmap.boundary_order.size))
    fh.write(cmap.boundary_order.astype("<u4").tobytes())


def read_map(fh):
    magic, version, n, topo, step, t_first = _MAP_HEADER.unpack(fh.read(_MAP_HEADER.size))
    if magic != MAP_MAGIC:
        raise DomainError(f"not a map file (magic {magic!r})")
    if version != MAP_VERSION:
        raise DomainError(f"unsupported map file version {version}")
    offsets = np.frombuffer(fh.read(8 * (n + 1)), dtype="<u8").astype(np.int64)
    rec = np.frombuffer(fh.read(_RECORD.itemsize * int(offsets[-1])), dtype=_RECORD)
    (nb,) = struct.unpack("<Q", fh.read(8))
    bnd = np.frombuffer(fh.read(4 * nb), dtype="<u4").astype(np.int64)
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(offsets))
    dst = rec["nbr"].astype(np.int64)
    keep = src < dst
    times = t_first + step * np.arange(n)
    return MatedCrtMap(int(n), times, src[keep], dst[keep], rec["mult"][keep].copy(),
                       rec["side"][keep].copy(), bnd, _CODE_TOPOLOGY[topo], step)


def write_edges_csv(cmap, fh):
    fh.write("u,v,mult,side\n")
    for u, v, k, s in zip(cmap.edge_u, cmap.edge_v, cmap.edge_mult, cmap.edge_side):
        fh.write(f"{u},{v},{k},{SIDE_NAMES[s]}\n")


def write_degree_csv(cmap, fh):
    fh.write("degree,count\n")
    for k, c in enumerate(degree_histogram(cmap)):
        if c:
            fh.write(f"{k},{c}\n")


__all__ = [
    "MatedCrtMap", "PlanarStructure", "build_map", "brute_force_adjacency",
    "boundary_vertices", "rotation_system_and_faces", "degree_histogram", "cell_minima",
    "write_map", "read_map", "write_edges_csv", "write_degree_csv", "BrownianPath",
]
