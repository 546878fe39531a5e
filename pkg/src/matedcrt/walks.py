"""Random walks on maps, embedded curves, and distances between curves.

A walk at vertex ``v`` moves to a uniformly chosen edge end, so a neighbour
joined by a double edge is twice as likely. Each step consumes one uniform
from a named stream of the walk seed.
"""
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from . import kernels
from .errors import BudgetError, DomainError, SizeError
from .rng import stream

DEFAULT_STEP_CAP = 10**8
FRECHET_GUARD = 10**8
_SEGMENT = 1 << 16
_BATCH = 256
_UBUF = 1 << 20


@dataclass(frozen=True, eq=False)
class EmbeddedCurve:
    """Polyline with nondecreasing time stamps.

    ``kind`` is one of ``"Walk"``, ``"SpaceFilling"``, ``"Brownian"``,
    ``"Synthetic"``.
    """

    points: np.ndarray
    times: np.ndarray
    kind: str = "Synthetic"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128).ravel()
        ts = np.asarray(self.times, dtype=np.float64).ravel()
        if pts.size != ts.size:
            raise DomainError("points and times must have the same length")
        if pts.size == 0:
            raise DomainError("a curve needs at least one point")
        if np.any(np.diff(ts) < 0):
            raise DomainError("times must be nondecreasing")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "times", ts)

    def __len__(self):
        return self.points.size

    def xy(self):
        return np.ascontiguousarray(np.column_stack([self.points.real, self.points.imag]))

    def write_csv(self, fh):
        fh.write("t,x,y\n")
        for t, z in zip(self.times, self.points):
            fh.write(f"{float(t)!r},{float(z.real)!r},{float(z.imag)!r}\n")

    @classmethod
    def read_csv(cls, fh, kind="Synthetic"):
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 1] + 1j * data[:, 2], data[:, 0], kind)


def _threads():
    try:
        k = int(os.environ.get("MCRT_THREADS", "0"))
    except ValueError:
        k = 0
    return max(1, k if k > 0 else (os.cpu_count() or 1))


def stop_mask_boundary(cmap, boundary=None):
    m = np.zeros(cmap.n_vertices, dtype=np.uint8)
    m[cmap.boundary_order if boundary is None else np.asarray(boundary)] = 1
    return m


def stop_mask_radius(embedding, r):
    """Stop on vertices embedded at modulus ``>= r`` and on vertices not embedded."""
    pos = embedding.positions
    m = ~embedding.embedded_mask | (np.abs(np.where(embedding.embedded_mask, pos, 0)) >= r)
    return m.astype(np.uint8)


def simulate_walk(cmap, start, stop="boundary", seed=0, max_steps=DEFAULT_STEP_CAP,
                  truncate=False):
    """Simple random walk from ``start``.

    Parameters
    ----------
    stop : "boundary", int, ("exit_radius", embedding, r) or uint8 mask
        ``"boundary"`` stops on the disk boundary, an int runs exactly that
        many steps, ``("exit_radius", emb, r)`` stops once the embedded
        position leaves the open ball of radius ``r``, a mask stops on its
        nonzero vertices.
    max_steps : int
        Hard cap for the stopping rules other than a fixed step count.
    truncate : bool
        Return the walk cut at ``max_steps`` instead of raising.

    Returns
    -------
    numpy.ndarray
        Visited vertices including ``start``.

    Raises
    ------
    BudgetError
        If the walk has not stopped after ``max_steps`` steps.
    """
    n = cmap.n_vertices
    if not 0 <= start < n:
        raise DomainError(f"start vertex {start} out of range")
    fixed = isinstance(stop, (int, np.integer)) and not isinstance(stop, bool)
    if fixed:
        if stop < 0:
            raise DomainError("step count must be nonnegative")
        mask = np.zeros(n, dtype=np.uint8)
        cap = int(stop)
    elif isinstance(stop, str):
        if stop != "boundary":
            raise DomainError(f"unknown stop rule {stop!r}")
        mask = stop_mask_boundary(cmap)
        cap = int(max_steps)
    elif isinstance(stop, tuple) and stop and stop[0] == "exit_radius":
        mask = stop_mask_radius(stop[1], stop[2])
        cap = int(max_steps)
    else:
        mask = np.ascontiguousarray(stop, dtype=np.uint8)
        if mask.shape != (n,):
            raise DomainError("stop mask has the wrong length")
        cap = int(max_steps)
    indptr, indices = cmap.walk_csr
    out = [np.array([start], dtype=np.int64)]
    cur = np.array([start], dtype=np.int64)
    done = 0
    seg = 0
    while done < cap and not mask[cur[0]]:
        k = min(_SEGMENT, cap - done)
        u = stream(seed, "walk-path", seg).random(k)
        steps = np.zeros(1, dtype=np.int64)
        path = np.empty(k + 1, dtype=np.int64)
        kernels.walk_batch(indptr, indices, mask, k, u, 0, cur, steps, 0, path)
        s = int(steps[0])
        if s == 0:
            break
        out.append(path[1:s + 1].copy())
        done += s
        seg += 1
    walk = np.concatenate(out)
    if not (fixed or truncate) and not mask[walk[-1]] and indptr[walk[-1] + 1] > indptr[walk[-1]]:
        raise BudgetError(f"walk did not stop within {cap} steps")
    return walk


def exit_vertices(cmap, start, stop_mask, walks, seed=0, max_steps=DEFAULT_STEP_CAP,
                  threads=None):
    """Run ``walks`` independent walks from ``start`` until they hit ``stop_mask``.

    Walks are grouped in batches of 256; batch ``k`` draws from stream
    ``("walk-batch", k)``, so results do not depend on the thread count.

    Returns
    -------
    vertices, steps : numpy.ndarray
        Stopping vertex and step count of each walk.
    """
    indptr, indices = cmap.walk_csr
    mask = np.ascontiguousarray(stop_mask, dtype=np.uint8)
    n_batches = (walks + _BATCH - 1) // _BATCH
    empty = np.empty(0, dtype=np.int64)

    def run(b):
        size = min(_BATCH, walks - b * _BATCH)
        gen = stream(seed, "walk-batch", b)
        cur = np.full(size, start, dtype=np.int64)
        steps = np.zeros(size, dtype=np.int64)
        w = 0
        while w < size:
            u = gen.random(_UBUF)
            w, _ = kernels.walk_batch(indptr, indices, mask, max_steps, u, 0, cur, steps, w,
                                      empty)
        return cur, steps

    k = threads or _threads()
    if k > 1 and n_batches > 1:
        with ThreadPoolExecutor(k) as ex:
            parts = list(ex.map(run, range(n_batches)))
    else:
        parts = [run(b) for b in range(n_batches)]
    verts = np.concatenate([p[0] for p in parts]) if parts else empty
    steps = np.concatenate([p[1] for p in parts]) if parts else empty
    if np.any((mask[verts] == 0) & (steps >= max_steps)):
        raise BudgetError(f"a walk did not stop within {max_steps} steps")
    return verts, steps


def embed_walk(walk, embedding):
    """Embedded polyline of a vertex sequence, time-stamped by step index."""
    walk = np.asarray(walk, dtype=np.int64)
    if not embedding.embedded_mask[walk].all():
        raise DomainError("walk visits a vertex that is not embedded")
    return EmbeddedCurve(embedding.positions[walk], np.arange(walk.size, dtype=float), "Walk")


# ----------------------------------------------------------------------------
# curve distances

def cmp_distance(c1, c2, guard=FRECHET_GUARD):
    """Discrete Fréchet distance between the vertex sequences of two curves."""
    if len(c1) * len(c2) > guard:
        raise SizeError(f"curve size product {len(c1) * len(c2)} exceeds {guard}")
    return float(kernels.discrete_frechet(c1.xy(), c2.xy()))


def _pairwise(p, q):
    # same arithmetic as the DP kernel, so the oracles agree bit for bit
    dx = p.real[:, None] - q.real[None, :]
    dy = p.imag[:, None] - q.imag[None, :]
    return np.sqrt(dx * dx + dy * dy)


def frechet_exhaustive(p, q):
    """Discrete Fréchet distance by enumerating every monotone coupling (tiny inputs only)."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    n, m = p.size, q.size
    if n + m > 18:
        raise SizeError("exhaustive enumeration is limited to n + m <= 18")
    d = _pairwise(p, q)
    best = math.inf
    # a coupling is a lattice path from (0,0) to (n-1,m-1) with steps in
    # {(1,0), (0,1), (1,1)}
    moves = ((1, 0), (0, 1), (1, 1))
    stack = [(0, 0, d[0, 0])]
    while stack:
        i, j, cost = stack.pop()
        if cost >= best:
            continue
        if i == n - 1 and j == m - 1:
            best = cost
            continue
        for di, dj in moves:
            a, b = i + di, j + dj
            if a < n and b < m:
                stack.append((a, b, max(cost, d[a, b])))
    return float(best)


def frechet_all_couplings(p, q):
    """Same as :func:`frechet_exhaustive` but without pruning; lists every coupling."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    n, m = p.size, q.size
    d = _pairwise(p, q)
    best = math.inf
    for steps in _lattice_paths(n - 1, m - 1):
        i = j = 0
        worst = d[0, 0]
        for di, dj in steps:
            i += di
            j += dj
            worst = max(worst, d[i, j])
        best = min(best, worst)
    return float(best)


def _lattice_paths(a, b):
    if a == 0 and b == 0:
        yield ()
        return
    if a > 0:
        for rest in _lattice_paths(a - 1, b):
            yield ((1, 0),) + rest
    if b > 0:
        for rest in _lattice_paths(a, b - 1):
            yield ((0, 1),) + rest
    if a > 0 and b > 0:
        for rest in _lattice_paths(a - 1, b - 1):
            yield ((1, 1),) + rest


def stop_at_radius(curve, r):
    """Curve up to its first exit from the open ball ``B_r(0)``.

    The exit point is interpolated on the crossing segment. A curve starting
    outside the ball is reduced to its first point. Returns ``(curve, exited)``.
    """
    pts = curve.points
    out = np.flatnonzero(np.abs(pts) >= r)
    if out.size == 0:
        return curve, False
    k = int(out[0])
    if k == 0:
        return EmbeddedCurve(pts[:1], curve.times[:1], curve.kind), True
    a, b = pts[k - 1], pts[k]
    s = _segment_exit(a, b, r)
    z = a + s * (b - a)
    t = curve.times[k - 1] + s * (curve.times[k] - curve.times[k - 1])
    return EmbeddedCurve(np.append(pts[:k], z), np.append(curve.times[:k], t), curve.kind), True


def _segment_exit(a, b, r):
    # smallest s in [0, 1] with |a + s (b - a)| = r, given |a| < r <= |b|
    d = b - a
    A = abs(d) ** 2
    B = 2 * (a.real * d.real + a.imag * d.imag)
    C = abs(a) ** 2 - r * r
    disc = max(B * B - 4 * A * C, 0.0)
    s = (-B + math.sqrt(disc)) / (2 * A) if A > 0 else 0.0
    return min(max(s, 0.0), 1.0)


def cmp_distance_loc(c1, c2, r_grid, guard=FRECHET_GUARD):
    """``int_1^inf exp(-r) * min(1, d(c1 stopped at r, c2 stopped at r)) dr``.

    The integrand is evaluated on ``r_grid`` and integrated by the trapezoid
    rule. Past the point where neither curve leaves ``B_r(0)`` the integrand
    is ``exp(-r)`` times a constant, and that tail is added in closed form.
    Grid points below 1 are ignored.
    """
    r = np.asarray(r_grid, dtype=float)
    r = np.unique(r[r >= 1.0])
    if r.size == 0:
        raise DomainError("r_grid must contain values >= 1")
    reach = max(np.max(np.abs(c1.points)), np.max(np.abs(c2.points)))
    vals = []
    rs = []
    tail_const = None
    for rv in r:
        s1, e1 = stop_at_radius(c1, rv)
        s2, e2 = stop_at_radius(c2, rv)
        d = min(1.0, cmp_distance(s1, s2, guard))
        rs.append(rv)
        vals.append(math.exp(-rv) * d)
        if rv > reach:
            tail_const = d
            break
    total = float(trapezoid(vals, rs)) if len(rs) > 1 else 0.0
    if tail_const is None:
        # curves not exhausted within the grid: bound the rest by its last value
        s1, _ = stop_at_radius(c1, rs[-1])
        s2, _ = stop_at_radius(c2, rs[-1])
        tail_const = min(1.0, cmp_distance(s1, s2, guard))
    return total + math.exp(-rs[-1]) * tail_const


def simplify(curve, delta):
    """Keep a point once it is at least ``delta`` from the last kept point (plus the end).

    Every dropped point lies within ``delta`` of a kept one, so the discrete
    Fréchet distance to the original curve is below ``delta``.
    """
    pts = curve.points
    idx = kernels.simplify_indices(np.ascontiguousarray(pts.real),
                                   np.ascontiguousarray(pts.imag), float(delta))
    return EmbeddedCurve(pts[idx], curve.times[idx], curve.kind)


def brownian_reference(z0, dt, seed, radius=1.0, max_steps=10**8, index=0):
    """Standard planar Brownian motion from ``z0`` stopped on leaving ``B_radius(0)``.

    Sampled on a time grid of step ``dt``; the exit point is interpolated on
    the last segment.
    """
    gen = stream(seed, "brownian-reference", index)
    chunks = [np.array([complex(z0)])]
    z = complex(z0)
    total = 0
    sd = math.sqrt(dt)
    while total < max_steps:
        k = min(1 << 14, max_steps - total)
        inc = gen.standard_normal((k, 2)) * sd
        seg = z + np.cumsum(inc[:, 0] + 1j * inc[:, 1])
        out = np.flatnonzero(np.abs(seg) >= radius)
        if out.size:
            j = int(out[0])
            prev = seg[j - 1] if j > 0 else z
            s = _segment_exit(prev, seg[j], radius)
            chunks.append(seg[:j])
            chunks.append(np.array([prev + s * (seg[j] - prev)]))
            pts = np.concatenate(chunks)
            return EmbeddedCurve(pts, dt * np.arange(pts.size), "Brownian")
        chunks.append(seg)
        z = seg[-1]
        total += k
    raise BudgetError(f"Brownian path did not leave the ball in {max_steps} steps")


# ----------------------------------------------------------------------------
# exit laws

def circle_ks(u, cdf_at=None):
    """Rotation-minimised KS distance of samples on ``[0, 1)`` from a circular law.

    ``u`` are positions in ``[0, 1)``. ``cdf_at`` maps positions to the
    reference CDF (uniform when omitted). Returns ``(D+ + D-) / 2``, the
    smallest sup-distance between the empirical CDF and a shifted reference.
    """
    u = np.sort(np.mod(np.asarray(u, dtype=float), 1.0))
    n = u.size
    if n == 0:
        raise DomainError("no samples")
    F = u if cdf_at is None else cdf_at(u)
    k = np.arange(1, n + 1)
    d_plus = float(np.max(k / n - F))
    d_minus = float(np.max(F - (k - 1) / n))
    return 0.5 * (max(d_plus, 0.0) + max(d_minus, 0.0))


def discrete_circle_ks(counts, p):
    """Rotation-minimised KS distance between exit counts and cumulative law ``p`` on a cycle."""
    counts = np.asarray(counts, dtype=float)
    emp = np.cumsum(counts) / counts.sum()
    diff = emp - np.asarray(p, dtype=float)
    d_plus = max(float(np.max(diff)), 0.0)
    d_minus = max(float(np.max(-diff)), 0.0)
    return 0.5 * (d_plus + d_minus)


def poisson_uniformize(points, z):
    """Map exit points on the unit circle to ``[0, 1)`` so that harmonic measure
    from ``z`` becomes uniform: ``arg((w - z) / (1 - conj(z) w)) / (2 pi)``."""
    w = np.asarray(points, dtype=complex)
    t = (w - z) / (1 - np.conj(z) * w)
    return np.mod(np.angle(t) / (2 * np.pi), 1.0)


def poisson_cdf(theta, z):
    """Harmonic measure from ``z`` of the arc ``[0, 2 pi theta]`` of the unit circle."""
    w = np.exp(2j * np.pi * np.asarray(theta, dtype=float))
    u = poisson_uniformize(w, z)
    u0 = poisson_uniformize(np.array([1.0 + 0j]), z)[0]
    return np.mod(u - u0, 1.0)


@dataclass(frozen=True)
class ExitLawResult:
    """``ks_statistic`` compares arc-spread exit points (see
    :func:`exit_law_vs_harmonic_measure`); ``ks_vertex`` uses the bare boundary
    vertex positions."""

    ks_statistic: float
    ks_vertex: float
    samples: np.ndarray
    start: int
    start_position: complex
    walks: int
    mean_steps: float


def exit_law_vs_harmonic_measure(cmap, embedding, start, walks, seed=0,
                                 max_steps=DEFAULT_STEP_CAP):
    """Compare the embedded exit points of walks from ``start`` with harmonic measure.

    Exit points are pushed through the disk automorphism sending
    the embedded start position to 0, under which harmonic measure is uniform; the returned
    statistic is the rotation-minimised KS distance from uniform.

    Boundary vertex ``y_j`` sits at the end of the arc ``(p[j-1], p[j]]`` it
    owns. A single vertex can own a large arc, so each exit through ``y_j``
    is placed uniformly on that arc (stream ``"exit-arc"``) before the
    comparison; otherwise the atoms alone bound the statistic from below.
    """
    from .brownian import Topology
    if cmap.topology is not Topology.DISK:
        raise DomainError("exit law comparison needs a disk map")
    bmask = stop_mask_boundary(cmap)
    if bmask[start]:
        raise DomainError(f"start vertex {start} is on the boundary")
    verts, steps = exit_vertices(cmap, start, bmask, walks, seed, max_steps)
    z = complex(embedding.positions[start])
    rank = np.full(cmap.n_vertices, -1, dtype=np.int64)
    rank[embedding.boundary] = np.arange(embedding.boundary.size)
    j = rank[verts]
    edges = np.concatenate([[embedding.p[-1] - 1.0], embedding.p])
    u = stream(seed, "exit-arc").random(j.size)
    theta = edges[j] + u * (edges[j + 1] - edges[j])
    samples = np.exp(2j * np.pi * theta)
    ks = circle_ks(poisson_uniformize(samples, z))
    ks_vertex = circle_ks(poisson_uniformize(embedding.positions[verts], z))
    return ExitLawResult(ks, ks_vertex, samples, int(start), z, int(walks),
                         float(steps.mean()))


__all__ = [
    "EmbeddedCurve", "simulate_walk", "exit_vertices", "embed_walk", "cmp_distance",
    "cmp_distance_loc", "frechet_exhaustive", "frechet_all_couplings", "simplify",
    "brownian_reference", "circle_ks", "discrete_circle_ks", "poisson_uniformize",
    "poisson_cdf", "exit_law_vs_harmonic_measure", "stop_at_radius",
]
