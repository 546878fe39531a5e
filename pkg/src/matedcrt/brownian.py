"""Correlated Brownian paths that drive mated-CRT maps.

Three topologies are supported:

* plane: a two-sided correlated Brownian motion observed on a finite window
  of the shifted grid ``step * (Z + theta)``, pinned to (0, 0) at the grid
  point nearest 0;
* sphere: a correlated pair of excursions on [0, 1];
* disk: a correlated bridge from (0, 0) to (boundary, 0) on [0, area] that
  stays in the closed first quadrant.

Excursions are exact discrete Gaussian bridges accepted when every grid value
is at least ``-floor_tol``. Between grid points the path is resolved by exact
Brownian-bridge minima (conditioned to stay nonnegative for excursions),
drawn from a dedicated stream of the path seed.
"""
import enum
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, SamplingError
from .rng import stream

DEFAULT_MAX_ATTEMPTS = 10**7


class Topology(str, enum.Enum):
    PLANE = "plane"
    SPHERE = "sphere"
    DISK = "disk"


_TOPOLOGY_CODE = {Topology.PLANE: 0, Topology.SPHERE: 1, Topology.DISK: 2}
_CODE_TOPOLOGY = {v: k for k, v in _TOPOLOGY_CODE.items()}


def correlation(gamma):
    """Increment correlation ``-cos(pi gamma^2 / 4)`` of the two coordinates."""
    _check_gamma(gamma)
    return -math.cos(math.pi * gamma * gamma / 4.0)


def covariance_factor(gamma):
    """Lower-triangular ``A`` with ``A @ A.T == [[1, c], [c, 1]]``.

    Parameters
    ----------
    gamma : float
        LQG parameter in the open interval (0, 2).

    Returns
    -------
    numpy.ndarray
        2x2 Cholesky factor used to colour i.i.d. standard normal increments.

    Raises
    ------
    DomainError
        If ``gamma`` is not in (0, 2).
    """
    c = correlation(gamma)
    return np.array([[1.0, 0.0], [c, math.sqrt(max(1.0 - c * c, 0.0))]])


def _check_gamma(gamma):
    if not (0.0 < gamma < 2.0):
        raise DomainError(f"gamma must lie in the open interval (0, 2), got {gamma!r}")


def _check_step(step):
    if not (step > 0.0) or not math.isfinite(step):
        raise DomainError(f"step must be a positive finite number, got {step!r}")


def floor_tol(step):
    return 1e-8 * math.sqrt(step)


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """Grid values of a correlated pair ``(L, R)``.

    ``L[j]``, ``R[j]`` are the values at time ``start_time + j * step``.
    ``L_min`` / ``R_min``, when given, fix the infimum of each coordinate on
    each grid interval (length ``len(L) - 1``); otherwise they are drawn from
    the seed on first use.
    """

    gamma: float
    step: float
    topology: Topology
    L: np.ndarray
    R: np.ndarray
    total_time: float
    boundary_length: float = 0.0
    index_shift: float = 0.0
    seed: int = 0
    start_time: float = 0.0
    L_min: np.ndarray | None = None
    R_min: np.ndarray | None = None
    attempts: int = field(default=0, compare=False)

    def __post_init__(self):
        L = np.ascontiguousarray(self.L, dtype=np.float64)
        R = np.ascontiguousarray(self.R, dtype=np.float64)
        if L.shape != R.shape or L.ndim != 1:
            raise DomainError("L and R must be 1-d arrays of equal length")
        if L.size < 2:
            raise DomainError("a path needs at least 2 grid values")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "topology", Topology(self.topology))
        for name in ("L_min", "R_min"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.ascontiguousarray(arr, dtype=np.float64)
                if arr.shape != (L.size - 1,):
                    raise DomainError(f"{name} must have one entry per grid interval")
                object.__setattr__(self, name, arr)

    @property
    def n_points(self):
        return self.L.size

    @property
    def times(self):
        return self.start_time + self.step * np.arange(self.n_points)

    @property
    def conditioned(self):
        return self.topology is not Topology.PLANE

    def interval_minima(self, mode="bridge"):
        """Infimum of ``L`` and of ``R`` over each grid interval.

        ``mode="bridge"`` resolves each interval by an exact Brownian-bridge
        minimum (nonnegative for excursions); ``mode="grid"`` uses the smaller
        endpoint value, i.e. the path is treated as known only on the grid.
        """
        if mode == "grid":
            return (np.minimum(self.L[:-1], self.L[1:]),
                    np.minimum(self.R[:-1], self.R[1:]))
        if mode != "bridge":
            raise DomainError(f"unknown interval-minima mode {mode!r}")
        if self.L_min is not None and self.R_min is not None:
            return self.L_min, self.R_min
        cache = self.__dict__.get("_bridge_minima")
        if cache is None:
            gen = stream(self.seed, "interval-minima")
            u = 1.0 - gen.random((2, self.n_points - 1))
            cache = (_bridge_minima(self.L, u[0], self.step, self.conditioned),
                     _bridge_minima(self.R, u[1], self.step, self.conditioned))
            object.__setattr__(self, "_bridge_minima", cache)
        return cache

    def with_minima(self, L_min, R_min):
        return BrownianPath(self.gamma, self.step, self.topology, self.L, self.R,
                            self.total_time, self.boundary_length, self.index_shift,
                            self.seed, self.start_time, L_min, R_min, self.attempts)


def _bridge_minima(values, u, h, nonnegative):
    # exact law of min of a Brownian bridge (unit diffusivity) given endpoints;
    # P(min < m) = exp(-2 (a - m)(b - m) / h), optionally conditioned on min >= 0
    a = values[:-1]
    b = values[1:]
    if nonnegative:
        ap = np.maximum(a, 0.0)
        bp = np.maximum(b, 0.0)
        e = np.exp(-2.0 * ap * bp / h)
        q = e + u * (1.0 - e)
        m = 0.5 * (a + b - np.sqrt((a - b) ** 2 - 2.0 * h * np.log(q)))
        return np.clip(m, 0.0, np.minimum(ap, bp))
    m = 0.5 * (a + b - np.sqrt((a - b) ** 2 - 2.0 * h * np.log(u)))
    return np.minimum(m, np.minimum(a, b))


def sample_plane(gamma, step, window, seed):
    """Two-sided correlated Brownian motion on ``step * (Z + theta)`` within ``window``.

    The grid point nearest 0 carries the value (0, 0) exactly.
    """
    _check_gamma(gamma)
    _check_step(step)
    t_min, t_max = map(float, window)
    if not (t_min < 0.0 < t_max):
        raise DomainError(f"window must contain 0 in its interior, got {window!r}")
    theta = float(stream(seed, "index-shift").random())
    j_lo = math.ceil(t_min / step - theta)
    j_hi = math.floor(t_max / step - theta)
    if j_hi - j_lo < 1:
        raise DomainError("window holds fewer than 2 grid points; decrease step")
    k = j_hi - j_lo
    A = covariance_factor(gamma)
    z = stream(seed, "path").standard_normal((k, 2))
    inc = math.sqrt(step) * (z @ A.T)
    vals = np.zeros((k + 1, 2))
    np.cumsum(inc, axis=0, out=vals[1:])
    anchor = (0 if theta <= 0.5 else -1) - j_lo
    anchor = min(max(anchor, 0), k)
    vals -= vals[anchor]
    return BrownianPath(gamma, step, Topology.PLANE, vals[:, 0], vals[:, 1],
                        total_time=k * step, index_shift=theta, seed=seed,
                        start_time=(j_lo + theta) * step)


def sample_bridge(gamma, step, duration, end, seed, start=(0.0, 0.0)):
    """Unconditioned correlated bridge, forward walk minus the linear interpolant of its terminal error.

    Returns ``(times, L, R)``.
    """
    _check_gamma(gamma)
    _check_step(step)
    n = max(1, round(duration / step))
    h = duration / n
    A = covariance_factor(gamma)
    z = stream(seed, "bridge").standard_normal((n, 2))
    walk = np.zeros((n + 1, 2))
    np.cumsum(math.sqrt(h) * (z @ A.T), axis=0, out=walk[1:])
    walk += np.asarray(start, dtype=float)
    frac = np.arange(n + 1)[:, None] / n
    walk -= frac * (walk[-1] - np.asarray(end, dtype=float))
    walk[0] = start
    walk[-1] = end
    return h * np.arange(n + 1), walk[:, 0].copy(), walk[:, 1].copy()


def _conditioned_excursion(gamma, n, h, end, seed, max_attempts):
    A = covariance_factor(gamma)
    y = np.linalg.solve(A, np.asarray(end, dtype=float))
    out_l = np.empty(n + 1)
    out_r = np.empty(n + 1)
    tol = floor_tol(h)
    gen = stream(seed, "path")
    block = max(1 << 18, 4 * n)
    attempts = 0
    while attempts < max_attempts:
        z = gen.standard_normal(block)
        ok, used, _ = kernels.bridge_rejection(
            z, 0, n, h, A[0, 0], A[1, 0], A[1, 1], y[0], y[1], end[0], end[1],
            tol, out_l, out_r, max_attempts - attempts)
        attempts += used
        if ok:
            return out_l, out_r, attempts
    raise SamplingError(
        f"no accepted path after {attempts} attempts (gamma={gamma}, n={n}); "
        f"raise max_attempts or coarsen the step", attempts)


def _grid_size(duration, step):
    n = max(1, round(duration / step))
    return n, duration / n


def sample_sphere_excursion(gamma, step, seed, max_attempts=DEFAULT_MAX_ATTEMPTS):
    """Correlated excursion pair on [0, 1], both coordinates nonnegative on the grid.

    The grid has ``round(1 / step)`` intervals, so the effective step is
    ``1 / round(1 / step)``.
    """
    _check_gamma(gamma)
    _check_step(step)
    if step > 1e-2:
        raise DomainError(f"sphere excursions need step <= 1e-2, got {step}")
    n, h = _grid_size(1.0, step)
    L, R, attempts = _conditioned_excursion(gamma, n, h, (0.0, 0.0), seed, max_attempts)
    return BrownianPath(gamma, h, Topology.SPHERE, L, R, total_time=1.0, seed=seed,
                        attempts=attempts)


def sample_disk_excursion(gamma, step, area, boundary, seed,
                          max_attempts=DEFAULT_MAX_ATTEMPTS):
    """Correlated bridge from (0, 0) to (boundary, 0) on [0, area] staying in the quadrant."""
    _check_gamma(gamma)
    _check_step(step)
    if not (area > 0.0 and boundary > 0.0):
        raise DomainError(f"area and boundary length must be positive, got {area}, {boundary}")
    n, h = _grid_size(area, step)
    L, R, attempts = _conditioned_excursion(gamma, n, h, (float(boundary), 0.0), seed,
                                            max_attempts)
    return BrownianPath(gamma, h, Topology.DISK, L, R, total_time=float(area),
                        boundary_length=float(boundary), seed=seed, attempts=attempts)


def disk_path_with_n(gamma, n, seed, area=1.0, boundary=1.0,
                     max_attempts=DEFAULT_MAX_ATTEMPTS):
    """Disk excursion with exactly ``n`` grid intervals (hence ``n`` map vertices)."""
    return sample_disk_excursion(gamma, area / n, area, boundary, seed, max_attempts)


# ----------------------------------------------------------------------------
# persistence

PATH_MAGIC = b"MCRTPATH"
PATH_VERSION = 1
_PATH_HEADER = struct.Struct("<8sIddBQdddQd")


def write_path(path, fh):
    """Write ``path`` in the little-endian binary format to a binary file object."""
    fh.write(_PATH_HEADER.pack(
        PATH_MAGIC, PATH_VERSION, path.gamma, path.step, _TOPOLOGY_CODE[path.topology],
        path.n_points, path.index_shift, path.total_time, path.boundary_length,
        int(path.seed) & ((1 << 64) - 1), path.start_time))
    pairs = np.empty((path.n_points, 2), dtype="<f8")
    pairs[:, 0] = path.L
    pairs[:, 1] = path.R
    fh.write(pairs.tobytes())


def read_path(fh):
    raw = fh.read(_PATH_HEADER.size)
    (magic, version, gamma, step, topo, n, theta, a, l, seed,
     t0) = _PATH_HEADER.unpack(raw)
    if magic != PATH_MAGIC:
        raise DomainError(f"not a path file (magic {magic!r})")
    if version != PATH_VERSION:
        raise DomainError(f"unsupported path file version {version}")
    pairs = np.frombuffer(fh.read(16 * n), dtype="<f8").reshape(n, 2)
    return BrownianPath(gamma, step, _CODE_TOPOLOGY[topo], pairs[:, 0].copy(),
                        pairs[:, 1].copy(), total_time=a, boundary_length=l,
                        index_shift=theta, seed=seed, start_time=t0)


def write_path_csv(path, fh):
    fh.write("t,L,R\n")
    for t, lv, rv in zip(path.times, path.L, path.R):
        fh.write(f"{float(t)!r},{float(lv)!r},{float(rv)!r}\n")
