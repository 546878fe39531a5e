"""Dirichlet problems for the multiplicity-weighted graph Laplacian.

``(L v)(x) = sum_{y ~ x} mult(x, y) * (v(x) - v(y))``. Interior values solve
``L_II u = W_IB g`` by conjugate gradients, one right-hand side at a time.
"""
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import DomainError, SizeError, StructuralError

DEFAULT_TOL = 1e-10
DENSE_LIMIT = 4000


@dataclass(frozen=True, eq=False)
class HarmonicField:
    """Per-vertex solution of a Dirichlet problem.

    ``values`` is NaN outside the solve domain. ``residual_inf_norm`` is the
    largest ``|(L u)(x)|`` over interior vertices, an upper bound for the
    deviation of ``u(x)`` from the weighted neighbour mean.
    """

    values: np.ndarray
    boundary_mask: np.ndarray
    residual_inf_norm: float
    iterations: int
    converged: bool
    domain_mask: np.ndarray | None = None


def default_max_iter(n):
    return max(50, int(20 * math.sqrt(n)))


def laplacian_apply(cmap, vector):
    """Apply the weighted Laplacian of ``cmap`` to ``vector`` (shape ``(n,)`` or ``(n, k)``)."""
    v = np.asarray(vector)
    if v.shape[0] != cmap.n_vertices:
        raise DomainError(f"vector length {v.shape[0]} != number of vertices {cmap.n_vertices}")
    deg = cmap.degrees.astype(np.float64)
    if v.ndim == 2:
        deg = deg[:, None]
    return deg * v - cmap.weights @ v


def laplacian_matrix(cmap):
    w = cmap.weights
    return sp.diags(np.asarray(w.sum(axis=1)).ravel()) - w


def _as_mask(n, vertices):
    vertices = np.asarray(vertices)
    if vertices.dtype == bool:
        if vertices.shape != (n,):
            raise DomainError("boolean vertex mask has the wrong length")
        return vertices.copy()
    m = np.zeros(n, dtype=bool)
    m[vertices.astype(np.int64)] = True
    return m


def cg_solve(A, b, tol, max_iter, x0=None, jacobi=False):
    """Conjugate gradients on SPD ``A`` for each column of ``b``.

    Each column stops once its ``inf``-norm residual is at most ``tol``; the
    returned residual is recomputed from scratch.

    Returns
    -------
    x : numpy.ndarray
    residual : float
        Largest ``inf``-norm residual over the columns.
    iterations : int
        Largest iteration count over the columns.
    """
    b = np.asarray(b, dtype=np.float64)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.float64).reshape(b.shape)
    dinv = 1.0 / A.diagonal() if jacobi else None
    res = 0.0
    its = 0
    for k in range(b.shape[1]):
        xk, rk, ik = _cg_column(A, b[:, k], x[:, k].copy(), tol, max_iter, dinv)
        x[:, k] = xk
        res = max(res, rk)
        its = max(its, ik)
    return (x[:, 0] if squeeze else x), res, its


def _cg_column(A, b, x, tol, max_iter, dinv):
    r = b - A @ x
    it = 0
    pap = 1.0
    while np.max(np.abs(r), initial=0.0) > tol and it < max_iter:
        z = r * dinv if dinv is not None else r
        p = z.copy()
        rz = float(r @ z)
        while it < max_iter:
            ap = A @ p
            pap = float(p @ ap)
            if not pap > 0:
                break
            alpha = rz / pap
            x += alpha * p
            r -= alpha * ap
            it += 1
            if np.max(np.abs(r)) <= tol:
                break
            z = r * dinv if dinv is not None else r
            rz_new = float(r @ z)
            p *= rz_new / rz
            p += z
            rz = rz_new
        # the recursive residual drifts; restart from the true one if needed
        r = b - A @ x
        if not pap > 0:
            break
    return x, float(np.max(np.abs(r), initial=0.0)), it


def _split(cmap, boundary_mask, subset):
    n = cmap.n_vertices
    dom = np.ones(n, dtype=bool) if subset is None else _as_mask(n, subset)
    dom |= boundary_mask
    interior = dom & ~boundary_mask
    return dom, interior


def _interior_system(cmap, dom, interior, boundary_mask):
    w = cmap.weights
    idx_i = np.flatnonzero(interior)
    idx_b = np.flatnonzero(boundary_mask)
    w_dom = w[dom][:, dom] if not dom.all() else w
    deg = np.asarray(w_dom.sum(axis=1)).ravel()
    pos = np.cumsum(dom) - 1
    w_ii = w[idx_i][:, idx_i]
    w_ib = w[idx_i][:, idx_b]
    A = (sp.diags(deg[pos[idx_i]]) - w_ii).tocsr()
    return A, w_ib, w_ii, idx_i, idx_b


def _check_components(w_ii, w_ib):
    if w_ii.shape[0] == 0:
        return
    ncomp, labels = connected_components(w_ii, directed=False)
    touch = np.asarray(w_ib.sum(axis=1)).ravel() > 0
    hit = np.zeros(ncomp, dtype=bool)
    hit[labels[touch]] = True
    if not hit.all():
        k = int(np.sum(~hit))
        raise StructuralError(f"{k} interior component(s) have no boundary contact")


def solve_dirichlet(cmap, boundary_set, boundary_values, tol=DEFAULT_TOL, max_iter=None,
                    jacobi=False, subset=None, x0=None):
    """Harmonic extension of boundary data.

    Parameters
    ----------
    cmap : MatedCrtMap
    boundary_set : array of int or bool mask
        Vertices with prescribed values. Must be nonempty.
    boundary_values : array
        Values on ``boundary_set`` in increasing vertex order (when a mask is
        given) or in the order of ``boundary_set``. Complex values are solved
        as two real right-hand sides; a 2-d array solves one column each.
    tol : float
        Target ``inf``-norm of the interior residual ``L u``.
    max_iter : int, optional
        Defaults to ``20 * sqrt(n)``.
    jacobi : bool
        Use the diagonal preconditioner.
    subset : array of int or bool mask, optional
        Restrict the problem to the subgraph induced on these vertices (plus
        the boundary); other vertices get NaN.
    x0 : array, optional
        Initial guess for the interior values, full length ``n``.

    Returns
    -------
    HarmonicField
    """
    n = cmap.n_vertices
    bset = np.asarray(boundary_set)
    if bset.size == 0 or (bset.dtype == bool and not bset.any()):
        raise DomainError("boundary set must be nonempty")
    bmask = _as_mask(n, bset)
    vals = np.asarray(boundary_values)
    if vals.shape[0] != int(bmask.sum()):
        raise DomainError("boundary_values length does not match boundary_set")
    if bset.dtype != bool:
        order = np.argsort(bset, kind="stable")
        if np.unique(bset).size != bset.size:
            raise DomainError("boundary set has repeated vertices")
        vals = vals[order]
    is_complex = np.iscomplexobj(vals)
    g = np.column_stack([vals.real, vals.imag]) if is_complex else vals.astype(np.float64)
    dom, interior = _split(cmap, bmask, subset)
    A, w_ib, w_ii, idx_i, idx_b = _interior_system(cmap, dom, interior, bmask)
    _check_components(w_ii, w_ib)
    rhs = w_ib @ g
    if max_iter is None:
        max_iter = default_max_iter(n)
    guess = None
    if x0 is not None:
        x0 = np.asarray(x0)[idx_i]
        guess = np.column_stack([x0.real, x0.imag]) if is_complex else x0
    if idx_i.size:
        u, res, it = cg_solve(A, rhs, tol, max_iter, guess, jacobi)
    else:
        u, res, it = np.zeros_like(rhs), 0.0, 0
    shape = (n,) + g.shape[1:]
    out = np.full(shape, np.nan)
    out[idx_b] = g
    out[idx_i] = u
    if is_complex:
        out = out[:, 0] + 1j * out[:, 1]
    return HarmonicField(out, bmask, res, it, res <= tol, dom)


def dense_solve(cmap, boundary_set, boundary_values, subset=None):
    """Direct solve of the same system with ``numpy.linalg.solve`` (test oracle)."""
    n = cmap.n_vertices
    bset = np.asarray(boundary_set)
    bmask = _as_mask(n, bset)
    vals = np.asarray(boundary_values, dtype=np.float64)
    if bset.dtype != bool:
        vals = vals[np.argsort(bset, kind="stable")]
    dom, interior = _split(cmap, bmask, subset)
    if interior.sum() > DENSE_LIMIT:
        raise SizeError(f"dense solve limited to {DENSE_LIMIT} interior vertices")
    A, w_ib, _, idx_i, idx_b = _interior_system(cmap, dom, interior, bmask)
    out = np.full(n, np.nan)
    out[idx_b] = vals
    out[idx_i] = np.linalg.solve(A.toarray(), w_ib @ vals)
    return out


@dataclass(frozen=True, eq=False)
class HittingResult:
    """Exit law of the walk from ``root`` on an ordered boundary.

    ``exit_mass[j]`` is the probability of first hitting the boundary at
    ``order[j]``; ``p[j]`` is the cumulative mass up to and including ``j``.
    """

    order: np.ndarray
    exit_mass: np.ndarray
    p: np.ndarray
    potential: HarmonicField
    edge_exit: tuple


def hitting_probabilities(cmap, root, boundary_order, tol=DEFAULT_TOL, max_iter=None,
                          jacobi=False):
    """Probability that a walk from ``root`` first enters the boundary at each vertex.

    Solves for ``potential`` equal to 1 at ``root``, 0 on the boundary and harmonic on
    the component of ``root`` in the graph minus the boundary. The walk leaves
    through edge ``(u, y)`` with probability proportional to
    ``potential(u) * mult(u, y)``.

    Returns
    -------
    HittingResult
    """
    n = cmap.n_vertices
    order = np.asarray(boundary_order, dtype=np.int64)
    if order.size == 0:
        raise DomainError("boundary order must be nonempty")
    bmask = _as_mask(n, order)
    if bmask[root]:
        raise DomainError(f"root {root} lies on the boundary")
    w = cmap.weights
    rest = np.flatnonzero(~bmask)
    _, labels = connected_components(w[rest][:, rest], directed=False)
    comp = np.zeros(n, dtype=bool)
    comp[rest[labels == labels[np.searchsorted(rest, root)]]] = True
    bset = np.concatenate([order, [root]])
    bvals = np.concatenate([np.zeros(order.size), [1.0]])
    field = solve_dirichlet(cmap, bset, bvals, tol, max_iter, jacobi, subset=comp)
    potential = field.values
    # exit edges (u, y): u in the component, y on the boundary
    coo = w.tocoo()
    sel = comp[coo.row] & bmask[coo.col]
    eu, ey, em = coo.row[sel], coo.col[sel], coo.data[sel]
    flux = potential[eu] * em
    pos = np.full(n, -1, dtype=np.int64)
    pos[order] = np.arange(order.size)
    mass = np.bincount(pos[ey], weights=flux, minlength=order.size)
    total = mass.sum()
    if not total > 0:
        raise StructuralError("the root has no path to the boundary")
    mass = mass / total
    p = np.cumsum(mass)
    p[-1] = 1.0
    return HittingResult(order, mass, p, field, (eu, ey, flux / total))


def write_field_csv(field, fh):
    fh.write("vertex,value\n")
    for i, v in enumerate(field.values):
        fh.write(f"{i},{v.item()!r}\n")
