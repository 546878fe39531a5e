# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a pure-Python twin in ``_fallback.py`` with the same
signature and the same floating-point operation order, so both backends
return identical results for identical inputs.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.float64_t f64


def bridge_rejection(const f64[::1] z, Py_ssize_t pos, Py_ssize_t n, double h,
                     double a00, double a10, double a11,
                     double y1, double y2, double end_l, double end_r,
                     double floor_tol, f64[::1] out_l, f64[::1] out_r,
                     i64 max_attempts):
    """Sequential correlated bridge from (0, 0) with rejection on the floor.

    Returns ``(accepted, attempts, pos)``. ``accepted`` is False either when
    ``max_attempts`` is reached or when the normals in ``z`` after ``pos`` are
    too few for one more attempt; the caller tells the two apart by
    ``attempts``.
    """
    cdef Py_ssize_t nz = z.shape[0]
    cdef Py_ssize_t need = 2 * (n - 1)
    cdef i64 attempts = 0
    cdef Py_ssize_t j
    cdef double m, s, a1, a2, d1, d2, w1, w2, lv, rv
    cdef bint ok
    while attempts < max_attempts:
        if pos + need > nz:
            return False, attempts, pos
        d1 = y1 / n
        d2 = y2 / n
        w1 = 0.0
        w2 = 0.0
        ok = True
        for j in range(n - 1):
            m = <double>(n - j)
            s = sqrt(h * (m - 1.0) / m)
            a1 = s * z[pos + 2 * j]
            a2 = s * z[pos + 2 * j + 1]
            w1 = w1 + (d1 + a1)
            w2 = w2 + (d2 + a2)
            d1 = d1 + (-(a1 / (m - 1.0)))
            d2 = d2 + (-(a2 / (m - 1.0)))
            lv = a00 * w1
            rv = a10 * w1 + a11 * w2
            if lv < -floor_tol or rv < -floor_tol:
                ok = False
                attempts += 1
                pos += 2 * (j + 1)
                break
            out_l[j + 1] = lv
            out_r[j + 1] = rv
        if ok:
            attempts += 1
            pos += need
            out_l[0] = 0.0
            out_r[0] = 0.0
            out_l[n] = end_l
            out_r[n] = end_r
            return True, attempts, pos
    return False, attempts, pos


def visible_pairs(const f64[::1] m):
    """Non-consecutive pairs i < j with max(m[i], m[j]) <= min(m[i+1:j]).

    Monotone-stack sweep, O(n + output).
    """
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t cap = 4 * n + 16
    cdef i64[::1] stack = np.empty(max(n, 1), dtype=np.int64)
    out_i_arr = np.empty(cap, dtype=np.int64)
    out_j_arr = np.empty(cap, dtype=np.int64)
    cdef i64[::1] out_i = out_i_arr
    cdef i64[::1] out_j = out_j_arr
    cdef Py_ssize_t top = 0, k, cnt = 0, j
    cdef double mj
    for j in range(n):
        mj = m[j]
        k = top - 1
        while k >= 1 and mj <= m[stack[k]]:
            if cnt == cap:
                cap *= 2
                out_i_arr = np.resize(out_i_arr, cap)
                out_j_arr = np.resize(out_j_arr, cap)
                out_i = out_i_arr
                out_j = out_j_arr
            out_i[cnt] = stack[k - 1]
            out_j[cnt] = j
            cnt += 1
            k -= 1
        while top > 0 and m[stack[top - 1]] > mj:
            top -= 1
        stack[top] = j
        top += 1
    return out_i_arr[:cnt].copy(), out_j_arr[:cnt].copy()


def trace_faces(const i64[::1] phi):
    """Label the cycles of the face permutation; returns (face_of_dart, n_faces)."""
    cdef Py_ssize_t nd = phi.shape[0]
    face_arr = np.full(nd, -1, dtype=np.int64)
    cdef i64[::1] face = face_arr
    cdef i64 f = 0
    cdef Py_ssize_t d, e
    for d in range(nd):
        if face[d] >= 0:
            continue
        e = d
        while face[e] < 0:
            face[e] = f
            e = phi[e]
        f += 1
    return face_arr, f


def walk_batch(const i64[::1] indptr, const i64[::1] indices,
               const unsigned char[::1] stop, i64 max_steps,
               const f64[::1] u, Py_ssize_t upos,
               i64[::1] cur, i64[::1] steps, Py_ssize_t w,
               i64[::1] path):
    """Advance walks ``w, w+1, ...`` one at a time, one uniform per step.

    Walk ``w`` runs until it sits on a stop vertex or has made ``max_steps``
    steps. Returns ``(w, upos)``: the first unfinished walk and the read
    position in ``u``. ``path`` (length 0 to disable) records the vertices
    of a single walk, ``path[steps]``.
    """
    cdef Py_ssize_t nw = cur.shape[0]
    cdef Py_ssize_t nu = u.shape[0]
    cdef bint record = path.shape[0] > 0
    cdef i64 v, deg, k, s
    with nogil:
        while w < nw:
            v = cur[w]
            s = steps[w]
            while stop[v] == 0 and s < max_steps:
                if upos == nu:
                    break
                deg = indptr[v + 1] - indptr[v]
                if deg == 0:
                    break
                k = <i64>(u[upos] * deg)
                if k >= deg:
                    k = deg - 1
                upos += 1
                v = indices[indptr[v] + k]
                s += 1
                if record:
                    path[s] = v
            cur[w] = v
            steps[w] = s
            if upos == nu and stop[v] == 0 and s < max_steps and indptr[v + 1] > indptr[v]:
                break
            w += 1
    return w, upos


def discrete_frechet(const f64[:, ::1] p, const f64[:, ::1] q):
    """Discrete Fréchet distance between planar point sequences, O(len(q)) memory."""
    cdef Py_ssize_t np_ = p.shape[0], nq = q.shape[0]
    cdef Py_ssize_t i, j, r, o
    cdef double dx, dy, d, best
    buf_arr = np.empty((2, nq), dtype=np.float64)
    cdef f64[:, ::1] buf = buf_arr
    with nogil:
        for i in range(np_):
            r = i & 1
            o = 1 - r
            for j in range(nq):
                dx = p[i, 0] - q[j, 0]
                dy = p[i, 1] - q[j, 1]
                d = sqrt(dx * dx + dy * dy)
                if i == 0 and j == 0:
                    best = d
                elif i == 0:
                    best = buf[r, j - 1]
                elif j == 0:
                    best = buf[o, 0]
                else:
                    best = buf[o, j]
                    if buf[r, j - 1] < best:
                        best = buf[r, j - 1]
                    if buf[o, j - 1] < best:
                        best = buf[o, j - 1]
                buf[r, j] = d if d > best else best
    return buf[(np_ - 1) & 1, nq - 1]


def simplify_indices(const f64[::1] x, const f64[::1] y, double delta):
    """Indices kept by greedy thinning: a point is kept once it is at least
    ``delta`` from the previously kept one; the last point is always kept."""
    cdef Py_ssize_t n = x.shape[0], k, cnt = 1
    out_arr = np.empty(max(n, 1), dtype=np.int64)
    cdef i64[::1] out = out_arr
    cdef double lx, ly, dx, dy, d2 = delta * delta
    if n == 0:
        return out_arr[:0]
    out[0] = 0
    lx = x[0]
    ly = y[0]
    with nogil:
        for k in range(1, n):
            dx = x[k] - lx
            dy = y[k] - ly
            if dx * dx + dy * dy >= d2:
                out[cnt] = k
                cnt += 1
                lx = x[k]
                ly = y[k]
        if out[cnt - 1] != n - 1:
            out[cnt] = n - 1
            cnt += 1
    return out_arr[:cnt].copy()
