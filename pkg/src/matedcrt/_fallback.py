"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``.

Signatures and floating-point operation order match the compiled versions,
so results agree bit-for-bit. These are used when the extension is not
built, or when ``MCRT_PURE_PYTHON=1`` is set.
"""
import numpy as np


def _bridge_prefix(z, pos, k, n, h, a00, a10, a11, y1, y2):
    j = np.arange(k)
    m = (n - j).astype(np.float64)
    s = np.sqrt(h * (m - 1.0) / m)
    zz = z[pos:pos + 2 * k].reshape(k, 2)
    a1 = s * zz[:, 0]
    a2 = s * zz[:, 1]
    b1 = -(a1 / (m - 1.0))
    b2 = -(a2 / (m - 1.0))
    d1 = np.cumsum(np.concatenate(([y1 / n], b1[:-1])))
    d2 = np.cumsum(np.concatenate(([y2 / n], b2[:-1])))
    w1 = np.cumsum(d1 + a1)
    w2 = np.cumsum(d2 + a2)
    return a00 * w1, a10 * w1 + a11 * w2


def bridge_rejection(z, pos, n, h, a00, a10, a11, y1, y2, end_l, end_r,
                     floor_tol, out_l, out_r, max_attempts):
    nz = z.shape[0]
    need = 2 * (n - 1)
    attempts = 0
    while attempts < max_attempts:
        if pos + need > nz:
            return False, attempts, pos
        k = min(64, n - 1)
        failed_at = -1
        while True:
            lv, rv = _bridge_prefix(z, pos, k, n, h, a00, a10, a11, y1, y2)
            bad = np.flatnonzero((lv < -floor_tol) | (rv < -floor_tol))
            if bad.size:
                failed_at = int(bad[0])
                break
            if k == n - 1:
                break
            k = min(4 * k, n - 1)
        attempts += 1
        if failed_at >= 0:
            pos += 2 * (failed_at + 1)
            continue
        out_l[1:n] = lv
        out_r[1:n] = rv
        out_l[0] = 0.0
        out_r[0] = 0.0
        out_l[n] = end_l
        out_r[n] = end_r
        pos += need
        return True, attempts, pos
    return False, attempts, pos


def visible_pairs(m):
    n = m.shape[0]
    stack = []
    out_i = []
    out_j = []
    for j in range(n):
        mj = m[j]
        k = len(stack) - 1
        while k >= 1 and mj <= m[stack[k]]:
            out_i.append(stack[k - 1])
            out_j.append(j)
            k -= 1
        while stack and m[stack[-1]] > mj:
            stack.pop()
        stack.append(j)
    return np.array(out_i, dtype=np.int64), np.array(out_j, dtype=np.int64)


def trace_faces(phi):
    phi = phi.tolist()
    face = [-1] * len(phi)
    f = 0
    for d in range(len(phi)):
        if face[d] >= 0:
            continue
        e = d
        while face[e] < 0:
            face[e] = f
            e = phi[e]
        f += 1
    return np.array(face, dtype=np.int64), f


def walk_batch(indptr, indices, stop, max_steps, u, upos, cur, steps, w, path):
    nw = cur.shape[0]
    nu = u.shape[0]
    record = path.shape[0] > 0
    ptr = indptr.tolist()
    nbr = indices.tolist()
    stp = stop.tolist()
    while w < nw:
        v = int(cur[w])
        s = int(steps[w])
        while stp[v] == 0 and s < max_steps:
            if upos == nu:
                break
            deg = ptr[v + 1] - ptr[v]
            if deg == 0:
                break
            k = int(u[upos] * deg)
            if k >= deg:
                k = deg - 1
            upos += 1
            v = nbr[ptr[v] + k]
            s += 1
            if record:
                path[s] = v
        cur[w] = v
        steps[w] = s
        if upos == nu and stp[v] == 0 and s < max_steps and ptr[v + 1] > ptr[v]:
            break
        w += 1
    return w, upos


def discrete_frechet(p, q):
    nq = q.shape[0]
    prev = None
    for i in range(p.shape[0]):
        dx = p[i, 0] - q[:, 0]
        dy = p[i, 1] - q[:, 1]
        d = np.sqrt(dx * dx + dy * dy).tolist()
        row = [0.0] * nq
        for j in range(nq):
            if i == 0 and j == 0:
                best = d[0]
            elif i == 0:
                best = row[j - 1]
            elif j == 0:
                best = prev[0]
            else:
                best = min(prev[j], row[j - 1], prev[j - 1])
            row[j] = d[j] if d[j] > best else best
        prev = row
    return prev[nq - 1]


def simplify_indices(x, y, delta):
    n = x.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    d2 = delta * delta
    xs = x.tolist()
    ys = y.tolist()
    out = [0]
    lx = xs[0]
    ly = ys[0]
    for k in range(1, n):
        dx = xs[k] - lx
        dy = ys[k] - ly
        if dx * dx + dy * dy >= d2:
            out.append(k)
            lx = xs[k]
            ly = ys[k]
    if out[-1] != n - 1:
        out.append(n - 1)
    return np.array(out, dtype=np.int64)


__all__ = [
    "bridge_rejection",
    "visible_pairs",
    "trace_faces",
    "walk_batch",
    "discrete_frechet",
    "simplify_indices",
]
