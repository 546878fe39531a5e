"""The acceptance suite: twelve checks, each printed as one pass/fail line.

Maps, paths and embeddings are cached by ``(gamma, n, seed)`` so criteria that
share environments (7, 10 and 11 at ``n = 10^5``) sample them once.
"""
import math
import time
from dataclasses import dataclass
from functools import lru_cache
from statistics import median

import numpy as np
from scipy.stats import ks_2samp

from . import diagnostics as diag
from .brownian import (disk_path_with_n, sample_disk_excursion, sample_plane,
                       sample_sphere_excursion)
from .crtmap import (brute_force_adjacency, build_map, degree_histogram,
                     rotation_system_and_faces)
from .errors import HorizonError, InvariantViolation, SamplingError, StatisticsError
from .harmonic import dense_solve, solve_dirichlet
from .rng import stream
from .tutte import embed_disk, embed_plane, embed_sphere
from .walks import (EmbeddedCurve, brownian_reference, cmp_distance, cmp_distance_loc,
                    discrete_circle_ks, embed_walk, exit_law_vs_harmonic_measure,
                    exit_vertices, frechet_all_couplings, simplify, simulate_walk,
                    stop_mask_boundary)

GAMMA = math.sqrt(2.0)
GAMMA_SPHERE = math.sqrt(8.0 / 3.0)
ATTEMPTS = 10**9
TREND_SEEDS = tuple(range(10))
TREND_SIZES = (10**3, 10**4, 10**5)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] criterion {self.number:2d}: {self.title} ({self.seconds:.1f} s) {self.detail}"


class Context:
    """Shared caches; every embedding produced here is kept for the residual check."""

    def __init__(self, gamma=GAMMA):
        self.gamma = gamma
        self.embeddings = []
        self.path = lru_cache(maxsize=None)(self._path)
        self.map = lru_cache(maxsize=None)(self._map)
        self.embedding = lru_cache(maxsize=None)(self._embedding)

    def _path(self, n, seed):
        return disk_path_with_n(self.gamma, n, seed, max_attempts=ATTEMPTS)

    def _map(self, n, seed):
        return build_map(self.path(n, seed))

    def _embedding(self, n, seed):
        e = embed_disk(self.map(n, seed), self.path(n, seed), seed)
        self.embeddings.append(e)
        return e


def _timed(number, title, fn, ctx):
    t0 = time.perf_counter()
    passed, detail = fn(ctx)
    return CriterionResult(number, title, bool(passed), detail, time.perf_counter() - t0)


# ----------------------------------------------------------------------------

def _criterion_1(ctx):
    # disk, sphere and plane paths with n <= 500
    configs = []
    for k in range(100):
        n = 50 + (k * 37) % 451
        g = GAMMA if k % 2 == 0 else GAMMA_SPHERE
        configs.append(("disk", lambda n=n, g=g, k=k: disk_path_with_n(g, n, k,
                                                                      max_attempts=ATTEMPTS)))
        ns = 100 + (k * 41) % 401
        configs.append(("sphere", lambda ns=ns, k=k: sample_sphere_excursion(
            GAMMA_SPHERE, 1.0 / ns, 1000 + k, max_attempts=ATTEMPTS)))
        gp = (1.0, GAMMA, GAMMA_SPHERE)[k % 3]
        configs.append(("plane", lambda n=n, gp=gp, k=k: sample_plane(
            gp, 1.0 / n, (-0.5, 0.5), 2000 + k)))
    t0 = time.perf_counter()
    bad = []
    for topo, make in configs:
        path = make()
        got = build_map(path).edge_multiset()
        if got != brute_force_adjacency(path):
            bad.append((topo, path.seed))
    elapsed = time.perf_counter() - t0
    return (not bad and elapsed < 10.0,
            f"{len(configs)} maps, mismatches={bad[:5]}, build+oracle {elapsed:.1f} s (limit 10)")


def _criterion_2(ctx):
    # paths are sampled outside the timer; the limit applies to build, tracing and checks
    problems = []
    cases = [(10**3, s) for s in range(100, 120)] + [(10**5, s) for s in TREND_SEEDS[:5]]
    paths = [ctx.path(n, s) if n == 10**5 else disk_path_with_n(GAMMA, n, s,
                                                                 max_attempts=ATTEMPTS)
             for n, s in cases]
    t0 = time.perf_counter()
    for (n, s), path in zip(cases, paths):
        cmap = build_map(path)
        planar = rotation_system_and_faces(cmap)
        try:
            planar.check_triangulation()
        except InvariantViolation as exc:
            problems.append((n, s, str(exc)))
        if np.any(cmap.edge_u == cmap.edge_v) or planar.euler_characteristic != 2:
            problems.append((n, s, "self-loop or euler"))
    elapsed = time.perf_counter() - t0
    return (not problems and elapsed < 60.0,
            f"{len(cases)} maps, problems={problems[:3]}, build and checks {elapsed:.1f} s "
            f"(limit 60)")


def _criterion_3(ctx):
    vals = [diag.mean_interior_degree(ctx.map(10**5, s)) for s in TREND_SEEDS[:5]]
    ok = all(5.5 <= v <= 6.5 for v in vals)
    return ok, "mean interior degree " + ", ".join(f"{v:.3f}" for v in vals) + " in [5.5, 6.5]"


def _criterion_4(ctx):
    parts = []
    ok = True
    for g in (GAMMA, GAMMA_SPHERE):
        path = sample_plane(g, 1e-5, (-0.5, 0.5), 4)
        cmap = build_map(path)
        try:
            fit = diag.degree_tail_fit(degree_histogram(cmap))
            good = fit.c1 > 0 and fit.r2 >= 0.9
            parts.append(f"gamma={g:.3f}: n={cmap.n_vertices} slope={-fit.c1:.3f} "
                         f"r2={fit.r2:.3f}")
        except StatisticsError as exc:
            good = False
            parts.append(f"gamma={g:.3f}: {exc}")
        ok &= good
    p = 0.3
    sample = stream(4, "geometric-calibration").geometric(p, 10**5)
    fit = diag.degree_tail_fit(np.bincount(sample))
    rate = -math.log(1 - p)
    rel = abs(fit.c1 - rate) / rate
    ok &= rel <= 0.05
    parts.append(f"geometric({p}) rate {fit.c1:.4f} vs {rate:.4f} (rel {rel:.3%})")
    return ok, "; ".join(parts)


def _criterion_5(ctx):
    worst = 0.0
    count = 0
    for s in range(50):
        g = stream(s, "dense-oracle")
        maps = [build_map(disk_path_with_n(GAMMA, 40 + s * 3, s, max_attempts=ATTEMPTS)),
                build_map(sample_sphere_excursion(GAMMA_SPHERE, 1.0 / (100 + 2 * s), s,
                                                  max_attempts=ATTEMPTS)),
                build_map(sample_plane(GAMMA, 1.0 / (50 + 3 * s), (-0.5, 0.5), s))]
        for cmap in maps:
            if cmap.boundary_order.size:
                bset = cmap.boundary_order
            else:
                n = cmap.n_vertices
                k = max(2, n // 10)
                bset = np.concatenate([np.arange(k), np.arange(n - k, n)])
            vals = g.standard_normal(bset.size)
            it = solve_dirichlet(cmap, bset, vals, tol=1e-12).values
            ref = dense_solve(cmap, bset, vals)
            worst = max(worst, float(np.max(np.abs(it - ref))))
            count += 1
    # embeddings: every cached disk embedding plus small sphere and plane ones
    embs = list(ctx.embeddings)
    for s in range(5):
        cmap = build_map(sample_sphere_excursion(GAMMA_SPHERE, 1e-3, s, max_attempts=ATTEMPTS))
        embs.append(embed_sphere(cmap, seed=s))
        path = sample_plane(GAMMA, 1e-2, (-51.0, 51.0), s)
        try:
            embs.append(embed_plane(build_map(path), path, horizon=50.0, seed=s))
        except HorizonError:
            pass
    res = max(diag.mean_value_residual(e) for e in embs)
    ok = worst <= 1e-8 and res <= 1e-8
    return ok, (f"dense oracle max diff {worst:.2e} on {count} maps; mean-value residual "
                f"{res:.2e} over {len(embs)} embeddings (limits 1e-8)")


def _criterion_6(ctx):
    t0 = time.perf_counter()
    cmap = ctx.map(10**4, 0)
    emb = ctx.embedding(10**4, 0)
    verts, _ = exit_vertices(cmap, emb.root, stop_mask_boundary(cmap), 10**5, seed=6)
    rank = np.full(cmap.n_vertices, -1)
    rank[emb.boundary] = np.arange(emb.boundary.size)
    counts = np.bincount(rank[verts], minlength=emb.boundary.size)
    ks = discrete_circle_ks(counts, emb.p)
    elapsed = time.perf_counter() - t0
    return ks <= 0.01 and elapsed < 120, f"circle KS {ks:.4f} (limit 0.01), {elapsed:.1f} s"


def _start_near(emb, target):
    pos = np.where(emb.interior_mask, emb.positions, np.inf)
    return int(np.argmin(np.abs(pos - target)))


def _criterion_7(ctx):
    t0 = time.perf_counter()
    stats = []
    for s in TREND_SEEDS:
        cmap = ctx.map(10**5, s)
        emb = ctx.embedding(10**5, s)
        r = exit_law_vs_harmonic_measure(cmap, emb, _start_near(emb, 0.4), 10**4, seed=7000 + s)
        stats.append(r.ks_statistic)
    passes = sum(k <= 0.05 for k in stats)
    elapsed = time.perf_counter() - t0
    return (passes >= 8 and elapsed < 1200,
            f"KS per seed [{', '.join(f'{k:.3f}' for k in stats)}], {passes}/10 <= 0.05, "
            f"{elapsed:.0f} s")


def _criterion_8(ctx):
    g = stream(8, "frechet")
    mismatch = 0
    for _ in range(200):
        a = g.integers(1, 9)
        b = g.integers(1, 9)
        p = g.standard_normal(a) + 1j * g.standard_normal(a)
        q = g.standard_normal(b) + 1j * g.standard_normal(b)
        d = cmp_distance(EmbeddedCurve(p, np.arange(a, dtype=float)),
                         EmbeddedCurve(q, np.arange(b, dtype=float)))
        if d != frechet_all_couplings(p, q):
            mismatch += 1
    worst = 0.0
    for _ in range(1000):
        cs = []
        for _ in range(3):
            k = g.integers(1, 30)
            cs.append(EmbeddedCurve(g.standard_normal(k) + 1j * g.standard_normal(k),
                                    np.arange(k, dtype=float)))
        a, b, c = cs
        dab, dba = cmp_distance(a, b), cmp_distance(b, a)
        dac, dbc = cmp_distance(a, c), cmp_distance(b, c)
        worst = max(worst, cmp_distance(a, a), abs(dab - dba), dac - (dab + dbc))
    ok = mismatch == 0 and worst <= 1e-12
    return ok, f"{mismatch} DP/enumeration mismatches in 200; axiom violation {worst:.1e}"


def _truncate(curve, t_max):
    keep = curve.times <= t_max
    return EmbeddedCurve(curve.points[keep], curve.times[keep], curve.kind)


def _criterion_9(ctx, pairs=200, cap=10**5, delta=0.02):
    cmap = ctx.map(10**5, 0)
    emb = ctx.embedding(10**5, 0)
    z0 = complex(emb.positions[emb.root])
    bmask = stop_mask_boundary(cmap)
    # diffusivity: mean squared embedded step of a pilot walk
    pilot = embed_walk(simulate_walk(cmap, emb.root, bmask, seed=9, max_steps=cap,
                                     truncate=True), emb)
    dt = float(np.mean(np.abs(np.diff(pilot.points)) ** 2) / 2)
    t_max = cap * dt

    def bm(index):
        b = brownian_reference(z0, dt, 9, max_steps=10**8, index=index)
        return simplify(_truncate(b, t_max), delta)

    r_grid = [1.0]
    walk_bm, bm_bm = [], []
    for i in range(pairs):
        walk = simulate_walk(cmap, emb.root, bmask, seed=10**6 + i, max_steps=cap,
                             truncate=True)
        w = simplify(embed_walk(walk, emb), delta)
        walk_bm.append(cmp_distance_loc(w, bm(3 * i), r_grid))
        bm_bm.append(cmp_distance_loc(bm(3 * i + 1), bm(3 * i + 2), r_grid))
    test = ks_2samp(walk_bm, bm_bm)
    return (test.pvalue > 0.01,
            f"{pairs} pairs, mean d_loc walk/BM {np.mean(walk_bm):.4f} vs BM/BM "
            f"{np.mean(bm_bm):.4f}, KS p = {test.pvalue:.3f} (limit > 0.01)")


def _strictly_decreasing(xs):
    return all(b < a for a, b in zip(xs, xs[1:]))


def _criterion_10(ctx):
    meds = []
    for n in TREND_SIZES:
        vals = [diag.max_face_diameter(ctx.embedding(n, s))[0] for s in TREND_SEEDS]
        meds.append(median(vals))
    return (_strictly_decreasing(meds),
            "median max face diameter " + " > ".join(f"{m:.4f}" for m in meds))


def _criterion_11(ctx):
    meds = []
    for n in TREND_SIZES:
        vals = []
        for s in TREND_SEEDS:
            path = ctx.path(n, s)
            vals.append(diag.two_scale_consistency(path, path.step, 2 * path.step, s,
                                                   fine_embedding=ctx.embedding(n, s)))
        meds.append(median(vals))
    return (_strictly_decreasing(meds),
            "median two-scale proxy " + " > ".join(f"{m:.4f}" for m in meds))


def _criterion_12(ctx):
    t0 = time.perf_counter()
    path = sample_disk_excursion(GAMMA, 1.0 / 20000, 1.0, 1.0, 12, max_attempts=ATTEMPTS)
    emb = embed_disk(build_map(path), path, 12)
    pipeline = time.perf_counter() - t0
    ctx.embeddings.append(emb)
    big = sample_plane(GAMMA, 1e-6, (-0.5, 0.5), 12)
    t1 = time.perf_counter()
    cmap = build_map(big)
    build = time.perf_counter() - t1
    ok = pipeline < 60 and build < 30
    return ok, (f"disk pipeline n=2e4 {pipeline:.1f} s (limit 60); build n={cmap.n_vertices} "
                f"{build:.2f} s (limit 30)")


CRITERIA = {
    1: ("adjacency oracle equivalence", _criterion_1),
    2: ("triangulation invariants", _criterion_2),
    3: ("mean interior degree", _criterion_3),
    4: ("degree tail", _criterion_4),
    5: ("harmonic solver", _criterion_5),
    6: ("hitting-probability cross-check", _criterion_6),
    7: ("quenched exit law", _criterion_7),
    8: ("curve distance", _criterion_8),
    9: ("embedded-walk geometry", _criterion_9),
    10: ("face-size decay", _criterion_10),
    11: ("measure self-consistency", _criterion_11),
    12: ("performance", _criterion_12),
}

# criterion 5 checks every embedding made by the others, so it runs last
RUN_ORDER = (1, 2, 3, 4, 6, 7, 8, 9, 10, 11, 12, 5)


def run_one(number, ctx):
    """Run a single criterion; a sampling failure is reported as a failed result."""
    title, fn = CRITERIA[number]
    try:
        return _timed(number, title, fn, ctx)
    except SamplingError as exc:
        return CriterionResult(number, title, False, f"sampling failed: {exc}", 0.0)


def run(selection=None, out=print, ctx=None):
    """Run the selected criteria (all by default); returns results in numeric order."""
    ctx = ctx or Context()
    chosen = set(CRITERIA) if selection is None else set(selection)
    results = {}
    for k in RUN_ORDER:
        if k not in chosen:
            continue
        res = run_one(k, ctx)
        results[k] = res
        if out is not None:
            out(res.line())
    return [results[k] for k in sorted(results)]
