"""Command-line front end: ``mcrt {sample,build,embed,walk,diag,repro}``.

Every subcommand recomputes its inputs from ``(config, seed)``, so a run is
reproducible from its flags alone. Settings come from built-in defaults, then
an optional ``--config`` file of ``key = value`` lines, then explicit flags.
"""
import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .brownian import (disk_path_with_n, sample_plane, sample_sphere_excursion,
                       write_path, write_path_csv)
from .crtmap import (brute_force_adjacency, build_map, rotation_system_and_faces,
                     write_degree_csv, write_edges_csv, write_map)
from .errors import (BudgetError, DomainError, SamplingError, SizeError, StatisticsError,
                     StructuralError)
from .tutte import embed_disk, embed_plane, embed_sphere, write_embedding_csv, write_svg
from .walks import discrete_circle_ks, embed_walk, exit_vertices, simulate_walk

log = logging.getLogger("matedcrt")


@dataclass
class RunConfig:
    gamma: float = math.sqrt(2.0)
    n: int = 10000
    topology: str = "disk"
    seed: int = 0
    horizon: float = 5.0
    delta: float = 0.05
    tol: float = 1e-10
    walks: int = 1000
    max_attempts: int = 10**9
    out: str = "mcrt-out"
    verify: bool = False
    csv: bool = True
    svg: bool = True
    binary: bool = True

    def validate(self):
        """Check every field against the preconditions of the modules it feeds."""
        if not 0.0 < self.gamma < 2.0:
            raise DomainError(f"gamma must lie in the open interval (0, 2), got {self.gamma}")
        if self.topology not in ("disk", "plane", "sphere"):
            raise DomainError(f"topology must be disk, plane or sphere, got {self.topology!r}")
        if self.n < 2:
            raise DomainError(f"n must be at least 2, got {self.n}")
        if self.topology == "sphere" and self.n < 100:
            raise DomainError(f"sphere maps need n >= 100 (step <= 1e-2), got {self.n}")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        if not 0.0 < self.delta < 0.25:
            raise DomainError(f"delta must lie in (0, 1/4), got {self.delta}")
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if self.walks < 1:
            raise DomainError(f"walks must be positive, got {self.walks}")
        if self.max_attempts < 1:
            raise DomainError(f"max_attempts must be positive, got {self.max_attempts}")
        return self


_BOOL = {"1": True, "true": True, "yes": True, "on": True,
         "0": False, "false": False, "no": False, "off": False}


def _coerce(key, text):
    kind = RunConfig.__dataclass_fields__[key].type
    if kind == "bool" or kind is bool:
        try:
            return _BOOL[text.strip().lower()]
        except KeyError:
            raise DomainError(f"config key {key!r} expects a boolean, got {text!r}") from None
    conv = {"gamma": float, "horizon": float, "delta": float, "tol": float,
            "n": lambda s: int(float(s)), "seed": int, "walks": int,
            "max_attempts": lambda s: int(float(s))}.get(key, str)
    try:
        return conv(text.strip())
    except ValueError:
        raise DomainError(f"config key {key!r} has invalid value {text!r}") from None


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in RunConfig.__dataclass_fields__:
            raise DomainError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = _coerce(key, value)
    return out


def _parser():
    p = argparse.ArgumentParser(prog="mcrt", description="Mated-CRT map simulator.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="file of key = value lines")
    common.add_argument("--gamma", type=float)
    common.add_argument("--n", type=lambda s: int(float(s)),
                        help="number of cells (per unit time for plane maps)")
    common.add_argument("--topology", choices=("disk", "plane", "sphere"))
    common.add_argument("--seed", type=int)
    common.add_argument("--horizon", type=float, help="plane window half-width")
    common.add_argument("--delta", type=float, help="sphere window margin")
    common.add_argument("--tol", type=float, help="solver residual tolerance")
    common.add_argument("--walks", type=int)
    common.add_argument("--max-attempts", dest="max_attempts", type=lambda s: int(float(s)))
    common.add_argument("--out", help="output directory")
    common.add_argument("--verify", action="store_const", const=True,
                        help="cross-check the map against the brute-force oracle (n <= 500)")
    common.add_argument("--no-csv", dest="csv", action="store_const", const=False)
    common.add_argument("--no-svg", dest="svg", action="store_const", const=False)
    common.add_argument("--no-binary", dest="binary", action="store_const", const=False)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="sample the Brownian path")
    sub.add_parser("build", parents=[common], help="build the map and trace its faces")
    sub.add_parser("embed", parents=[common], help="compute the Tutte embedding")
    sub.add_parser("walk", parents=[common], help="random-walk exit statistics")
    sub.add_parser("diag", parents=[common], help="diagnostics report")
    rp = sub.add_parser("repro", parents=[common], help="run the acceptance suite")
    rp.add_argument("--criteria", type=lambda s: [int(x) for x in s.split(",")],
                    help="comma-separated criterion numbers (default: all)")
    return p


def make_config(args):
    values = {}
    if args.config:
        values.update(read_config(args.config))
    for key in RunConfig.__dataclass_fields__:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    return RunConfig(**values).validate()


# ----------------------------------------------------------------------------
# pipeline steps

def sample_path(cfg):
    if cfg.topology == "disk":
        return disk_path_with_n(cfg.gamma, cfg.n, cfg.seed, max_attempts=cfg.max_attempts)
    if cfg.topology == "sphere":
        return sample_sphere_excursion(cfg.gamma, 1.0 / cfg.n, cfg.seed,
                                       max_attempts=cfg.max_attempts)
    # one extra unit of time on each side so the window covers [-horizon, horizon]
    span = cfg.horizon + 1.0
    return sample_plane(cfg.gamma, 1.0 / cfg.n, (-span, span), cfg.seed)


def embed(cfg, cmap, path):
    if cfg.topology == "disk":
        return embed_disk(cmap, path, cfg.seed, cfg.tol)
    if cfg.topology == "sphere":
        return embed_sphere(cmap, path, cfg.delta, cfg.seed, cfg.tol)
    return embed_plane(cmap, path, cfg.horizon, cfg.seed, cfg.tol)


def _outdir(cfg):
    d = Path(cfg.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_sample(cfg):
    d = _outdir(cfg)
    path = sample_path(cfg)
    if cfg.binary:
        with open(d / "path.bin", "wb") as fh:
            write_path(path, fh)
    if cfg.csv:
        with open(d / "path.csv", "w") as fh:
            write_path_csv(path, fh)
    log.info("sampled %s path with %d points (%d attempts)", cfg.topology, path.n_points,
             path.attempts)
    return 0


def _build(cfg):
    path = sample_path(cfg)
    cmap = build_map(path)
    planar = rotation_system_and_faces(cmap)
    log.info("map: n=%d E=%d F=%d euler=%d", cmap.n_vertices, cmap.n_edges, planar.n_faces,
             planar.euler_characteristic)
    if cfg.verify:
        if cmap.n_vertices > 500:
            raise SizeError(f"--verify needs n <= 500, got {cmap.n_vertices}")
        if cmap.edge_multiset() != brute_force_adjacency(path):
            raise StructuralError("map differs from the brute-force adjacency oracle")
        log.info("brute-force oracle agrees")
    return path, cmap, planar


def cmd_build(cfg):
    d = _outdir(cfg)
    _, cmap, planar = _build(cfg)
    if cfg.binary:
        with open(d / "map.bin", "wb") as fh:
            write_map(cmap, fh)
    if cfg.csv:
        with open(d / "edges.csv", "w") as fh:
            write_edges_csv(cmap, fh)
        with open(d / "degrees.csv", "w") as fh:
            write_degree_csv(cmap, fh)
    _write_json(d / "map.json", {"n": cmap.n_vertices, "edges": cmap.n_edges,
                                 "faces": planar.n_faces,
                                 "euler": planar.euler_characteristic,
                                 "boundary": int(cmap.boundary_order.size),
                                 "verified": bool(cfg.verify)})
    return 0


def cmd_embed(cfg):
    d = _outdir(cfg)
    path, cmap, _ = _build(cfg)
    e = embed(cfg, cmap, path)
    log.info("embedded %d vertices, residual %.2e", e.n_embedded, e.residual)
    if cfg.csv:
        with open(d / "embedding.csv", "w") as fh:
            write_embedding_csv(e, fh)
    if cfg.svg:
        with open(d / "embedding.svg", "w") as fh:
            write_svg(e, fh)
    return 0


def cmd_walk(cfg):
    d = _outdir(cfg)
    path, cmap, _ = _build(cfg)
    e = embed(cfg, cmap, path)
    # exits are compared with the hitting law of the walk the boundary was built from
    start = 0 if cfg.topology == "sphere" else e.root
    mask = np.zeros(cmap.n_vertices, dtype=np.uint8)
    mask[e.boundary] = 1
    verts, steps = exit_vertices(cmap, start, mask, cfg.walks, cfg.seed)
    rank = np.full(cmap.n_vertices, -1)
    rank[e.boundary] = np.arange(e.boundary.size)
    counts = np.bincount(rank[verts], minlength=e.boundary.size)
    ks = discrete_circle_ks(counts, e.p)
    report = {"start": int(start), "walks": cfg.walks, "mean_steps": float(steps.mean()),
              "boundary_size": int(e.boundary.size), "circle_ks": ks,
              "ks_bound": 1.63 / math.sqrt(cfg.walks)}
    _write_json(d / "walk.json", report)
    if cfg.csv:
        walk = simulate_walk(cmap, start, mask, cfg.seed)
        if e.embedded_mask[walk].all():
            with open(d / "walk.csv", "w") as fh:
                embed_walk(walk, e).write_csv(fh)
    print(json.dumps(report, sort_keys=True))
    return 0


def cmd_diag(cfg):
    from .diagnostics import diagnose
    d = _outdir(cfg)
    path, cmap, _ = _build(cfg)
    e = embed(cfg, cmap, path)
    rep = diagnose(cmap, e, cfg.seed)
    (d / "diag.json").write_text(rep.to_json() + "\n")
    (d / "diag.txt").write_text(rep.to_text() + "\n")
    print(rep.to_text())
    return 0 if rep.ok else 1


def cmd_repro(cfg, criteria=None):
    from .acceptance import run
    d = _outdir(cfg)
    results = run(criteria)
    _write_json(d / "acceptance.json", [asdict(r) for r in results])
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


COMMANDS = {"sample": cmd_sample, "build": cmd_build, "embed": cmd_embed, "walk": cmd_walk,
            "diag": cmd_diag}


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = make_config(args)
        if args.command == "repro":
            return cmd_repro(cfg, args.criteria)
        return COMMANDS[args.command](cfg)
    except (DomainError, SizeError, SamplingError, StructuralError, BudgetError,
            StatisticsError, OSError) as exc:
        print(f"mcrt {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
