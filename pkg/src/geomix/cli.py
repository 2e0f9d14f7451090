"""Command line entry point: ``geomix <command> [flags]``.

Every command writes its results under ``--out`` (CSV and JSON) and prints
the JSON summary to stdout.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import experiments as ex
from .errors import GeomixError
from .geometry import RggConfig, write_edge_list, write_graph
from .spectral import lambda2
from .structure import census_record
from .tiling import classify_good_useful
from .walk import ROW_LIMIT, exact_mix_profile, extremal_rows, simulate_ctrw


def _radius(text):
    """A number, or ``<c>log`` for c * ln n (resolved per n)."""
    if text.endswith("sqrtlog"):
        c = float(text[:-7] or 1.0)
        return lambda n: c * math.sqrt(2.0 * math.log(n))
    if text.endswith("log"):
        c = float(text[:-3] or 1.0)
        return lambda n: c * math.log(n)
    return float(text)


def _r_at(args, n):
    r = args.r[0]
    return r(n) if callable(r) else r


def _plan(args, default_seeds=1):
    if args.plan:
        return ex.SweepPlan.from_json(args.plan)
    return ex.SweepPlan.grid(args.n, args.r, args.d, args.seeds or default_seeds,
                             master_seed=args.seed, out=args.out)


def _instance(args):
    n = args.n[0]
    cfg = RggConfig(n, args.d, _r_at(args, n), args.seed)
    return ex.giant_of(cfg)


def _dump(args, name, payload):
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{name}.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True, default=_jsonable)
    return path


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def cmd_generate(args):
    g, _, _ = _instance(args)
    os.makedirs(args.out, exist_ok=True)
    write_graph(os.path.join(args.out, "graph.rgg"), g)
    write_edge_list(os.path.join(args.out, "edges.txt"), g)
    return {"vertices": g.n_vertices, "edges": g.edge_count, "radius": g.radius}


def cmd_giant(args):
    g, lab, giant = _instance(args)
    return census_record(g, lab, giant)


def cmd_spectrum(args):
    _, _, giant = _instance(args)
    res = lambda2(giant, tol=args.tol, seed=args.seed)
    out = {k: getattr(res, k) for k in res.__dataclass_fields__}
    out["relax"] = res.relax_signed if args.mode == "signed" else res.relax_abs
    out["mode"] = args.mode
    out["giant"] = giant.n_vertices
    return out


def cmd_mix(args):
    _, _, giant = _instance(args)
    os.makedirs(args.out, exist_ok=True)
    grid = np.linspace(0.0, args.t_max, args.points) if args.t_max else None
    if giant.n_vertices <= ROW_LIMIT and not args.walkers:
        grid = grid if grid is not None else np.linspace(0.0, 4.0 * giant.n_vertices, args.points)
        prof = exact_mix_profile(giant, grid, eps_list=args.eps)
    else:
        grid = grid if grid is not None else np.linspace(0.0, 1.0 * giant.n_vertices, args.points)
        starts = extremal_rows(giant, 4)
        prof = simulate_ctrw(giant, starts, grid, args.walkers or args.budget or 10000, args.seed)
    prof.to_csv(os.path.join(args.out, "mix.csv"))
    return {"method": prof.method, "tau": prof.tau, "starts": len(prof.starts),
            "heuristic_rows": prof.heuristic_rows, "giant": giant.n_vertices}


def cmd_iso(args):
    plan = _plan(args)
    samples = args.budget or 1000
    if args.mode == "large":
        rep = ex.run_large_radii_iso(plan, samples=samples, delta=args.delta)
    else:
        rep = ex.run_iso(plan, samples=samples, delta=args.delta, size_lo=args.size_lo)
    os.makedirs(args.out, exist_ok=True)
    rep.to_csv(os.path.join(args.out, "iso.csv"))
    return rep.summary()


def cmd_tiles(args):
    g, _, _ = _instance(args)
    out = ex.tiles_report(g)
    if args.M:
        tiling, cls = classify_good_useful(g, args.M[0])
        out.update(M=args.M[0], good_rho=tiling.rho, good=int(cls.good.sum()),
                   useful=int(cls.useful.sum()), clipped=int(cls.clipped.sum()),
                   useful_fraction=cls.useful_fraction())
    return out


def cmd_perc(args):
    return ex.perc_report(args.n[0], args.d, args.p, args.seed)


def cmd_renorm(args):
    return ex.run_renormalization(_plan(args), M_grid=args.M or (15, 20, 30, 40))


def cmd_scaling(args):
    fit = ex.run_scaling(_plan(args, 4), tol=args.tol)
    return fit.record()


def cmd_d1(args):
    args.d = 1
    return ex.run_d1(_plan(args, 2), samples=args.budget or 1000, tol=args.tol)


def cmd_export_fig(args):
    n = args.n[0]
    paths = ex.export_figure_csvs(os.path.join(args.out, "rgg"), n, _r_at(args, n), args.seed)
    return {"files": paths}


COMMANDS = {
    "generate": (cmd_generate, "sample an RGG and write binary and edge-list files"),
    "giant": (cmd_giant, "component census of one instance"),
    "spectrum": (cmd_spectrum, "second eigenvalue and relaxation time of the giant"),
    "mix": (cmd_mix, "TV distance profile (exact for small giants, else Monte Carlo)"),
    "iso": (cmd_iso, "boundary sampler for connected (or, with --mode large, arbitrary) sets"),
    "tiles": (cmd_tiles, "tile occupancy, normal flags and (with --M) useful tiles"),
    "perc": (cmd_perc, "site percolation clusters under the monotone coupling"),
    "renorm": (cmd_renorm, "useful-tile fraction against M"),
    "scaling": (cmd_scaling, "relaxation-time scaling fit"),
    "d1": (cmd_d1, "one-dimensional scaling and suffix-set boundaries"),
    "export-fig": (cmd_export_fig, "write the four figure CSV files for a tiny instance"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="geomix", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--n", type=float, nargs="+", default=[4096.0])
        s.add_argument("--d", type=int, default=2)
        s.add_argument("--r", type=_radius, nargs="+", default=[2.0],
                       help="radius, or 'Clog' for C ln n, or 'Csqrtlog' for C sqrt(2 ln n)")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--seeds", type=int, default=None)
        s.add_argument("--out", default="geomix_out")
        s.add_argument("--eps", type=float, nargs="+", default=[0.25])
        s.add_argument("--tol", type=float, default=1e-10)
        s.add_argument("--budget", type=int, default=None)
        s.add_argument("--M", type=float, nargs="+", default=None)
        s.add_argument("--delta", type=float, default=0.5)
        s.add_argument("--mode", default="signed",
                       help="signed|abs for spectrum, connected|large for iso")
        s.add_argument("--plan", default=None, help="JSON sweep plan")
        s.add_argument("--p", type=float, nargs="+", default=[0.3, 0.5, 0.6, 0.7, 0.9])
        s.add_argument("--walkers", type=int, default=None)
        s.add_argument("--t-max", dest="t_max", type=float, default=None)
        s.add_argument("--points", type=int, default=41)
        s.add_argument("--size-lo", dest="size_lo", type=int, default=64)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command][0]
    try:
        out = fn(args)
    except (GeomixError, ValueError) as err:
        print(f"geomix {args.command}: {err}", file=sys.stderr)
        return 2
    _dump(args, args.command.replace("-", "_"), out)
    print(json.dumps(out, indent=1, sort_keys=True, default=_jsonable))
    return 0


if __name__ == "__main__":
    sys.exit(main())
