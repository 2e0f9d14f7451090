"""Sweeps, fits and verification campaigns.

Every randomised step takes a seed derived from the plan's master seed by
``derive_seed(master, *counters)`` (numpy SeedSequence entropy mixing), so
each report is a pure function of the plan.
"""

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .conductance import prefix_cuts
from .errors import ConfigError, GeomixError
from .geometry import RggConfig, as_mask, build_rgg, sample_ppp
from .lattice import closure_labels, l1_offsets, sample_site_field, shifted
from .spectral import lambda2
from .structure import connected_components, extract_giant, sample_connected_sets
from .tiling import (build_tiling, classify_good_useful, classify_normal, compute_r_d,
                     interior_set, write_figure_csvs)

MEASUREMENTS = ("relax", "mix_mc", "iso", "tiles", "perc", "chem")


def derive_seed(master, *keys):
    """Child seed for the counters ``keys`` under ``master`` (32-bit)."""
    ss = np.random.SeedSequence([int(master), *(int(k) for k in keys)])
    return int(ss.generate_state(1, np.uint32)[0])


def kl_tail(alpha, p):
    """Bernoulli relative entropy ``D(alpha || p)`` in nats."""
    if not (0.0 < alpha < 1.0 and 0.0 < p < 1.0):
        raise ConfigError("kl_tail needs 0 < alpha, p < 1")
    return alpha * math.log(alpha / p) + (1 - alpha) * math.log((1 - alpha) / (1 - p))


def _pmap(fn, items):
    """Ordered map, in worker processes when GEOMIX_THREADS allows."""
    items = list(items)
    workers = min(kernels.max_threads(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# -- plans -----------------------------------------------------------------

@dataclass(frozen=True)
class Cell:
    n: float
    r: float
    d: int
    seeds: tuple

    def config(self, seed):
        return RggConfig(self.n, self.d, self.r, seed)


@dataclass
class SweepPlan:
    """Cells of (n, r, d, seeds) plus what to measure and where to write it."""

    cells: list
    measurements: tuple = ("relax",)
    out: str = "."
    master_seed: int = 0
    t_grid: list = None
    budgets: dict = field(default_factory=dict)

    def __post_init__(self):
        self.cells = [c if isinstance(c, Cell) else Cell(c["n"], c["r"], c["d"], tuple(c["seeds"]))
                      for c in self.cells]
        self.measurements = tuple(self.measurements)
        self.validate()

    def validate(self):
        if not self.cells:
            raise ConfigError("plan has no cells")
        bad = set(self.measurements) - set(MEASUREMENTS)
        if bad:
            raise ConfigError(f"unknown measurements {sorted(bad)}")
        for c in self.cells:
            RggConfig(c.n, c.d, c.r, 0)
            if not c.seeds:
                raise ConfigError("every cell needs at least one seed")
            if len(set(c.seeds)) != len(c.seeds):
                raise ConfigError(f"duplicate seeds in cell n={c.n} r={c.r}")

    @classmethod
    def grid(cls, ns, rs, d, seeds, master_seed=0, **kw):
        """Cartesian grid; seed j of cell i is ``derive_seed(master, i, j)``."""
        cells = []
        for i, (n, r) in enumerate((n, r) for n in ns for r in rs):
            r = r(n) if callable(r) else r
            cells.append(Cell(float(n), float(r), int(d),
                              tuple(derive_seed(master_seed, i, j) for j in range(seeds))))
        return cls(cells, master_seed=master_seed, **kw)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            raw = json.load(fh)
        if "grid" in raw:
            g = raw.pop("grid")
            return cls.grid(g["n"], g["r"], g["d"], g["seeds"], **raw)
        return cls(**raw)

    def to_json(self, path):
        raw = asdict(self)
        raw["cells"] = [asdict(c) for c in self.cells]
        with open(path, "w") as fh:
            json.dump(raw, fh, indent=1, sort_keys=True)


def giant_of(cfg):
    g = build_rgg(sample_ppp(cfg), cfg.radius_r)
    lab = connected_components(g)
    return g, lab, extract_giant(g, lab)


# -- scaling ---------------------------------------------------------------

@dataclass
class ScalingFit:
    """Least-squares line through (log predictor, log response)."""

    x: np.ndarray
    y: np.ndarray
    slope: float
    intercept: float
    r2: float
    spread: list = None
    cells: list = None

    def record(self):
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "points": [[float(a), float(b)] for a, b in zip(self.x, self.y)],
                "spread": self.spread, "cells": self.cells}


def fit_loglog(predictor, response, spread=None, cells=None, min_points=4):
    x = np.log(np.asarray(predictor, dtype=float))
    y = np.log(np.asarray(response, dtype=float))
    return fit_line(x, y, spread, cells, min_points)


def fit_line(x, y, spread=None, cells=None, min_points=4):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if len(x) < min_points:
        raise ConfigError(f"fit needs at least {min_points} points, got {len(x)}")
    xm, ym = x.mean(), y.mean()
    sxx = ((x - xm) ** 2).sum()
    if sxx == 0:
        raise ConfigError("predictor is constant")
    slope = float(((x - xm) * (y - ym)).sum() / sxx)
    intercept = float(ym - slope * xm)
    ss_tot = ((y - ym) ** 2).sum()
    ss_res = ((y - intercept - slope * x) ** 2).sum()
    r2 = 1.0 if ss_tot == 0 else float(min(1.0, max(0.0, 1.0 - ss_res / ss_tot)))
    return ScalingFit(x, y, slope, intercept, r2, spread, cells)


def _relax_job(args):
    n, d, r, seed, tol = args
    try:
        _, _, giant = giant_of(RggConfig(n, d, r, seed))
        res = lambda2(giant, tol=tol, seed=seed)
        return {"seed": seed, "relax": res.relax_signed, "giant": giant.n_vertices,
                "method": res.method, "residual": res.residual}
    except GeomixError as err:
        return {"seed": seed, "error": f"{type(err).__name__}: {err}"}


def run_scaling(plan, tol=1e-10, progress=None):
    """Median signed relaxation time per cell, fitted against n^(2/d) / r^2."""
    jobs = [(c.n, c.d, c.r, s, tol) for c in plan.cells for s in c.seeds]
    results = _pmap(_relax_job, jobs)
    cells, pred, resp, spread = [], [], [], []
    k = 0
    for c in plan.cells:
        rows = results[k:k + len(c.seeds)]
        k += len(c.seeds)
        ok = [row["relax"] for row in rows if "relax" in row and math.isfinite(row["relax"])]
        rec = {"n": c.n, "r": c.r, "d": c.d, "runs": rows}
        if ok:
            med = float(np.median(ok))
            rec.update(median=med, min=float(min(ok)), max=float(max(ok)))
            pred.append(c.n ** (2.0 / c.d) / c.r ** 2)
            resp.append(med)
            spread.append([float(min(ok)), float(max(ok))])
        cells.append(rec)
        if progress:
            progress(rec)
    return fit_loglog(pred, resp, spread, cells)


# -- isoperimetry ----------------------------------------------------------

@dataclass
class IsoReport:
    """Per-set boundary counts with window flags and summaries."""

    rows: list
    notes: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def ratios(self, n=None):
        return np.array([row["ratio"] for row in self.rows if n is None or row["n"] == n])

    def summary(self):
        out = {"sets": len(self.rows), "notes": self.notes, **self.extra}
        by_n = {}
        for n in sorted({row["n"] for row in self.rows}):
            rr = self.ratios(n)
            by_n[str(n)] = {"sets": len(rr), "min": float(rr.min()),
                            "median": float(np.median(rr))}
        out["by_n"] = by_n
        if self.rows:
            rr = self.ratios()
            out.update(min=float(rr.min()), median=float(np.median(rr)),
                       boundary_below_one=int(sum(row["boundary"] < 1 for row in self.rows)),
                       literal_window=int(sum(row["literal_ok"] for row in self.rows)))
        return out

    def to_csv(self, path):
        keys = ["n", "r", "d", "seed", "size", "boundary", "ratio", "in_window", "literal_ok"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for row in self.rows:
                w.writerow([row[k] if not isinstance(row[k], bool) else int(row[k]) for k in keys])

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=1, sort_keys=True)


def literal_size_bound(n, d, r, C1=1.0):
    """``C1 (r^(2d+1) (log n)^(d/(d-1)))^d``, the literal lower size edge."""
    return C1 * (r ** (2 * d + 1) * math.log(n) ** (d / (d - 1))) ** d


def _iso_row(c, seed, giant, A, lo, hi, literal, r_power):
    size = len(A)
    e = giant.cut_size(A)
    d = c.d
    return {"n": c.n, "r": c.r, "d": d, "seed": seed, "size": size, "boundary": e,
            "ratio": e / (size ** ((d - 1) / d) * c.r ** r_power),
            "in_window": bool(lo <= size <= hi), "literal_ok": bool(size >= literal)}


def run_iso(plan, samples=1000, delta=0.5, size_lo=64, C1=1.0):
    """Boundary of random connected subsets of the giant.

    Sets are grown from random giant vertices by random-frontier growth with
    log-uniform target sizes in ``[size_lo, (1 - delta) |giant|]``. The
    ratio is ``|E(A, A^c)| / (|A|^((d-1)/d) r^(d+1))``. ``samples`` is per
    cell, split evenly over the cell's seeds.
    """
    rows, notes = [], []
    for ci, c in enumerate(plan.cells):
        if c.d < 2:
            raise ConfigError("isoperimetry campaign needs d >= 2")
        literal = literal_size_bound(c.n, c.d, c.r, C1)
        per = _split(samples, len(c.seeds))
        for si, seed in enumerate(c.seeds):
            _, _, giant = giant_of(c.config(seed))
            hi = int((1.0 - delta) * giant.n_vertices)
            if size_lo > hi:
                notes.append(f"window empty for n={c.n} seed={seed}: [{size_lo}, {hi}]")
                continue
            sub = derive_seed(plan.master_seed, ci, si, 1)
            for A in sample_connected_sets(giant, per[si], size_lo, hi, sub):
                rows.append(_iso_row(c, seed, giant, A, size_lo, hi, literal, c.d + 1))
    return IsoReport(rows, notes)


def _split(total, parts):
    base, extra = divmod(int(total), parts)
    return [base + (i < extra) for i in range(parts)]


def _random_union(giant, rng, pieces, lo, hi):
    """Union of 1..pieces grown blobs, trimmed to lie in the size window."""
    k = int(rng.integers(1, pieces + 1))
    target = int(round(math.exp(rng.uniform(math.log(lo), math.log(hi)))))
    mask = np.zeros(giant.n_vertices, dtype=bool)
    for size in _split(target, k):
        start = int(rng.integers(giant.n_vertices))
        mask[kernels.grow_set(giant.indptr, giant.indices, start, max(size, 1),
                              rng.random(max(size, 1)))] = True
    return np.flatnonzero(mask)


def run_large_radii_iso(plan, samples=1000, delta=0.5, c2=1.0, C_prime=2.0, pieces=4):
    """Dense-regime boundary check with sets that need not be connected.

    Window ``c2 r^d <= |A| <= (1 - delta) |giant|``; sets are unions of up to
    ``pieces`` grown blobs. Also reports tile normality on the r_d tiling and
    the per-tile count: a normal tile with a normal neighbour has at least
    ``|A| vol / 20`` boundary edges. The per-tile count uses the loose band
    (1/2 to 2 times vol), because at desk scale vol is a few units and the
    19/20 to 21/20 band may hold no integer at all.
    """
    rows, notes = [], []
    normal_seeds = loose_seeds = tile_viol = tiles_checked = 0
    seeds_total = 0
    for ci, c in enumerate(plan.cells):
        regime = c.r ** c.d >= C_prime * math.log(c.n)
        if not regime:
            notes.append(f"n={c.n} r={c.r}: r^d < {C_prime} log n, outside the dense regime")
        per = _split(samples, len(c.seeds))
        for si, seed in enumerate(c.seeds):
            g, lab, giant = giant_of(c.config(seed))
            seeds_total += 1
            tiling = build_tiling(g, compute_r_d(c.n, c.d, c.r))
            cls = classify_normal(tiling)
            normal_seeds += bool(cls.normal_wide.all())
            loose_seeds += bool(cls.normal_loose.all())
            ok = cls.normal_loose.ravel()
            nb = np.zeros(tiling.shape, dtype=bool)
            for off in l1_offsets(c.d, 1):
                nb |= shifted(cls.normal_loose, off)
            for t in np.flatnonzero(ok & nb.ravel()):
                A = tiling.members(t)
                tiles_checked += 1
                if g.cut_size(A) < len(A) * tiling.vol / 20.0:
                    tile_viol += 1
            lo = int(math.ceil(c2 * c.r ** c.d))
            hi = int((1.0 - delta) * giant.n_vertices)
            if lo > hi:
                notes.append(f"window empty for n={c.n} seed={seed}")
                continue
            rng = np.random.default_rng(derive_seed(plan.master_seed, ci, si, 2))
            for _ in range(per[si]):
                A = _random_union(giant, rng, pieces, lo, hi)
                if not lo <= len(A) <= hi:
                    continue
                rows.append(_iso_row(c, seed, giant, A, lo, hi, lo, c.d + 1))
    rep = IsoReport(rows, notes)
    rep.extra = {"all_tiles_normal_fraction": normal_seeds / max(seeds_total, 1),
                 "all_tiles_loose_fraction": loose_seeds / max(seeds_total, 1),
                 "tile_checks": tiles_checked, "tile_violations": tile_viol}
    if rows:
        rep.extra["fitted_c"] = float(rep.ratios().min())
    return rep


# -- renormalisation -------------------------------------------------------

def _largest_fraction(mask):
    if not mask.any():
        return 0.0
    _, lab = closure_labels(mask, l1_offsets(mask.ndim, 1))
    return float(lab.sizes[0]) / mask.size


def run_renormalization(plan, M_grid=(15, 20, 30, 40)):
    """Useful-tile fraction against M, with an exponential tail fit.

    Counts are pooled over the plan's seeds (unclipped tiles only). The fit
    is ``log(1 - fraction)`` linear in M; points with fraction 1 are left
    out of the fit and listed. The useful field's largest l1 cluster is
    compared with a Bernoulli field of the same shape at the observed
    fraction.
    """
    out = {"cells": []}
    for ci, c in enumerate(plan.cells):
        graphs = [build_rgg(sample_ppp(c.config(s)), c.r) for s in c.seeds]
        per_M = []
        for mi, M in enumerate(M_grid):
            useful = kept = 0
            cluster, bern = [], []
            for si, g in enumerate(graphs):
                _, cls = classify_good_useful(g, M)
                k = ~cls.clipped
                useful += int(np.count_nonzero(cls.useful & k))
                kept += int(np.count_nonzero(k))
                cluster.append(_largest_fraction(cls.useful))
                p_hat = float(cls.useful.mean())
                field_ = sample_site_field(None, c.d, p_hat,
                                           derive_seed(plan.master_seed, ci, mi, si, 3),
                                           shape=cls.useful.shape)
                bern.append(_largest_fraction(field_.open))
            per_M.append({"M": M, "useful": useful, "tiles": kept,
                          "fraction": useful / kept if kept else float("nan"),
                          "useful_cluster": float(np.mean(cluster)),
                          "bernoulli_cluster": float(np.mean(bern))})
        fr = np.array([p["fraction"] for p in per_M])
        Ms = np.array([p["M"] for p in per_M], dtype=float)
        fit_ok = fr < 1.0
        rec = {"n": c.n, "r": c.r, "d": c.d, "seeds": list(c.seeds), "per_M": per_M,
               "increasing": bool(np.all(np.diff(fr) > 0)),
               "excluded_from_fit": Ms[~fit_ok].tolist()}
        if fit_ok.sum() >= 2:
            f = fit_line(Ms[fit_ok], np.log1p(-fr[fit_ok]), min_points=2)
            rec.update(slope=f.slope, intercept=f.intercept, r2=f.r2)
        out["cells"].append(rec)
    return out


# -- one dimension ---------------------------------------------------------

def suffix_boundaries(giant, samples, rng, delta=0.5):
    """Cut sizes of random suffix sets (vertices right of a threshold).

    Vertices are ordered by position, so a suffix is a set of consecutive
    vertices; sizes are uniform in ``[1, (1 - delta) |giant|]``.
    """
    order = np.argsort(giant.positions[:, 0], kind="stable")
    cuts, _ = prefix_cuts(giant, order[::-1])
    hi = max(1, int((1.0 - delta) * giant.n_vertices))
    sizes = rng.integers(1, hi + 1, size=int(samples))
    return sizes, cuts[sizes - 1]


def run_d1(plan, samples=1000, tol=1e-10):
    """Relaxation-time scaling in d = 1 and suffix-set boundary counts."""
    for c in plan.cells:
        if c.d != 1:
            raise ConfigError("run_d1 needs d = 1 cells")
    fit = run_scaling(plan, tol=tol)
    suffix = []
    for ci, c in enumerate(plan.cells):
        _, _, giant = giant_of(c.config(c.seeds[0]))
        rng = np.random.default_rng(derive_seed(plan.master_seed, ci, 4))
        sizes, cuts = suffix_boundaries(giant, samples, rng)
        ratio = cuts / c.r ** 2
        suffix.append({"n": c.n, "r": c.r, "samples": int(samples),
                       "min_ratio": float(ratio.min()), "median_ratio": float(np.median(ratio)),
                       "complete": bool(c.r >= c.n)})
    return {"fit": fit.record(), "suffix": suffix}


# -- supercriticality ------------------------------------------------------

def bracket_supercritical(n, d, radii, pilot_seeds=3, master_seed=0, threshold=0.5):
    """Accept r when the median giant fraction over pilot seeds is >= threshold."""
    out = []
    for i, r in enumerate(radii):
        fr = []
        for j in range(pilot_seeds):
            g, lab, _ = giant_of(RggConfig(n, d, r, derive_seed(master_seed, i, j, 5)))
            fr.append(lab.sizes[0] / g.n_vertices if g.n_vertices else 0.0)
        med = float(np.median(fr))
        out.append({"r": float(r), "median_giant_fraction": med, "accepted": med >= threshold})
    return out


# -- figure export ---------------------------------------------------------

def export_figure_csvs(prefix, n=16.0, r=1.0, seed=0, A=None):
    """Write the four figure CSVs (vertices, edges, tiles, gridlines) for a small 2-d instance.

    ``A`` defaults to the giant vertices in the left half of the square;
    ``A'`` is its interior (members whose neighbours all lie in A).
    """
    cfg = RggConfig(n, 2, r, seed)
    g, lab, giant = giant_of(cfg)
    giant_mask = as_mask(giant.vertex_ids, g.n_vertices)
    if A is None:
        A = np.flatnonzero(giant_mask & (g.positions[:, 0] < 0))
    A_mask = as_mask(A, g.n_vertices)
    d = os.path.dirname(prefix)
    if d:
        os.makedirs(d, exist_ok=True)
    return write_figure_csvs(prefix, g, giant_mask, A_mask, interior_set(g, A_mask))


def perc_report(m, d, p_grid, seed):
    """Largest open cluster fraction of Bernoulli site fields under one coupling."""
    base = sample_site_field(m, d, 0.0, seed)
    rows = []
    for p in p_grid:
        f = base.at(p)
        rows.append({"p": float(p), "open": float(f.open.mean()),
                     "largest": _largest_fraction(f.open)})
    return {"m": m, "d": d, "seed": seed, "shape": list(base.open.shape), "rows": rows}


def tiles_report(graph, rho=None):
    """Tile occupancy and normal flags on the r_d (or given) tiling."""
    cfg = graph.points.config
    rho = compute_r_d(cfg.volume_n, cfg.dim_d, graph.radius) if rho is None else rho
    tiling = build_tiling(graph, rho)
    cls = classify_normal(tiling)
    return {"rho": rho, "tiles": tiling.tile_count, "vol": tiling.vol,
            "normal_wide": int(cls.normal_wide.sum()), "normal_loose": int(cls.normal_loose.sum()),
            "normal_pairs": cls.normal_pairs(), "k": tiling.k,
            "min_count": int(tiling.counts.min()), "max_count": int(tiling.counts.max())}
