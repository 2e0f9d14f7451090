"""Cube tilings of the domain and the tile-level set decompositions.

Tiles are ``rho * i + [-rho/2, rho/2)^d`` for integer centres ``i`` in
``[-h, h]^d``, the largest symmetric block of tiles contained in the cube.
Tile arrays are indexed by ``i + h`` so they plug straight into the
lattice machinery in :mod:`geomix.lattice`.

Vertex sets passed to this module are masks or index arrays over the
vertices of the full graph (not giant-local ids); use :func:`to_global`
to lift giant-local sets.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .lattice import LatticeSet, closure_labels, l1_offsets, linf_offsets, shifted
from .structure import GiantSubgraph, as_mask, component_labels, gather_neighbors

_EPS = 1e-9


def compute_r_d(n, d, r):
    """Largest side ``<= r / (2 sqrt d)`` that divides the cube side an odd number of times."""
    side = float(n) ** (1.0 / d)
    return side / (2 * math.ceil(math.sqrt(d) * side / r - 0.5) + 1)


def lattice_k(r, rho, d):
    """Closure radius making tiles of connected vertex sets a lattice animal."""
    return math.ceil(r / (rho * math.sqrt(d)) - _EPS) * d


def to_global(g, A):
    """Lift a giant-local set to a mask over the full graph."""
    if isinstance(g, GiantSubgraph):
        mask = np.zeros(g.parent.n_vertices, dtype=bool)
        mask[g.vertex_ids[as_mask(A, g.n_vertices)]] = True
        return mask
    return as_mask(A, g.n_vertices)


@dataclass(frozen=True, eq=False)
class Tiling:
    """Tiles of side ``rho`` inside the cube, with the points assigned to them.

    Attributes
    ----------
    tile_of : ndarray of int
        Flat tile index of every point, -1 for points outside all tiles.
    counts : ndarray
        Points per tile, shape ``(2h+1,)*d``.
    """

    rho: float
    side: float
    dim: int
    h: int
    radius: float
    tile_of: np.ndarray
    counts: np.ndarray

    @property
    def shape(self):
        return (2 * self.h + 1,) * self.dim

    @property
    def tile_count(self):
        return (2 * self.h + 1) ** self.dim

    @property
    def vol(self):
        return self.rho ** self.dim

    @property
    def k(self):
        return lattice_k(self.radius, self.rho, self.dim)

    def centers(self):
        """Centres of all tiles, shape ``(m, d)``, in flat order."""
        grids = np.meshgrid(*[np.arange(-self.h, self.h + 1)] * self.dim, indexing="ij")
        return self.rho * np.stack([gr.ravel() for gr in grids], axis=1).astype(float)

    def lower_corners(self):
        return self.centers() - self.rho / 2.0

    def occupancy(self, A):
        """Per-tile count of the vertices in ``A`` (mask over all points)."""
        mask = as_mask(A, len(self.tile_of)) & (self.tile_of >= 0)
        return np.bincount(self.tile_of[mask], minlength=self.tile_count).reshape(self.shape)

    def members(self, flat_tile):
        return np.nonzero(self.tile_of == flat_tile)[0]


def build_tiling(graph, rho):
    """Tile the cube of ``graph`` with side ``rho`` and bin its points."""
    if not rho > 0:
        raise ConfigError("tile side must be positive")
    cfg = graph.points.config
    side, d = cfg.side, cfg.dim_d
    h = int(math.floor((side / rho - 1.0) / 2.0 + _EPS))
    if h < 0:
        raise ConfigError(f"tile side {rho} exceeds the cube side {side}")
    pos = graph.positions
    edge = rho * (h + 0.5)
    t = np.floor((pos + rho / 2.0) / rho).astype(np.int64)
    # rounding at the outer faces of the tiled block
    t[(t == h + 1) & (pos < edge)] = h
    t[(t == -h - 1) & (pos >= -edge)] = -h
    inside = np.all(np.abs(t) <= h, axis=1) if len(pos) else np.zeros(0, dtype=bool)
    tile_of = np.full(len(pos), -1, dtype=np.int64)
    if inside.any():
        tile_of[inside] = np.ravel_multi_index(tuple((t[inside] + h).T), (2 * h + 1,) * d)
    counts = np.bincount(tile_of[inside], minlength=(2 * h + 1) ** d).reshape((2 * h + 1,) * d)
    tile_of.setflags(write=False)
    counts.setflags(write=False)
    return Tiling(float(rho), side, d, h, float(graph.radius), tile_of, counts)


def tiles_of_set(tiling, A):
    """L_A: tiles holding at least one vertex of ``A``."""
    return LatticeSet(tiling.occupancy(A) > 0, tiling.k)


def interior_set(g, A):
    """A': vertices of A whose graph neighbours all lie in A (mask over g)."""
    mask = as_mask(A, g.n_vertices)
    rows = np.repeat(np.arange(g.n_vertices), g.degrees)
    outside = np.bincount(rows[~mask[g.indices]], minlength=g.n_vertices)
    return mask & (outside == 0)


def set_components(g, A):
    """Components of the subgraph induced by ``A``, as index arrays (largest first)."""
    ids = np.flatnonzero(as_mask(A, g.n_vertices))
    if not len(ids):
        return []
    return [ids[c] for c in set_components_subset(g, ids)]


def interior_core(g, A_prime, n, d, vol, mu):
    """A'' and the list of large components of A'.

    Keeps the components of A' with at least ``mu (log n)^(d/(d-1)) vol``
    vertices; ``vol`` is the tile volume of the ``r_d`` tiling.
    """
    if d < 2:
        raise ConfigError("the core threshold needs d >= 2")
    thresh = mu * math.log(n) ** (d / (d - 1)) * vol if mu > 0 else 0.0
    comps = [c for c in set_components(g, A_prime) if len(c) >= thresh]
    core = np.zeros(g.n_vertices, dtype=bool)
    for c in comps:
        core[c] = True
    return core, comps


def dense_tiles(tiling, A):
    """T_A: nonempty tiles where at least half of the vertices lie in ``A``."""
    in_a = tiling.occupancy(A)
    return LatticeSet((tiling.counts > 0) & (2 * in_a >= tiling.counts), tiling.k)


def augmented_animals(tiling, T_A, A_core, k=None):
    """Maximal k-lattice animals of T_A that contain a vertex of A''."""
    k = tiling.k if k is None else k
    labels, lab = closure_labels(T_A.mask, l1_offsets(tiling.dim, k))
    touched = tiling.occupancy(A_core) > 0
    hit = np.unique(labels[touched & T_A.mask])
    return [LatticeSet(labels == c, k) for c in hit.tolist()]


def complement_components(tiling, animals, giant_mask, A):
    """*-components of the tiles outside all animals holding a giant vertex not in A."""
    covered = np.zeros(tiling.shape, dtype=bool)
    for L in animals:
        covered |= L.mask
    rest = as_mask(giant_mask, len(tiling.tile_of)) & ~as_mask(A, len(tiling.tile_of))
    holds = tiling.occupancy(rest) > 0
    labels, lab = closure_labels(~covered, linf_offsets(tiling.dim))
    hit = np.unique(labels[holds & ~covered])
    return [LatticeSet(labels == c, tiling.k) for c in hit.tolist()]


@dataclass(frozen=True, eq=False)
class TileClassification:
    """Per-tile flags on one tiling; unset flags are None."""

    normal_wide: np.ndarray = None
    normal_loose: np.ndarray = None
    good: np.ndarray = None
    good_enlarged: np.ndarray = None
    useful: np.ndarray = None
    clipped: np.ndarray = None
    in_T_A: np.ndarray = None
    in_L_A: np.ndarray = None

    def normal_pairs(self, which="loose"):
        """Number of l1-adjacent tile pairs with both tiles normal."""
        mask = self.normal_loose if which == "loose" else self.normal_wide
        return normal_pair_count(mask)

    def useful_fraction(self):
        """Fraction of useful tiles among those whose enlarged tile is unclipped."""
        keep = ~self.clipped
        if not keep.any():
            return float("nan")
        return float(np.count_nonzero(self.useful & keep)) / int(np.count_nonzero(keep))


def normal_pair_count(mask):
    d = mask.ndim
    return int(sum(np.count_nonzero(mask & shifted(mask, np.eye(d, dtype=np.int64)[a]))
                   for a in range(d)))


def classify_normal(tiling, A=None):
    """Normal flags (wide 19/20..21/20 and loose 1/2..2 of the tile volume)."""
    c, v = tiling.counts, tiling.vol
    kw = {}
    if A is not None:
        kw = {"in_T_A": dense_tiles(tiling, A).mask, "in_L_A": tiles_of_set(tiling, A).mask}
    return TileClassification(
        normal_wide=(c >= 0.95 * v) & (c <= 1.05 * v),
        normal_loose=(c >= 0.5 * v) & (c <= 2.0 * v), **kw)


def euclidean_diameter(pts, exact_cap=2000):
    """Maximum pairwise distance; exact for small sets, hull-based otherwise."""
    if len(pts) < 2:
        return 0.0
    if pts.shape[1] == 1:
        return float(pts.max() - pts.min())
    if len(pts) > exact_cap:
        from scipy.spatial import ConvexHull
        pts = pts[ConvexHull(pts).vertices]
    best = 0.0
    for s in range(0, len(pts), 512):
        blk = pts[s:s + 512]
        sq = np.zeros((len(blk), len(pts)))
        for a in range(pts.shape[1]):
            diff = blk[:, None, a] - pts[None, :, a]
            sq += diff * diff
        best = max(best, float(sq.max()))
    return math.sqrt(best)


def _diameter_at_least(pts, threshold):
    span = pts.max(axis=0) - pts.min(axis=0)
    if span.max() >= threshold:
        return True
    if math.sqrt(float(span @ span)) < threshold:
        return False
    return euclidean_diameter(pts) >= threshold


class _BoxQuery:
    """Vertices inside axis boxes, using the first-coordinate sort of the points."""

    def __init__(self, graph):
        self.graph = graph
        self.pos = graph.positions
        self.x0 = np.ascontiguousarray(self.pos[:, 0])
        self.sorted = bool(np.all(np.diff(self.x0) >= 0))

    def ids(self, lo, hi):
        if self.sorted:
            a, b = np.searchsorted(self.x0, [lo[0], hi[0]], side="left")
            cand = np.arange(a, b)
        else:
            cand = np.arange(len(self.x0))
        p = self.pos[cand]
        keep = np.all((p >= lo) & (p < hi), axis=1)
        return cand[keep]


def _has_crossing(graph, pos, ids, lo, hi, r):
    if not len(ids):
        return False
    p = pos[ids]
    for comp in set_components_subset(graph, ids):
        q = p[comp]
        if np.all(q.min(axis=0) - lo <= r) and np.all(hi - q.max(axis=0) <= r):
            return True
    return False


def set_components_subset(graph, ids):
    """Components of the subgraph induced by ``ids``, as positions into ``ids``."""
    lut = np.full(graph.n_vertices, -1, dtype=np.int64)
    lut[ids] = np.arange(len(ids))
    src, nb = gather_neighbors(graph.indptr, graph.indices, ids)
    keep = (lut[nb] >= 0) & (src < nb)
    lab = component_labels(len(ids), lut[src[keep]], lut[nb[keep]])
    order = np.argsort(lab.labels, kind="stable")
    return np.split(order, np.cumsum(lab.sizes)[:-1])


def is_good_box(graph, query, center, side, r, half_side):
    """Goodness of the box ``center + [-side/2, side/2)^d`` clipped to the cube."""
    d = len(center)
    lo = np.maximum(center - side / 2.0, -half_side)
    hi = np.minimum(center + side / 2.0, half_side)
    ids = query.ids(lo, hi)
    if not len(ids):
        return False
    pos = query.pos
    mid = center
    for corner in range(2 ** d):
        bits = np.array([(corner >> a) & 1 for a in range(d)], dtype=bool)
        slo = np.where(bits, mid, lo)
        shi = np.where(bits, hi, mid)
        sub = ids[np.all((pos[ids] >= slo) & (pos[ids] < shi), axis=1)]
        if not _has_crossing(graph, pos, sub, slo, shi, r):
            return False
    big = 0
    for comp in set_components_subset(graph, ids):
        if _diameter_at_least(pos[ids[comp]], side / 5.0):
            big += 1
            if big > 1:
                return False
    return big == 1


def classify_good_useful(graph, M, r=None):
    """Good and useful flags on the renormalisation tiling.

    Tiles have side ``rho = 2 (3M/10 - 1) r`` and enlarged tiles side ``M r``
    share their centres. Enlarged tiles that stick out of the cube are
    clipped and flagged.

    Returns
    -------
    tiling : Tiling
    classification : TileClassification
    """
    r = graph.radius if r is None else float(r)
    if not M > 10.0 / 3.0:
        raise ConfigError("M must exceed 10/3 so the tile side is positive")
    rho = 2.0 * (3.0 * M / 10.0 - 1.0) * r
    tiling = build_tiling(graph, rho)
    query = _BoxQuery(graph)
    half_side = tiling.side / 2.0
    centers = tiling.centers()
    good = np.zeros(tiling.tile_count, dtype=bool)
    good_big = np.zeros(tiling.tile_count, dtype=bool)
    clipped = np.zeros(tiling.tile_count, dtype=bool)
    big = M * r
    for t, c in enumerate(centers):
        clipped[t] = bool(np.any(np.abs(c) + big / 2.0 > half_side + _EPS))
        good[t] = is_good_box(graph, query, c, rho, r, half_side)
        if good[t]:
            good_big[t] = is_good_box(graph, query, c, big, r, half_side)
    shape = tiling.shape
    cls = TileClassification(good=good.reshape(shape), good_enlarged=good_big.reshape(shape),
                             useful=(good & good_big).reshape(shape),
                             clipped=clipped.reshape(shape))
    return tiling, cls


def write_figure_csvs(prefix, graph, giant_mask, A, A_prime, r_d=None):
    """Write the vertices, edges, tiles and gridline CSV files for a 2-d instance.

    Coordinates are shifted to ``[0, side)``. The tiles file lists L_A with
    flag 1 for tiles in T_A and 0 otherwise, by lower-left corner and side.
    Returns the four file paths.
    """
    cfg = graph.points.config
    if cfg.dim_d != 2:
        raise ConfigError("figure export is two-dimensional")
    r_d = compute_r_d(cfg.volume_n, 2, graph.radius) if r_d is None else r_d
    tiling = build_tiling(graph, r_d)
    n = graph.n_vertices
    giant_mask, A, A_prime = (as_mask(x, n) for x in (giant_mask, A, A_prime))
    shift = cfg.side / 2.0
    paths = [f"{prefix}V1.csv", f"{prefix}E1.csv", f"{prefix}T1.csv", f"{prefix}G1.csv"]
    with open(paths[0], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y", "giant", "A", "Aprime"])
        for i, (x, y) in enumerate(graph.positions + shift):
            w.writerow([i, f"{x:.6f}", f"{y:.6f}", int(giant_mask[i]), int(A[i]), int(A_prime[i])])
    with open(paths[1], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j"])
        w.writerows(zip(*(e.tolist() for e in graph.edges())))
    in_l = tiles_of_set(tiling, A).mask.ravel()
    in_t = dense_tiles(tiling, A).mask.ravel()
    corners = tiling.lower_corners() + shift
    with open(paths[2], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["flag", "x", "y", "side"])
        for t in np.flatnonzero(in_l | in_t):
            w.writerow([int(in_t[t]), f"{corners[t, 0]:.6f}", f"{corners[t, 1]:.6f}", f"{r_d:.6f}"])
    with open(paths[3], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x"])
        for j in range(int(round(cfg.side / r_d)) + 1):
            w.writerow([f"{j * r_d:.6f}"])
    return paths
