"""Poisson point clouds in the cube and their radius-r geometric graphs."""

import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError

MAGIC = b"RGG1"
_HEADER = struct.Struct("<4sIddQQQ")


@dataclass(frozen=True)
class RggConfig:
    """Parameters of one random geometric graph instance.

    ``volume_n`` is both the cube volume and the expected number of points.
    """

    volume_n: float
    dim_d: int
    radius_r: float
    seed: int = 0

    def __post_init__(self):
        n = self.volume_n
        if not np.isfinite(n) or n <= 0:
            raise ConfigError(f"volume_n must be finite and positive, got {n!r}")
        if int(self.dim_d) != self.dim_d or self.dim_d < 1:
            raise ConfigError(f"dim_d must be an integer >= 1, got {self.dim_d!r}")
        if not np.isfinite(self.radius_r) or self.radius_r <= 0:
            raise ConfigError(f"radius_r must be positive, got {self.radius_r!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")

    @property
    def side(self):
        return float(self.volume_n) ** (1.0 / self.dim_d)

    @property
    def trivially_complete(self):
        """True when r exceeds the cube side (graph is (nearly) complete)."""
        return self.radius_r > self.side


@dataclass(frozen=True, eq=False)
class PointSet:
    """Points of the Poisson process, sorted by first coordinate."""

    positions: np.ndarray
    config: RggConfig

    @property
    def count(self):
        return self.positions.shape[0]

    @property
    def dim(self):
        return self.config.dim_d

    @property
    def side(self):
        return self.config.side


def sample_ppp(config):
    """Sample a unit-intensity Poisson point process in the cube of ``config``.

    The count is Poisson(volume_n) and coordinates are i.i.d. uniform on
    ``[-side/2, side/2)``. Identical configs give byte-identical output.
    """
    if not isinstance(config, RggConfig):
        raise ConfigError("sample_ppp expects an RggConfig")
    rng = np.random.default_rng(int(config.seed))
    count = int(rng.poisson(config.volume_n))
    half = config.side / 2.0
    pos = rng.uniform(-half, half, size=(count, config.dim_d))
    # uniform() may round up to the open endpoint
    pos[pos >= half] = np.nextafter(half, -np.inf)
    order = np.lexsort(pos.T[::-1])
    pos = np.ascontiguousarray(pos[order])
    pos.setflags(write=False)
    return PointSet(pos, config)


def points_from_array(positions, volume_n, r=1.0, seed=0):
    """Wrap explicit coordinates (tests, synthetic layouts) as a PointSet."""
    pos = np.ascontiguousarray(np.atleast_2d(np.asarray(positions, dtype=np.float64)))
    if pos.size == 0:
        pos = pos.reshape(0, pos.shape[-1] if pos.ndim == 2 else 1)
    cfg = RggConfig(float(volume_n), pos.shape[1], float(r), int(seed))
    half = cfg.side / 2.0
    if pos.size and (pos.min() < -half or pos.max() >= half):
        raise ConfigError("positions must lie in [-side/2, side/2)")
    pos.setflags(write=False)
    return PointSet(pos, cfg)


def csr_from_edges(n, u, v):
    """Symmetric CSR arrays from an undirected edge list with u != v."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    order = np.lexsort((cols, rows))
    indices = np.ascontiguousarray(cols[order])
    counts = np.bincount(rows, minlength=n) if n else np.zeros(0, dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, indices


def as_mask(A, n):
    """Normalise a vertex set given as bool mask or index array to a mask."""
    arr = np.asarray(A)
    if arr.dtype == bool:
        if arr.shape != (n,):
            raise ValueError(f"mask has shape {arr.shape}, expected ({n},)")
        return arr
    mask = np.zeros(n, dtype=bool)
    if arr.size:
        mask[arr.astype(np.int64)] = True
    return mask


def gather_neighbors(indptr, indices, verts):
    """Concatenated neighbour lists of ``verts`` and the owning vertex of each."""
    verts = np.asarray(verts, dtype=np.int64)
    cnt = indptr[verts + 1] - indptr[verts]
    total = int(cnt.sum())
    base = np.repeat(indptr[verts] - np.cumsum(cnt) + cnt, cnt)
    return np.repeat(verts, cnt), indices[base + np.arange(total)]


class CSRGraph:
    """Shared accessors for the immutable CSR graph types."""

    @property
    def n_vertices(self):
        return len(self.indptr) - 1

    def neighbors(self, v):
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edges(self):
        """Return ``(u, v)`` arrays with ``u < v`` in lexicographic order."""
        rows = np.repeat(np.arange(self.n_vertices, dtype=np.int64), self.degrees)
        keep = rows < self.indices
        return rows[keep], self.indices[keep]

    def cut_size(self, A):
        """Number of edges with exactly one endpoint in ``A``."""
        mask = as_mask(A, self.n_vertices)
        src, nb = gather_neighbors(self.indptr, self.indices, np.nonzero(mask)[0])
        return int(np.count_nonzero(~mask[nb]))


@dataclass(frozen=True, eq=False)
class SpatialGraph(CSRGraph):
    """Immutable radius graph in CSR form.

    Neighbour lists are sorted by vertex index. ``edge_count`` equals half
    the degree sum.
    """

    points: PointSet
    radius: float
    indptr: np.ndarray
    indices: np.ndarray
    degrees: np.ndarray = field(init=False)
    edge_count: int = field(init=False)

    def __post_init__(self):
        deg = np.diff(self.indptr)
        for arr in (self.indptr, self.indices, deg):
            arr.setflags(write=False)
        object.__setattr__(self, "degrees", deg)
        object.__setattr__(self, "edge_count", int(deg.sum()) // 2)

    @property
    def positions(self):
        return self.points.positions


def _grid_shape(count, side, r, d):
    g = max(1, int(np.floor(side / r)))
    # keep the cell table O(N); larger cells stay correct (side >= r)
    cap = max(1, int(np.floor((4 * count + 1) ** (1.0 / d))))
    return min(g, cap)


def build_rgg(points, r):
    """Build the graph joining every pair at Euclidean distance <= r.

    A cell grid of side >= r restricts the search to the 3^d cells around
    each point. Distances are compared squared, so the boundary test is
    ``|x - y|^2 <= r^2`` in double precision.
    """
    if not r > 0:
        raise ConfigError("radius must be positive")
    n = points.count
    d = points.dim
    side = points.side
    if n == 0:
        indptr = np.zeros(1, dtype=np.int64)
        return SpatialGraph(points, float(r), indptr, np.zeros(0, dtype=np.int64))
    if r > side * np.sqrt(d):
        warnings.warn("radius exceeds the cube diameter; graph is complete", stacklevel=2)
    g = _grid_shape(n, side, r, d)
    u, v = kernels.radius_pairs(np.ascontiguousarray(points.positions), -side / 2.0,
                                side / g, g, float(r) * float(r))
    indptr, indices = csr_from_edges(n, u, v)
    return SpatialGraph(points, float(r), indptr, indices)


def brute_force_edges(positions, r):
    """All-pairs oracle: ``(u, v)`` with ``u < v``, lexicographically sorted."""
    pos = np.asarray(positions, dtype=np.float64)
    n, d = pos.shape
    sq = np.zeros((n, n))
    for a in range(d):
        diff = pos[:, None, a] - pos[None, :, a]
        sq += diff * diff
    iu, ju = np.triu_indices(n, k=1)
    keep = sq[iu, ju] <= float(r) * float(r)
    return iu[keep].astype(np.int64), ju[keep].astype(np.int64)


def write_graph(path, graph):
    """Binary dump: RGG1 header, positions, then CSR adjacency (little endian)."""
    cfg = graph.points.config
    header = _HEADER.pack(MAGIC, cfg.dim_d, float(cfg.volume_n), float(graph.radius),
                          int(cfg.seed), graph.n_vertices, graph.edge_count)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(graph.positions, dtype="<f8").tobytes())
        fh.write(np.asarray(graph.indptr, dtype="<u8").tobytes())
        fh.write(np.asarray(graph.indices, dtype="<u8").tobytes())


def read_graph(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, d, n, r, seed, nv, ne = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError(f"{path}: not an RGG1 file")
    off = _HEADER.size
    pos = np.frombuffer(raw, dtype="<f8", count=nv * d, offset=off).reshape(nv, d)
    off += 8 * nv * d
    indptr = np.frombuffer(raw, dtype="<u8", count=nv + 1, offset=off).astype(np.int64)
    off += 8 * (nv + 1)
    indices = np.frombuffer(raw, dtype="<u8", count=2 * ne, offset=off).astype(np.int64)
    pos = np.ascontiguousarray(pos)
    pos.setflags(write=False)
    pts = PointSet(pos, RggConfig(n, d, r, seed))
    return SpatialGraph(pts, r, indptr, indices)


def write_edge_list(path, graph):
    """Plain-text export, one ``i j`` line per edge (0-based, i < j)."""
    u, v = graph.edges()
    with open(path, "w") as fh:
        for a, b in zip(u.tolist(), v.tolist()):
            fh.write(f"{a} {b}\n")
