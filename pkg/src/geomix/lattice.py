"""Site sets on the box lattice: boundaries, matchings, animals, percolation.

A lattice set is a boolean mask over a box of sites. Sites are ordered by
their flat (C-order) index, which fixes every tie-break and edge order.
Three adjacency notions are used: unit l1 steps (plain), unit l-infinity
steps (starred) and l1 distance at most k (the k-closure, whose connected
sets are k-lattice animals).
"""

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .structure import component_labels


def lattice_shape(m, d):
    """Box shape of the integer points in ``[-m^(1/d)/2, m^(1/d)/2)^d``."""
    half = float(m) ** (1.0 / d) / 2.0
    lo = math.ceil(-half - 1e-12)
    hi = math.ceil(half - 1e-12)
    return (hi - lo,) * d


def l1_offsets(d, k=1):
    """Nonzero integer vectors with l1 norm at most ``k``."""
    rng = range(-k, k + 1)
    return np.array([o for o in itertools.product(rng, repeat=d)
                     if 0 < sum(map(abs, o)) <= k], dtype=np.int64).reshape(-1, d)


def linf_offsets(d):
    return np.array([o for o in itertools.product((-1, 0, 1), repeat=d) if any(o)],
                    dtype=np.int64)


def _half(offsets):
    """Keep one of each +/- pair (first nonzero coordinate positive)."""
    keep = [o for o in offsets if o[np.nonzero(o)[0][0]] > 0]
    return np.array(keep, dtype=np.int64).reshape(-1, offsets.shape[1])


def shifted(mask, off):
    """``out[x] = mask[x + off]``, False where ``x + off`` leaves the box."""
    out = np.zeros_like(mask)
    src, dst = [], []
    for o, n in zip(off, mask.shape):
        o = int(o)
        if abs(o) >= n:
            return out
        src.append(slice(max(o, 0), n + min(o, 0)))
        dst.append(slice(max(-o, 0), n - max(o, 0)))
    out[tuple(dst)] = mask[tuple(src)]
    return out


@dataclass(frozen=True, eq=False)
class LatticeSet:
    """Membership mask over a box of sites; ``k`` is the closure radius."""

    mask: np.ndarray
    k: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        m = np.asarray(self.mask, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def shape(self):
        return self.mask.shape

    @property
    def dim(self):
        return self.mask.ndim

    @property
    def size(self):
        return int(np.count_nonzero(self.mask))

    @property
    def sites(self):
        return np.flatnonzero(self.mask)

    def complement(self):
        return LatticeSet(~self.mask, self.k)

    @classmethod
    def from_sites(cls, shape, sites, k=1):
        """Build from flat indices or an ``(p, d)`` array of coordinates."""
        mask = np.zeros(shape, dtype=bool)
        sites = np.asarray(sites, dtype=np.int64)
        if sites.ndim == 2:
            mask[tuple(sites.T)] = True
        else:
            mask.flat[sites] = True
        return cls(mask, k)


@dataclass(frozen=True, eq=False)
class Boundaries:
    """Vertex boundaries (masks) and edge boundaries (``(p, 2)`` flat pairs).

    Edge pairs are stored as ``(min, max)`` and sorted lexicographically.
    """

    outer: np.ndarray
    inner: np.ndarray
    outer_star: np.ndarray
    inner_star: np.ndarray
    edges: np.ndarray
    edges_star: np.ndarray


@functools.lru_cache(maxsize=64)
def _pair_table(shape, star):
    """All unordered adjacent site pairs ``(min, max)`` of the box, sorted."""
    d = len(shape)
    offsets = linf_offsets(d) if star else l1_offsets(d, 1)
    full = np.ones(shape, dtype=bool)
    flat = np.arange(full.size, dtype=np.int64).reshape(shape)
    out = []
    for off in _half(offsets):
        x = flat[shifted(full, off)]
        coords = np.array(np.unravel_index(x, shape)) + off[:, None]
        y = np.ravel_multi_index(tuple(coords), shape)
        out.append(np.stack([np.minimum(x, y), np.maximum(x, y)], axis=1))
    pairs = np.concatenate(out) if out else np.zeros((0, 2), dtype=np.int64)
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    pairs.setflags(write=False)
    return pairs


def _cut_and_touch(mask, star):
    pairs = _pair_table(mask.shape, star)
    m = mask.ravel()
    cut = pairs[m[pairs[:, 0]] != m[pairs[:, 1]]]
    touch = np.zeros(mask.size, dtype=bool)
    touch[cut.ravel()] = True
    return cut, touch.reshape(mask.shape)


def boundaries(K):
    """All six boundary objects of ``K`` inside its box.

    Every cut pair has one end in K and one outside, so the vertex
    boundaries are the two sides of the cut pairs. The starred internal
    boundary is taken as the sites of K with an l-infinity neighbour
    outside K, mirroring the plain definition.
    """
    mask = K.mask
    edges, touch = _cut_and_touch(mask, False)
    edges_star, touch_s = _cut_and_touch(mask, True)
    return Boundaries(
        outer=touch & ~mask,
        inner=touch & mask,
        outer_star=touch_s & ~mask,
        inner_star=touch_s & mask,
        edges=edges,
        edges_star=edges_star,
    )


def greedy_disjoint_matching(K, field=None):
    """Greedy vertex-disjoint subset of E(K, K^c).

    Edges are scanned in lexicographic ``(min site, max site)`` order and
    kept when neither endpoint is used yet. Every boundary edge shares an
    endpoint with a kept edge, and each kept edge blocks at most ``4d - 1``
    others, so ``|D| >= |E(K, K^c)| / (4d)``.

    Returns
    -------
    D : ndarray, shape (p, 2)
    open_pairs : int
        Members of D with both endpoints open in ``field`` (0 without field).
    """
    pairs = boundaries(K).edges
    used = set()
    keep = []
    for a, b in pairs.tolist():
        if a in used or b in used:
            continue
        used.add(a)
        used.add(b)
        keep.append((a, b))
    D = np.array(keep, dtype=np.int64).reshape(-1, 2)
    open_pairs = 0
    if field is not None and len(D):
        flat = field.open.ravel()
        open_pairs = int(np.count_nonzero(flat[D[:, 0]] & flat[D[:, 1]]))
    return D, open_pairs


@dataclass(frozen=True, eq=False)
class SiteField:
    """Bernoulli(p) site percolation built from stored uniforms.

    Site x is open iff ``uniforms[x] < p``; reusing the uniforms with a
    larger p gives a superset, which is the monotone coupling.
    """

    open: np.ndarray
    p: float
    seed: int
    uniforms: np.ndarray

    def at(self, p):
        return SiteField(self.uniforms < p, float(p), self.seed, self.uniforms)


def sample_site_field(m, d, p, seed, shape=None):
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    shape = tuple(shape) if shape is not None else lattice_shape(m, d)
    u = np.random.default_rng(seed).random(shape)
    u.setflags(write=False)
    return SiteField(u < p, float(p), int(seed), u)


def closure_labels(mask, offsets):
    """Rank components of ``mask`` under the adjacency given by ``offsets``.

    Returns ``(labels, labeling)`` where ``labels`` is -1 off the mask and the
    component rank on it (largest first, ties by smallest flat index).
    """
    sites = np.flatnonzero(mask)
    lut = np.full(mask.size, -1, dtype=np.int64)
    lut[sites] = np.arange(len(sites))
    flat = np.arange(mask.size, dtype=np.int64).reshape(mask.shape)
    us, vs = [], []
    for off in _half(offsets):
        both = mask & shifted(mask, off)
        x = flat[both]
        if not len(x):
            continue
        coords = np.array(np.unravel_index(x, mask.shape)) + off[:, None]
        y = np.ravel_multi_index(tuple(coords), mask.shape)
        us.append(lut[x])
        vs.append(lut[y])
    u = np.concatenate(us) if us else np.zeros(0, dtype=np.int64)
    v = np.concatenate(vs) if vs else np.zeros(0, dtype=np.int64)
    lab = component_labels(len(sites), u, v)
    labels = np.full(mask.shape, -1, dtype=np.int64)
    labels.flat[sites] = lab.labels
    return labels, lab


def components(K, kind="l1"):
    """Component masks of K (largest first) for ``kind`` in l1 / star / k."""
    d = K.dim
    offsets = {"l1": lambda: l1_offsets(d, 1), "star": lambda: linf_offsets(d),
               "k": lambda: l1_offsets(d, K.k)}[kind]()
    labels, lab = closure_labels(K.mask, offsets)
    return [labels == c for c in range(lab.n_components)]


def largest_open_component(field):
    """F_m: the largest l1-connected open set (ties by smallest site index)."""
    if not field.open.any():
        return LatticeSet(np.zeros_like(field.open))
    labels, _ = closure_labels(field.open, l1_offsets(field.open.ndim, 1))
    return LatticeSet(labels == 0)


def is_connected(mask, offsets):
    if not mask.any():
        return True
    _, lab = closure_labels(mask, offsets)
    return lab.n_components == 1


def min_closure_radius(mask, k_max=None):
    """Smallest k such that ``mask`` is a k-lattice animal (None if none <= k_max)."""
    d = mask.ndim
    k_max = k_max or sum(mask.shape)
    if is_connected(mask, l1_offsets(d, 1)):
        return 1
    lo, hi = 1, k_max
    if not is_connected(mask, l1_offsets(d, hi)):
        return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if is_connected(mask, l1_offsets(d, mid)):
            hi = mid
        else:
            lo = mid
    return hi


def lattice_csr(shape, offsets):
    """CSR adjacency of the box lattice under ``offsets`` (flat indices)."""
    from .geometry import csr_from_edges
    full = np.ones(shape, dtype=bool)
    flat = np.arange(full.size, dtype=np.int64).reshape(shape)
    us, vs = [], []
    for off in _half(offsets):
        x = flat[shifted(full, off)]
        coords = np.array(np.unravel_index(x, shape)) + off[:, None]
        us.append(x)
        vs.append(np.ravel_multi_index(tuple(coords), shape))
    return csr_from_edges(full.size, np.concatenate(us), np.concatenate(vs))


def animal_open_fraction(field, k, size_lo, samples, seed):
    """Minimum open fraction over sampled k-lattice animals of size >= size_lo.

    Animals are grown by random-frontier growth in the k-closure, with
    target sizes uniform in ``[size_lo, 4 size_lo]``.
    """
    shape = field.open.shape
    indptr, indices = lattice_csr(shape, l1_offsets(len(shape), k))
    rng = np.random.default_rng(seed)
    flat = field.open.ravel()
    lo = max(1, int(math.ceil(size_lo)))
    worst = 1.0
    for _ in range(int(samples)):
        target = int(rng.integers(lo, 4 * lo + 1))
        start = int(rng.integers(flat.size))
        members = kernels.grow_set(indptr, indices, start, target, rng.random(target))
        worst = min(worst, float(flat[members].mean()))
    return worst


@dataclass(frozen=True)
class LatticeIso:
    ratio: float
    size: int
    edge_boundary: int
    in_range: bool


def lattice_iso_check(K, eps=0.1):
    """``|E(K, K^c)| / |K|^((d-1)/d)``; ``in_range`` flags ``|K| <= (2/3)(1-eps)m``."""
    size = K.size
    if size == 0:
        raise ValueError("K must be nonempty")
    d = K.dim
    e = len(boundaries(K).edges)
    m = K.mask.size
    return LatticeIso(e / size ** ((d - 1) / d), size, e, size <= (2.0 / 3.0) * (1 - eps) * m)
