"""Continuous-time random walk: heat kernel, total variation, mixing times.

The walk jumps at the times of a rate-1 Poisson clock, so

    H_t = sum_k e^-t t^k / k! P^k .

``heat_kernel_row`` evaluates this series (uniformization) with the tail
cut where the remaining Poisson mass drops below ``tol``. Worst-case
distances for whole graphs use the eigendecomposition of the symmetrised
operator, which gives every row at once and is exact up to rounding.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, pdtrc

from . import kernels
from .errors import DimensionMismatch, Disconnected, TooLarge
from .spectral import adjacency_matrix, symmetric_operator
from .structure import stationary_distribution

ROW_LIMIT = 5000
ALL_ROWS_LIMIT = 500
EXTREMAL_ROWS = 32


def poisson_cutoff(t, tol):
    """Smallest N with ``P(Poisson(t) > N) < tol``."""
    if t == 0:
        return 0
    n = max(0, int(t + 5.0 * math.sqrt(t)) - 1)
    while n > 0 and pdtrc(n - 1, t) < tol:
        n -= 1
    while pdtrc(n, t) >= tol:
        n += 1
    return n


def _poisson_weights(t, N):
    k = np.arange(N + 1)
    if t == 0:
        w = np.zeros(N + 1)
        w[0] = 1.0
        return w
    return np.exp(-t + k * math.log(t) - gammaln(k + 1))


def heat_kernel_rows(g, rows, t, tol=1e-12):
    """``H_t(x, .)`` for each x in ``rows`` (array of shape ``(len(rows), n)``)."""
    n = g.n_vertices
    if n > ROW_LIMIT:
        raise TooLarge(f"heat kernel rows are limited to {ROW_LIMIT} vertices")
    if t < 0:
        raise ValueError("t must be nonnegative")
    rows = np.atleast_1d(np.asarray(rows, dtype=np.int64))
    N = poisson_cutoff(t, tol)
    w = _poisson_weights(t, N)
    A = adjacency_matrix(g)
    deg = g.degrees.astype(float)
    mu = np.zeros((n, len(rows)))
    mu[rows, np.arange(len(rows))] = 1.0
    out = w[0] * mu
    for k in range(1, N + 1):
        # row vector times P, i.e. A (mu / deg) for column-stored rows
        mu = A @ (mu / deg[:, None])
        out += w[k] * mu
    return out.T


def heat_kernel_row(g, x, t, tol=1e-12):
    """Law at time t of the walk started at x, by truncated uniformization."""
    return heat_kernel_rows(g, [x], t, tol)[0]


def tv_distance(mu, nu):
    """Half the L1 distance along the last axis."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape[-1] != nu.shape[-1]:
        raise DimensionMismatch(f"supports differ: {mu.shape[-1]} vs {nu.shape[-1]}")
    return 0.5 * np.abs(mu - nu).sum(axis=-1)


class SpectralKernel:
    """All heat-kernel rows from one dense eigendecomposition.

    ``H_t = D^-1/2 U exp(-t (1 - L)) U^T D^1/2`` with ``S = U L U^T``.
    """

    def __init__(self, g):
        S = symmetric_operator(g).toarray()
        lam, U = np.linalg.eigh((S + S.T) / 2.0)
        self.pi = stationary_distribution(g)
        s = np.sqrt(self.pi)
        self.left = U / s[:, None]
        self.right = U.T * s[None, :]
        self.rate = 1.0 - lam

    def rows(self, t, rows=None):
        left = self.left if rows is None else self.left[rows]
        return (left * np.exp(-t * self.rate)[None, :]) @ self.right

    def worst_tv(self, t, rows=None):
        return float(tv_distance(self.rows(t, rows), self.pi).max())


def extremal_rows(g, count=EXTREMAL_ROWS):
    """Start vertices for heuristic worst-case TV on large graphs.

    Highest and lowest degrees, the vertices nearest each corner of the
    cube, then those farthest from its centre, up to ``count`` rows.
    """
    picks = []
    order = np.argsort(g.degrees, kind="stable")
    picks += order[:count // 4].tolist() + order[-(count // 4):].tolist()
    pos = np.asarray(g.positions)
    if len(pos):
        d = pos.shape[1]
        half = g.points.side / 2.0
        for c in range(min(2 ** d, count // 4)):
            corner = np.array([half if (c >> a) & 1 else -half for a in range(d)])
            picks.append(int(np.argmin(((pos - corner) ** 2).sum(axis=1))))
        far = np.argsort(-(pos ** 2).sum(axis=1), kind="stable")
        picks += far[:count].tolist()
    seen, out = set(), []
    for p in picks:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return np.array(out[:count], dtype=np.int64)


def _kernel(g):
    if g.n_vertices > ROW_LIMIT:
        raise TooLarge(f"exact mixing is limited to {ROW_LIMIT} vertices")
    rows = None if g.n_vertices <= ALL_ROWS_LIMIT else extremal_rows(g)
    return SpectralKernel(g), rows


def worst_case_tv(g, t, kernel=None):
    """``max_x ||H_t(x, .) - pi||_TV`` and whether the max was heuristic."""
    K, rows = kernel or _kernel(g)
    return K.worst_tv(t, rows), rows is not None


def tau_mix_exact(g, eps=0.25, t_tol=1e-6, kernel=None):
    """Bisection for the first t with worst-case TV at most ``eps``.

    Returns the upper end of the final bracket (within ``t_tol``). When the
    walk is already within eps at time 0 the answer is 0.
    """
    K, rows = kernel or _kernel(g)
    f = lambda t: K.worst_tv(t, rows)  # noqa: E731
    if f(0.0) <= eps:
        return 0.0
    hi = 1.0
    while f(hi) > eps:
        hi *= 2.0
        if hi > 1e12:
            return math.inf
    lo = 0.0 if hi == 1.0 else hi / 2.0
    while hi - lo > t_tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > eps:
            lo = mid
        else:
            hi = mid
    return hi


def cutoff_ratio(g, eps=0.25):
    """``tau_mix(eps) / tau_mix(1 - eps)``; +inf when the denominator is 0."""
    kern = _kernel(g)
    num = tau_mix_exact(g, eps, kernel=kern)
    den = tau_mix_exact(g, 1.0 - eps, kernel=kern)
    if den == 0:
        return 1.0 if num == 0 else math.inf
    return num / den


@dataclass(eq=False)
class MixProfile:
    """TV distance to stationarity on a time grid.

    ``tv`` is the maximum over the start vertices; per-start values and, for
    Monte Carlo, bootstrap standard errors and 95% intervals are kept.
    """

    t: np.ndarray
    starts: np.ndarray
    tv_by_start: np.ndarray
    method: str
    se_by_start: np.ndarray = None
    lo_by_start: np.ndarray = None
    hi_by_start: np.ndarray = None
    tau: dict = field(default_factory=dict)
    heuristic_rows: bool = False

    @property
    def tv(self):
        return self.tv_by_start.max(axis=0)

    def _worst(self):
        return np.argmax(self.tv_by_start, axis=0)

    def to_csv(self, path):
        w = self._worst()
        cols = np.arange(len(self.t))
        lo = self.lo_by_start[w, cols] if self.lo_by_start is not None else self.tv
        hi = self.hi_by_start[w, cols] if self.hi_by_start is not None else self.tv
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["t", "tv", "tv_lo", "tv_hi", "method"])
            for row in zip(self.t, self.tv, lo, hi):
                out.writerow([repr(float(x)) for x in row] + [self.method])


def exact_mix_profile(g, t_grid, eps_list=(0.25,)):
    K, rows = _kernel(g)
    starts = np.arange(g.n_vertices) if rows is None else rows
    pi = K.pi
    tv = np.array([tv_distance(K.rows(t, starts), pi) for t in t_grid]).T
    tau = {float(e): tau_mix_exact(g, e, kernel=(K, rows)) for e in eps_list}
    return MixProfile(np.asarray(t_grid, dtype=float), starts, tv, "exact", tau=tau,
                      heuristic_rows=rows is not None)


def _bootstrap(hist, walkers, pi, rng, n_boot):
    p = hist / walkers
    boots = rng.multinomial(walkers, p, size=n_boot) / walkers
    return tv_distance(boots, pi)


def simulate_ctrw(g, starts, t_grid, walkers, seed, n_boot=200):
    """Monte Carlo laws of the walk from each start on an increasing t grid.

    Between consecutive grid times every walker makes Poisson(dt) jumps,
    each to a uniform neighbour. Per start the random stream is derived from
    ``(seed, start index)``, so results do not depend on the start order.
    """
    if walkers < 1:
        raise ValueError("walkers must be >= 1")
    ts = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(ts) < 0) or (len(ts) and ts[0] < 0):
        raise ValueError("t_grid must be nonnegative and nondecreasing")
    starts = np.atleast_1d(np.asarray(starts, dtype=np.int64))
    pi = stationary_distribution(g)
    n = g.n_vertices
    shape = (len(starts), len(ts))
    tv, se, lo, hi = (np.zeros(shape) for _ in range(4))
    for si, x in enumerate(starts.tolist()):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), si]))
        where = np.full(walkers, x, dtype=np.int64)
        prev = 0.0
        for ti, t in enumerate(ts):
            counts = rng.poisson(t - prev, size=walkers)
            prev = t
            total = int(counts.sum())
            if total:
                kernels.walk_steps(g.indptr, g.indices, where, counts, rng.random(total))
            hist = np.bincount(where, minlength=n).astype(float)
            tv[si, ti] = tv_distance(hist / walkers, pi)
            boots = _bootstrap(hist, walkers, pi, rng, n_boot)
            se[si, ti] = boots.std(ddof=1) if n_boot > 1 else 0.0
            lo[si, ti], hi[si, ti] = np.percentile(boots, [2.5, 97.5])
    return MixProfile(ts, starts, tv, "mc", se, lo, hi)


@dataclass(frozen=True, eq=False)
class DistanceFunctional:
    source: int
    distances: np.ndarray
    mean: float
    value: float

    def record(self):
        return {"source": self.source, "mean": self.mean, "value": self.value,
                "max_distance": int(self.distances.max())}


def distance_functional(g, v):
    """``pi(D_v^2) - pi(D_v)^2`` for graph distances D_v from v."""
    D = kernels.bfs_distances(g.indptr, g.indices, int(v))
    if np.any(D < 0):
        raise Disconnected("distance functional needs a connected graph")
    pi = stationary_distribution(g)
    mean = float(pi @ D)
    return DistanceFunctional(int(v), D, mean, float(pi @ (D - mean) ** 2))


def max_distance_functional(g):
    """Largest distance functional over all sources, with the maximiser."""
    best = None
    for v in range(g.n_vertices):
        f = distance_functional(g, v)
        if best is None or f.value > best.value:
            best = f
    return best


def chemical_distance_check(g, pairs, r, cutoff=0.0):
    """Max of ``d_G(x, y) / ceil(|x - y| / r)`` over pairs farther than ``cutoff``."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    pos = np.asarray(g.positions)
    eu = np.sqrt(((pos[pairs[:, 0]] - pos[pairs[:, 1]]) ** 2).sum(axis=1))
    keep = eu > max(cutoff, 0.0)
    pairs, eu = pairs[keep], eu[keep]
    best, used = 0.0, 0
    for src in np.unique(pairs[:, 0]).tolist():
        D = kernels.bfs_distances(g.indptr, g.indices, src)
        sel = pairs[:, 0] == src
        dg = D[pairs[sel, 1]]
        if np.any(dg < 0):
            raise Disconnected("pair endpoints lie in different components")
        ratio = dg / np.ceil(eu[sel] / r)
        best = max(best, float(ratio.max()))
        used += int(sel.sum())
    return {"max_ratio": best, "pairs": used}
