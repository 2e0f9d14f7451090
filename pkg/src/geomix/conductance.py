"""Set conductance, the conductance profile and the Lovasz-Kannan integral.

For a vertex set A with cut size c and volume (degree sum) a in a graph
with degree sum 2m,

    phi_A = Q(A, A^c) / (pi(A) pi(A^c)) = c * 2m / (a * (2m - a)).

Every value in this module is evaluated from those three integers by the
same expression, so a stored witness set reproduces its recorded value
bit for bit.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyOrFull, TooLarge
from .structure import as_mask, grow_connected_set, stationary_distribution

GRID_POINTS = 64
EXACT_LIMIT = 18

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _phi(cut, vol, two_m):
    """Conductance from integer cut, set volume and total volume (array-safe)."""
    num = np.asarray(cut, dtype=np.int64) * np.int64(two_m)
    den = np.asarray(vol, dtype=np.int64) * (np.int64(two_m) - np.asarray(vol, dtype=np.int64))
    return num.astype(np.float64) / den.astype(np.float64)


def conductance_of_set(g, A):
    """``Q(A, A^c) / (pi(A) pi(A^c))`` for a nonempty proper subset A."""
    mask = as_mask(A, g.n_vertices)
    size = int(np.count_nonzero(mask))
    if size == 0 or size == g.n_vertices:
        raise EmptyOrFull("conductance needs a nonempty proper subset")
    two_m = 2 * g.edge_count
    vol = int(g.degrees[mask].sum())
    if vol == 0 or vol == two_m:
        raise EmptyOrFull("A or its complement carries no stationary mass")
    return float(_phi(g.cut_size(mask), vol, two_m))


def bottleneck_ratio(g, A):
    """``Q(A, A^c) / pi(A)`` (the Cheeger ratio h_A)."""
    mask = as_mask(A, g.n_vertices)
    vol = int(g.degrees[mask].sum())
    if vol == 0:
        raise EmptyOrFull("A carries no stationary mass")
    return g.cut_size(mask) / vol


def pi_zero(g):
    return float(stationary_distribution(g).min())


def pi_one(g):
    """Least mass of a set X holding some x whose walk stays in X w.p. > 1/2.

    With no loops, x plus its ``floor(deg/2) + 1`` lightest neighbours is
    the cheapest such X for that x.
    """
    pi = stationary_distribution(g)
    best = math.inf
    for x in range(g.n_vertices):
        nb = np.sort(pi[g.neighbors(x)])
        need = int(g.degrees[x]) // 2 + 1
        best = min(best, float(pi[x] + nb[:need].sum()))
    return best


def t_grid(pi0, points=GRID_POINTS):
    """Geometric grid from ``pi0`` to 1/2 (``points`` values)."""
    if pi0 >= 0.5:
        return np.array([0.5])
    return np.geomspace(pi0, 0.5, points)


@dataclass(eq=False)
class ConductanceProfile:
    """Best conductance found per grid value of t.

    ``phi[i]`` is the least conductance among candidate sets with
    ``0 < pi(A) <= t[i]``; since the candidate pool only grows with t the
    values are nonincreasing. Witnesses record the set, its kind and size.
    """

    t: np.ndarray
    phi: np.ndarray
    witness_kind: list
    witness_size: np.ndarray
    witnesses: list
    pi0: float
    pi1: float
    meta: dict = field(default_factory=dict)

    @property
    def phi_half(self):
        return float(self.phi[-1])

    def envelope(self):
        """Running minimum over increasing t (nonincreasing envelope)."""
        return np.minimum.accumulate(self.phi)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "phi", "witness_kind", "witness_size"])
            for t, p, k, s in zip(self.t, self.envelope(), self.witness_kind, self.witness_size):
                w.writerow([repr(float(t)), repr(float(p)), k, int(s)])


class _Pool:
    """Running per-grid minimum over batches of candidate cuts."""

    def __init__(self, g, grid):
        self.g = g
        self.two_m = 2 * g.edge_count
        self.grid = grid
        k = len(grid)
        self.best = np.full(k, np.inf)
        self.kind = [""] * k
        self.size = np.zeros(k, dtype=np.int64)
        self.sets = [None] * k

    def offer(self, cut, vol, kind, materialize):
        """Offer cuts ``(cut[j], vol[j])``; ``materialize(j)`` returns the set."""
        cut = np.asarray(cut, dtype=np.int64)
        vol = np.asarray(vol, dtype=np.int64)
        ok = (vol > 0) & (vol < self.two_m)
        if not ok.any():
            return
        idx = np.flatnonzero(ok)
        phi = _phi(cut[idx], vol[idx], self.two_m)
        small = np.minimum(vol[idx], self.two_m - vol[idx])
        mass = small / self.two_m
        order = np.argsort(mass, kind="stable")
        mass, phi, idx = mass[order], phi[order], idx[order]
        run = np.minimum.accumulate(phi)
        arg = np.zeros(len(phi), dtype=np.int64)
        for i in range(1, len(phi)):
            arg[i] = i if phi[i] < run[i - 1] else arg[i - 1]
        pos = np.searchsorted(mass, self.grid * (1 + 1e-12), side="right") - 1
        for gi in np.flatnonzero(pos >= 0):
            j = arg[pos[gi]]
            if phi[j] < self.best[gi]:
                A = np.asarray(materialize(idx[j]))
                mask = as_mask(A, self.g.n_vertices)
                if 2 * int(self.g.degrees[mask].sum()) > self.two_m:
                    mask = ~mask
                self.best[gi] = phi[j]
                self.kind[gi] = kind
                self.size[gi] = int(np.count_nonzero(mask))
                self.sets[gi] = np.flatnonzero(mask)

    def profile(self, pi0, pi1, meta=None):
        return ConductanceProfile(self.grid, self.best.copy(), list(self.kind), self.size.copy(),
                                  list(self.sets), pi0, pi1, dict(meta or {}))


def prefix_cuts(g, order):
    """Cut sizes and volumes of the prefixes ``order[:k]``, k = 1..len(order)."""
    n = g.n_vertices
    order = np.asarray(order, dtype=np.int64)
    L = len(order)
    rank = np.full(n, L, dtype=np.int64)
    rank[order] = np.arange(L)
    u, v = g.edges()
    a = np.minimum(rank[u], rank[v])
    b = np.maximum(rank[u], rank[v])
    # an edge is cut by prefix k exactly when a < k <= b
    diff = np.zeros(L + 2, dtype=np.int64)
    live = a < L
    np.add.at(diff, a[live] + 1, 1)
    np.add.at(diff, np.minimum(b[live], L) + 1, -1)
    cut = np.cumsum(diff)[1:L + 1]
    vol = np.cumsum(g.degrees[order])
    return cut, vol


def _offer_order(pool, g, order, kind):
    cut, vol = prefix_cuts(g, order)
    pool.offer(cut, vol, kind, lambda j: order[:j + 1])


def exact_profile(g, points=GRID_POINTS):
    """Exhaustive profile over all nonempty proper subsets (at most 18 vertices)."""
    bits, cut, vol = _all_cuts(g)
    pi0, pi1 = pi_zero(g), pi_one(g)
    pool = _Pool(g, t_grid(pi0, points))
    pool.offer(cut, vol, "exhaustive", lambda j: np.flatnonzero(bits[j]))
    return pool.profile(pi0, pi1, {"sets": len(cut)})


def _all_cuts(g):
    n = g.n_vertices
    if n > EXACT_LIMIT:
        raise TooLarge(f"exhaustive enumeration is limited to {EXACT_LIMIT} vertices, got {n}")
    masks = np.arange(1, 2 ** n - 1, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    vol = bits.astype(np.int64) @ g.degrees.astype(np.int64)
    u, v = g.edges()
    cut = np.zeros(len(masks), dtype=np.int64)
    for a, b in zip(u.tolist(), v.tolist()):
        cut += bits[:, a] ^ bits[:, b]
    return bits, cut, vol


def cheeger_constant(g):
    """Exhaustive ``h = min Q(A, A^c) / pi(A)`` over ``0 < pi(A) <= 1/2``.

    Returns ``(h, A)``.
    """
    bits, cut, vol = _all_cuts(g)
    two_m = 2 * g.edge_count
    ok = (vol > 0) & (2 * vol <= two_m)
    idx = np.flatnonzero(ok)
    ratio = cut[idx] / vol[idx]
    j = idx[int(np.argmin(ratio))]
    return float(cut[j] / vol[j]), np.flatnonzero(bits[j])


def _budget(budgets, key):
    if isinstance(budgets, dict):
        return int(budgets.get(key, 0))
    return int(budgets)


def heuristic_profile(g, budgets=None, seed=0, points=GRID_POINTS):
    """Upper envelope of the profile from sweep, tile-cut and sampled families.

    Parameters
    ----------
    budgets : int or dict
        ``{"tile": k, "sampled": s}``; an int applies to both and 0 leaves
        only the spectral sweep. Tile cuts are half-space sweeps along each
        axis plus ``k`` growing cubes around random vertices; sampled cuts
        are the nested prefixes of ``s`` random-frontier growths.
    """
    from .spectral import second_eigenvector

    budgets = {"tile": 8, "sampled": 32} if budgets is None else budgets
    rng = np.random.default_rng(seed)
    n = g.n_vertices
    pi0, pi1 = pi_zero(g), pi_one(g)
    pool = _Pool(g, t_grid(pi0, points))
    if n >= 2:
        f = second_eigenvector(g, seed=seed)
        order = np.argsort(f, kind="stable")
        _offer_order(pool, g, order, "sweep")
        _offer_order(pool, g, order[::-1], "sweep")
    n_tile = _budget(budgets, "tile")
    pos = np.asarray(g.positions) if hasattr(g, "positions") else None
    if n_tile > 0 and pos is not None and len(pos):
        for a in range(pos.shape[1]):
            order = np.argsort(pos[:, a], kind="stable")
            _offer_order(pool, g, order, "tile-cut")
            _offer_order(pool, g, order[::-1], "tile-cut")
        for _ in range(n_tile):
            c = pos[int(rng.integers(n))]
            order = np.argsort(np.abs(pos - c).max(axis=1), kind="stable")
            _offer_order(pool, g, order, "tile-cut")
    for _ in range(_budget(budgets, "sampled")):
        order = grow_connected_set(g, int(rng.integers(n)), n, rng)
        _offer_order(pool, g, order, "sampled")
    return pool.profile(pi0, pi1, {"budgets": budgets, "seed": seed})


def lk_integral(phi, lower, upper=0.5, points=4097):
    """``int_lower^upper dt / (t phi(t)^2)`` by the trapezoid rule in log t."""
    if lower >= upper:
        return 0.0
    s = np.linspace(math.log(lower), math.log(upper), points)
    vals = np.array([phi(math.exp(x)) for x in s], dtype=float)
    if np.any(vals <= 0):
        return math.inf
    return float(_trapezoid(1.0 / vals ** 2, s))


def profile_function(profile):
    """Right-continuous step function of the profile envelope."""
    t, env = profile.t, profile.envelope()

    def phi(x):
        i = int(np.searchsorted(t, x * (1 + 1e-12), side="right")) - 1
        return float(env[max(i, 0)])
    return phi


def lk_bound(profile, phi_half=None, variant="pi0"):
    """Lovasz-Kannan style bound ``int dt/(t phi^2) + 1/phi(1/2)``.

    The lower limit is ``pi0`` or, with ``variant="pi1"``, ``pi1``. The
    integrand uses the profile envelope between grid points (log-t
    trapezoid on the grid). A zero conductance gives +inf.
    """
    env = profile.envelope()
    phi_half = float(env[-1]) if phi_half is None else float(phi_half)
    if phi_half <= 0 or np.any(env <= 0):
        return math.inf
    lower = profile.pi0 if variant == "pi0" else profile.pi1
    if variant not in ("pi0", "pi1"):
        raise ValueError("variant must be 'pi0' or 'pi1'")
    t = profile.t
    keep = t >= lower * (1 - 1e-12)
    ts, ph = t[keep], env[keep]
    if len(ts) == 0 or ts[0] > lower:
        ts = np.concatenate([[lower], ts])
        ph = np.concatenate([[profile_function(profile)(lower)], ph])
    s = np.log(ts)
    integral = float(_trapezoid(1.0 / ph ** 2, s)) if len(s) > 1 else 0.0
    return integral + 1.0 / phi_half


def _f_ref(n, d, r):
    return math.log(n) ** (5 * d) * r ** d / n


def iso_reference_curve(n, d, r, t):
    """``min{1/(n f r^d), r/(n t)^(1/d)}`` with ``f = (log n)^(5d) r^d / n``."""
    if not 0 < t <= 0.5:
        raise ValueError("t must lie in (0, 1/2]")
    return min(1.0 / (n * _f_ref(n, d, r) * r ** d), r / (n * t) ** (1.0 / d))


def reference_crossover(n, d, r):
    """t at which the two branches of the reference curve meet."""
    return (n * _f_ref(n, d, r) * r ** (d + 1)) ** d / n
