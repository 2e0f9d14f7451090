"""Second eigenvalue of the simple random walk and the relaxation time.

The walk matrix P = D^-1 A is similar to the symmetric S = D^-1/2 A D^-1/2,
whose top eigenvector sqrt(pi) is known. Both ends of the rest of the
spectrum are found by ARPACK Lanczos on S with that vector pushed out of
range. Small gaps (large or long thin graphs) are resolved by
shift-invert on the normalised Laplacian I - S, again with sqrt(pi)
projected out.
"""

import math
import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import cho_solve_banded, cholesky_banded
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .errors import Disconnected, DimensionMismatch, NoConvergence
from .structure import connected_components

_CACHE = weakref.WeakKeyDictionary()


def _cached(g):
    hit = _CACHE.get(g)
    if hit is None:
        hit = _CACHE[g] = {}
    return hit


def adjacency_matrix(g):
    """Sparse CSR adjacency of ``g`` (cached per graph object)."""
    hit = _cached(g)
    if "A" not in hit:
        n = g.n_vertices
        hit["A"] = sp.csr_matrix((np.ones(len(g.indices)), g.indices, g.indptr), shape=(n, n))
    return hit["A"]


def symmetric_operator(g):
    """``D^-1/2 A D^-1/2`` as a sparse matrix (cached)."""
    hit = _cached(g)
    if "S" not in hit:
        s = 1.0 / np.sqrt(g.degrees.astype(float))
        hit["S"] = sp.csr_matrix(sp.diags(s) @ adjacency_matrix(g) @ sp.diags(s))
    return hit["S"]


def transition_matvec(g, v):
    """``(P v)(x) = mean of v over the neighbours of x``."""
    v = np.asarray(v, dtype=float)
    if v.shape[0] != g.n_vertices:
        raise DimensionMismatch(f"vector has length {v.shape[0]}, graph has {g.n_vertices} vertices")
    return (adjacency_matrix(g) @ v) / g.degrees.reshape((-1,) + (1,) * (v.ndim - 1))


def transition_matrix_dense(g):
    A = adjacency_matrix(g).toarray()
    return A / g.degrees[:, None]


def dense_spectrum(g):
    """All eigenvalues of P, ascending (dense oracle)."""
    S = symmetric_operator(g).toarray()
    return np.linalg.eigvalsh((S + S.T) / 2.0)


def is_bipartite(g):
    """Exact two-colouring test by BFS over all components."""
    n = g.n_vertices
    colour = np.full(n, -1, dtype=np.int64)
    for root in range(n):
        if colour[root] >= 0:
            continue
        colour[root] = 0
        layer = np.array([root])
        while len(layer):
            nxt = []
            for x in layer.tolist():
                nb = g.indices[g.indptr[x]:g.indptr[x + 1]]
                if np.any(colour[nb] == colour[x]):
                    return False
                fresh = nb[colour[nb] < 0]
                colour[fresh] = 1 - colour[x]
                nxt.append(fresh)
            layer = np.unique(np.concatenate(nxt)) if nxt else np.zeros(0, dtype=np.int64)
    return True


@dataclass(frozen=True)
class SpectralResult:
    lambda2_abs: float
    lambda2_signed: float
    lambda_min: float
    relax_abs: float
    relax_signed: float
    iterations: int
    residual: float
    bipartite: bool
    method: str


class RelaxTime(float):
    """Float relaxation time carrying a ``bipartite`` flag (value +inf there)."""

    def __new__(cls, value, bipartite=False, mode="signed"):
        obj = super().__new__(cls, value)
        obj.bipartite = bool(bipartite)
        obj.mode = mode
        return obj


def _relax(lam):
    gap = 1.0 - lam
    return math.inf if gap <= 0 else 1.0 / gap


class _Counter:
    def __init__(self, f):
        self.f = f
        self.calls = 0

    def __call__(self, x):
        self.calls += 1
        return self.f(x)


def _extreme(S, q, which, tol, max_iter, v0):
    """Extreme eigenpair of S restricted to the complement of unit vector q."""
    n = S.shape[0]
    sign = 1.0 if which == "LA" else -1.0

    def op(x):
        x = x.ravel()
        c = q @ x
        y = S @ (x - c * q)
        # q is mapped to -2 q (LA) or +2 q (SA), outside the spectrum of S
        return y - (q @ y) * q - 2.0 * sign * c * q

    counter = _Counter(op)
    L = spla.LinearOperator((n, n), matvec=counter, dtype=float)
    ncv = min(n, 64)
    try:
        vals, vecs = spla.eigsh(L, k=1, which=which, tol=tol, maxiter=max_iter, ncv=ncv, v0=v0)
    except spla.ArpackNoConvergence as err:
        if len(err.eigenvalues):
            lam, vec = float(err.eigenvalues[0]), err.eigenvectors[:, 0]
            res = float(np.linalg.norm(S @ vec - lam * vec))
        else:
            lam, res = float("nan"), float("inf")
        raise NoConvergence(f"Lanczos ({which}) did not converge", lam, res) from err
    lam, vec = float(vals[0]), vecs[:, 0]
    vec = vec - q * (q @ vec)
    vec /= np.linalg.norm(vec)
    res = float(np.linalg.norm(S @ vec - lam * vec))
    return lam, res, counter.calls, vec


BANDED_BYTES = 2.5e9


def _factor(N):
    """Solver for the symmetric positive definite sparse matrix N.

    Reverse Cuthill-McKee keeps geometric graphs in a band of width about
    the number of vertices in an r-slab, where LAPACK banded Cholesky is far
    cheaper than general sparse LU. Falls back to LU when the band is too
    wide for memory or the factorisation breaks down.
    """
    n = N.shape[0]
    N = N.tocsr()
    perm = reverse_cuthill_mckee(N, symmetric_mode=True)
    P = N[perm][:, perm].tocoo()
    bw = int(np.max(np.abs(P.row - P.col))) if P.nnz else 0
    if (bw + 1) * n * 8.0 <= BANDED_BYTES:
        up = P.row <= P.col
        ab = np.zeros((bw + 1, n))
        ab[bw + P.row[up] - P.col[up], P.col[up]] = P.data[up]
        try:
            cb = cholesky_banded(ab, lower=False, overwrite_ab=True)
        except np.linalg.LinAlgError:
            cb = None
        if cb is not None:
            del ab
            inv = np.empty_like(perm)
            inv[perm] = np.arange(n)

            def solve(x):
                return cho_solve_banded((cb, False), x[perm])[inv]
            return solve
    lu = spla.splu(N.tocsc(), permc_spec="COLAMD")
    return lu.solve


def _bottom_laplacian(S, q, tol, max_iter, v0, shift):
    """Smallest nonzero eigenvalue of I - S via projected shift-invert."""
    n = S.shape[0]
    solve = _factor(sp.identity(n, format="csr") * (1.0 + shift) - S)

    def op(x):
        x = x.ravel()
        x = x - q * (q @ x)
        y = solve(x)
        return y - q * (q @ y)

    counter = _Counter(op)
    L = spla.LinearOperator((n, n), matvec=counter, dtype=float)
    try:
        vals, vecs = spla.eigsh(L, k=1, which="LA", tol=tol, maxiter=max_iter,
                                ncv=min(n, 20), v0=v0)
    except spla.ArpackNoConvergence as err:
        raise NoConvergence("shift-invert did not converge", float("nan"), float("inf")) from err
    vec = vecs[:, 0] - q * (q @ vecs[:, 0])
    vec /= np.linalg.norm(vec)
    # Rayleigh quotient on S is more accurate than inverting theta
    lam = float(vec @ (S @ vec))
    res = float(np.linalg.norm(S @ vec - lam * vec))
    return lam, res, counter.calls, vec


def lambda2(g, tol=1e-10, max_iter=100000, method="auto", seed=0):
    """Second-largest signed and absolute eigenvalues of the walk on ``g``.

    Parameters
    ----------
    g : GiantSubgraph or SpatialGraph
        Connected graph with at least two vertices.
    tol : float
        ARPACK tolerance; the returned ``residual`` is the larger of the two
        explicit residuals ``||S v - lambda v||``.
    method : {"auto", "lanczos", "shift-invert", "dense"}
        ``auto`` uses shift-invert for d = 1 or at least 2000 vertices and
        matrix-free Lanczos otherwise. Graphs below 4 vertices always use
        dense eigh.
    """
    n = g.n_vertices
    if n < 2:
        raise ValueError("need at least two vertices")
    if connected_components(g).n_components != 1:
        raise Disconnected("walk spectrum needs a connected graph")
    bip = is_bipartite(g)
    if method == "auto":
        dim = g.positions.shape[1] if hasattr(g, "points") else 2
        method = "shift-invert" if dim == 1 or n >= 2000 else "lanczos"
    if n < 4:
        # ARPACK needs room for at least two Lanczos vectors beside sqrt(pi)
        method = "dense"
    if method == "dense":
        ev = dense_spectrum(g)
        top, bottom, its, res = float(ev[-2]), float(ev[0]), 0, 0.0
    else:
        S = symmetric_operator(g)
        q = np.sqrt(g.degrees / g.degrees.sum())
        v0 = np.random.default_rng(seed).standard_normal(n)
        if method == "shift-invert":
            shift = 1e-10
            top, r1, c1, _ = _bottom_laplacian(S, q, tol, max_iter, v0, shift)
        elif method == "lanczos":
            top, r1, c1, _ = _extreme(S, q, "LA", tol, max_iter, v0)
        else:
            raise ValueError(f"unknown method {method!r}")
        bottom, r2, c2, _ = _extreme(S, q, "SA", tol, max_iter, v0)
        its, res = c1 + c2, max(r1, r2)
    if bip:
        bottom = -1.0
    top = min(top, 1.0)
    lam_abs = 1.0 if bip else max(top, abs(bottom))
    return SpectralResult(lambda2_abs=lam_abs, lambda2_signed=top, lambda_min=bottom,
                          relax_abs=_relax(lam_abs), relax_signed=_relax(top),
                          iterations=its, residual=res, bipartite=bip, method=method)


def relaxation_time(g, mode="signed", result=None, **kw):
    """``1 / (1 - lambda)`` with lambda the signed or absolute second eigenvalue."""
    if mode not in ("signed", "abs"):
        raise ValueError("mode must be 'signed' or 'abs'")
    res = result if result is not None else lambda2(g, **kw)
    val = res.relax_signed if mode == "signed" else res.relax_abs
    return RelaxTime(val, bipartite=res.bipartite, mode=mode)


def second_eigenvector(g, tol=1e-8, seed=0):
    """Walk eigenfunction ``f = v / sqrt(pi)`` for the second signed eigenvalue.

    Dense eigh below 400 vertices, projected shift-invert above. Used to
    order vertices for sweep cuts.
    """
    n = g.n_vertices
    S = symmetric_operator(g)
    q = np.sqrt(g.degrees / g.degrees.sum())
    if n < 400:
        _, vecs = np.linalg.eigh(S.toarray())
        v = vecs[:, -2]
    else:
        v0 = np.random.default_rng(seed).standard_normal(n)
        *_, v = _bottom_laplacian(S, q, tol, 10000, v0, 1e-10)
    return v / q
