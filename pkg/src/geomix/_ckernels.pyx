# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.

Every routine here has a line-for-line twin in ``_pykernels`` that consumes
the same inputs (including pre-drawn uniforms) and returns identical arrays.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor
from libcpp.vector cimport vector

cnp.import_array()


def radius_pairs(const double[:, ::1] pos, double lo, double cell_side,
                 Py_ssize_t g, double r2):
    """Return all pairs ``(i, j)``, ``i < j``, with squared distance <= r2.

    Points are binned into a ``g**d`` grid of cells of side ``cell_side``
    starting at ``lo`` on every axis; ``cell_side >= r`` is the caller's job.
    """
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t d = pos.shape[1]
    cdef Py_ssize_t i, j, a, p, q, c, nc, ncell = 1
    cdef long long k
    cdef double diff, acc
    for a in range(d):
        ncell *= g

    cdef cnp.ndarray[cnp.int64_t, ndim=2] cc = np.empty((n, d), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lin = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] start = np.zeros(ncell + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] perm = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] fill

    for i in range(n):
        c = 0
        for a in range(d - 1, -1, -1):
            k = <long long> floor((pos[i, a] - lo) / cell_side)
            if k < 0:
                k = 0
            elif k >= g:
                k = g - 1
            cc[i, a] = k
            c = c * g + k
        lin[i] = c
        start[c + 1] += 1
    for c in range(ncell):
        start[c + 1] += start[c]
    fill = start[:ncell].copy()
    for i in range(n):
        c = lin[i]
        perm[fill[c]] = i
        fill[c] += 1

    # half of the 3^d stencil: offsets whose first nonzero component is +1
    offsets = []
    for o in np.ndindex(*([3] * d)):
        vec = [x - 1 for x in o]
        nz = [x for x in vec if x != 0]
        if nz and nz[0] > 0:
            offsets.append(vec[::-1])
    cdef cnp.ndarray[cnp.int64_t, ndim=2] offs = np.array(offsets, dtype=np.int64).reshape(-1, d)
    cdef Py_ssize_t noff = offs.shape[0], t
    cdef long long coord
    cdef bint ok

    cdef vector[long long] out_u
    cdef vector[long long] out_v

    for i in range(n):
        c = lin[i]
        for p in range(start[c], start[c + 1]):
            j = perm[p]
            if j <= i:
                continue
            acc = 0.0
            for a in range(d):
                diff = pos[i, a] - pos[j, a]
                acc += diff * diff
            if acc <= r2:
                out_u.push_back(i)
                out_v.push_back(j)
        for t in range(noff):
            nc = 0
            ok = True
            for a in range(d - 1, -1, -1):
                coord = cc[i, a] + offs[t, a]
                if coord < 0 or coord >= g:
                    ok = False
                    break
                nc = nc * g + coord
            if not ok:
                continue
            for p in range(start[nc], start[nc + 1]):
                j = perm[p]
                acc = 0.0
                for a in range(d):
                    diff = pos[i, a] - pos[j, a]
                    acc += diff * diff
                if acc <= r2:
                    if i < j:
                        out_u.push_back(i)
                        out_v.push_back(j)
                    else:
                        out_u.push_back(j)
                        out_v.push_back(i)

    cdef Py_ssize_t m = out_u.size()
    cdef cnp.ndarray[cnp.int64_t, ndim=1] u = np.empty(m, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] v = np.empty(m, dtype=np.int64)
    for p in range(m):
        u[p] = out_u[p]
        v[p] = out_v[p]
    return u, v


cdef inline long long _find(long long[::1] parent, long long x) nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def min_labels(Py_ssize_t n, const long long[::1] u, const long long[::1] v):
    """Label every vertex with the smallest vertex index of its component."""
    cdef cnp.ndarray[cnp.int64_t, ndim=1] parent_arr = np.arange(n, dtype=np.int64)
    cdef long long[::1] parent = parent_arr
    cdef Py_ssize_t e, m = u.shape[0], i
    cdef long long a, b
    with nogil:
        for e in range(m):
            a = _find(parent, u[e])
            b = _find(parent, v[e])
            if a < b:
                parent[b] = a
            elif b < a:
                parent[a] = b
        for i in range(n):
            parent[i] = _find(parent, i)
    return parent_arr


def walk_steps(const long long[::1] indptr, const long long[::1] indices,
               long long[::1] where, const long long[::1] counts,
               const double[::1] uniforms):
    """Advance each walker ``counts[w]`` uniform neighbour steps in place.

    Walker ``w`` consumes ``uniforms[off_w : off_w + counts[w]]`` where
    ``off_w`` is the exclusive prefix sum of ``counts``.
    """
    cdef Py_ssize_t w, s, nw = where.shape[0]
    cdef long long off = 0, x, deg, k
    with nogil:
        for w in range(nw):
            x = where[w]
            for s in range(counts[w]):
                deg = indptr[x + 1] - indptr[x]
                k = <long long> (uniforms[off + s] * deg)
                if k >= deg:
                    k = deg - 1
                x = indices[indptr[x] + k]
            where[w] = x
            off += counts[w]


def grow_set(const long long[::1] indptr, const long long[::1] indices,
             long long seed, long long target, const double[::1] uniforms):
    """Random-frontier growth of a connected set from ``seed``.

    Returns member indices in order of addition (at most ``target``).
    """
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] state_arr = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] state = state_arr
    cdef vector[long long] frontier
    cdef vector[long long] members
    cdef long long x, y, k, size
    cdef Py_ssize_t p, t = 0
    with nogil:
        members.push_back(seed)
        state[seed] = 2
        for p in range(indptr[seed], indptr[seed + 1]):
            y = indices[p]
            if state[y] == 0:
                state[y] = 1
                frontier.push_back(y)
        while <long long> members.size() < target and frontier.size() > 0:
            size = frontier.size()
            k = <long long> (uniforms[t] * size)
            t += 1
            if k >= size:
                k = size - 1
            x = frontier[k]
            frontier[k] = frontier[size - 1]
            frontier.pop_back()
            state[x] = 2
            members.push_back(x)
            for p in range(indptr[x], indptr[x + 1]):
                y = indices[p]
                if state[y] == 0:
                    state[y] = 1
                    frontier.push_back(y)
    cdef Py_ssize_t m = members.size()
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.empty(m, dtype=np.int64)
    for p in range(m):
        out[p] = members[p]
    return out


def bfs_distances(const long long[::1] indptr, const long long[::1] indices,
                  long long source):
    """Hop distances from ``source``; -1 marks unreachable vertices."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] dist_arr = np.full(n, -1, dtype=np.int64)
    cdef long long[::1] dist = dist_arr
    cdef cnp.ndarray[cnp.int64_t, ndim=1] queue_arr = np.empty(max(n, 1), dtype=np.int64)
    cdef long long[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0, p
    cdef long long x, y
    with nogil:
        dist[source] = 0
        queue[tail] = source
        tail += 1
        while head < tail:
            x = queue[head]
            head += 1
            for p in range(indptr[x], indptr[x + 1]):
                y = indices[p]
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    queue[tail] = y
                    tail += 1
    return dist_arr
