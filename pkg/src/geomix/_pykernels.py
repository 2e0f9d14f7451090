"""Pure numpy / Python twins of the compiled kernels in ``_ckernels.pyx``.

Outputs match the compiled versions exactly (pair sets are compared after
sorting; walker, growth and BFS results are identical element-wise).
"""

import itertools

import numpy as np


def radius_pairs(pos, lo, cell_side, g, r2):
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    n, d = pos.shape
    if n == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    cc = np.floor((pos - lo) / cell_side).astype(np.int64)
    np.clip(cc, 0, g - 1, out=cc)
    weights = g ** np.arange(d, dtype=np.int64)
    lin = cc @ weights
    perm = np.argsort(lin, kind="stable")
    ncell = g**d
    counts = np.bincount(lin, minlength=ncell)
    start = np.zeros(ncell + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])

    us, vs = [], []
    stencil = [o for o in itertools.product((-1, 0, 1), repeat=d)]
    half = [np.array(o[::-1], dtype=np.int64) for o in stencil
            if any(o) and [x for x in o if x][0] > 0]
    for off in [np.zeros(d, dtype=np.int64)] + half:
        nb = cc + off
        valid = np.all((nb >= 0) & (nb < g), axis=1)
        src = np.nonzero(valid)[0]
        ncl = nb[src] @ weights
        lo_p, hi_p = start[ncl], start[ncl + 1]
        cnt = hi_p - lo_p
        total = int(cnt.sum())
        if total == 0:
            continue
        i = np.repeat(src, cnt)
        base = np.repeat(lo_p - np.cumsum(cnt) + cnt, cnt)
        j = perm[base + np.arange(total)]
        if not off.any():
            keep = j > i
            i, j = i[keep], j[keep]
        sq = np.zeros(len(i))
        for a in range(d):
            diff = pos[i, a] - pos[j, a]
            sq += diff * diff
        close = sq <= r2
        i, j = i[close], j[close]
        us.append(np.minimum(i, j))
        vs.append(np.maximum(i, j))
    if not us:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy()
    return np.concatenate(us), np.concatenate(vs)


def min_labels(n, u, v):
    lab = np.arange(n, dtype=np.int64)
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if len(u) == 0:
        return lab
    while True:
        lu, lv = lab[u], lab[v]
        if np.array_equal(lu, lv):
            break
        m = np.minimum(lu, lv)
        np.minimum.at(lab, lu, m)
        np.minimum.at(lab, lv, m)
        while True:
            nxt = lab[lab]
            if np.array_equal(nxt, lab):
                break
            lab = nxt
    return lab


def walk_steps(indptr, indices, where, counts, uniforms):
    counts = np.asarray(counts, dtype=np.int64)
    offsets = np.cumsum(counts) - counts
    x = where.copy()
    steps = int(counts.max()) if len(counts) else 0
    for s in range(steps):
        active = np.nonzero(counts > s)[0]
        xa = x[active]
        deg = indptr[xa + 1] - indptr[xa]
        k = (uniforms[offsets[active] + s] * deg).astype(np.int64)
        k = np.minimum(k, deg - 1)
        x[active] = indices[indptr[xa] + k]
    where[:] = x


def grow_set(indptr, indices, seed, target, uniforms):
    n = len(indptr) - 1
    state = bytearray(n)
    frontier = []
    members = [int(seed)]
    state[seed] = 2
    for y in indices[indptr[seed]:indptr[seed + 1]].tolist():
        if state[y] == 0:
            state[y] = 1
            frontier.append(y)
    t = 0
    while len(members) < target and frontier:
        size = len(frontier)
        k = min(int(uniforms[t] * size), size - 1)
        t += 1
        x = frontier[k]
        frontier[k] = frontier[-1]
        frontier.pop()
        state[x] = 2
        members.append(x)
        for y in indices[indptr[x]:indptr[x + 1]].tolist():
            if state[y] == 0:
                state[y] = 1
                frontier.append(y)
    return np.array(members, dtype=np.int64)


def bfs_distances(indptr, indices, source):
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int64)
    dist[source] = 0
    layer = np.array([source], dtype=np.int64)
    depth = 0
    while len(layer):
        depth += 1
        cnt = indptr[layer + 1] - indptr[layer]
        total = int(cnt.sum())
        if total == 0:
            break
        base = np.repeat(indptr[layer] - np.cumsum(cnt) + cnt, cnt)
        nb = indices[base + np.arange(total)]
        nb = np.unique(nb[dist[nb] < 0])
        dist[nb] = depth
        layer = nb
    return dist
