"""Compiled inner loops: per-cell single linkage and Louvain local moving."""
import numba as nb
import numpy as np


@nb.njit(cache=True)
def mst_heights(D, pts):
    """Prim's MST over the sub-matrix ``D[pts][:, pts]``.

    Returns ``(parent, child, weight)`` arrays in local indices.
    """
    m = pts.shape[0]
    in_tree = np.zeros(m, dtype=np.bool_)
    best = np.empty(m)
    parent = np.zeros(m, dtype=np.int64)
    us = np.empty(m - 1, dtype=np.int64)
    vs = np.empty(m - 1, dtype=np.int64)
    ws = np.empty(m - 1)
    in_tree[0] = True
    p0 = pts[0]
    for j in range(m):
        best[j] = D[p0, pts[j]]
    best[0] = np.inf
    for step in range(m - 1):
        v = 0
        bv = np.inf
        for j in range(m):
            if not in_tree[j] and best[j] < bv:
                bv = best[j]
                v = j
        if bv == np.inf:
            # non-finite distances: pick the first vertex not yet in the tree
            for j in range(m):
                if not in_tree[j]:
                    v = j
                    break
        us[step] = parent[v]
        vs[step] = v
        ws[step] = best[v]
        in_tree[v] = True
        pv = pts[v]
        for j in range(m):
            if not in_tree[j]:
                d = D[pv, pts[j]]
                if d < best[j]:
                    best[j] = d
                    parent[j] = v
    return us, vs, ws


@nb.njit(cache=True)
def first_gap(ws, bins):
    """Lower edge of the first empty bin after the first occupied one, or -1."""
    top = 0.0
    for w in ws:
        if w > top:
            top = w
    if top <= 0.0:
        return -1.0
    counts = np.zeros(bins, dtype=np.int64)
    for w in ws:
        b = int(w / top * bins)
        if b >= bins:
            b = bins - 1
        counts[b] += 1
    first = 0
    while counts[first] == 0:
        first += 1
    for b in range(first, bins):
        if counts[b] == 0:
            return b * top / bins
    return -1.0


@nb.njit(cache=True)
def cut_labels(m, us, vs, ws, threshold):
    """Component label (smallest member index) per point, linking MST edges below threshold."""
    label = np.arange(m)
    for e in range(us.shape[0]):
        if ws[e] < threshold:
            a = us[e]
            while label[a] != a:
                a = label[a]
            b = vs[e]
            while label[b] != b:
                b = label[b]
            if a != b:
                if a < b:
                    label[b] = a
                else:
                    label[a] = b
    for i in range(m):
        r = i
        while label[r] != r:
            r = label[r]
        label[i] = r
    return label


@nb.njit(cache=True)
def local_moving_sweep(indptr, indices, weights, degree, comm, tot, order, m2, min_gain):
    """One pass of Louvain node moves in the given visiting order.

    ``tot`` is the summed degree per community and is updated in place along
    with ``comm``. Returns the number of nodes moved.
    """
    n = comm.shape[0]
    links = np.zeros(n)
    seen = np.zeros(n, dtype=np.bool_)
    touched = np.empty(n, dtype=np.int64)
    moved = 0
    for oi in range(order.shape[0]):
        i = order[oi]
        ci = comm[i]
        ki = degree[i]
        nt = 0
        for e in range(indptr[i], indptr[i + 1]):
            j = indices[e]
            if j == i:
                continue
            c = comm[j]
            if not seen[c]:
                seen[c] = True
                touched[nt] = c
                nt += 1
            links[c] += weights[e]
        tot[ci] -= ki
        stay = links[ci] - tot[ci] * ki / m2
        cand = np.sort(touched[:nt])
        best = ci
        best_gain = -np.inf
        for t in range(nt):
            c = cand[t]
            gain = links[c] - tot[c] * ki / m2
            if gain > best_gain:
                best_gain = gain
                best = c
        if best != ci and best_gain - stay > min_gain:
            comm[i] = best
            moved += 1
        else:
            best = ci
        tot[best] += ki
        for t in range(nt):
            c = touched[t]
            links[c] = 0.0
            seen[c] = False
    return moved
