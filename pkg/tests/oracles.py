"""Independent brute-force reference implementations used as test oracles.

Deliberately written with plain loops and no shared code with the package.
"""
from itertools import combinations

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial.distance import squareform


def _community_members(labels, min_size):
    groups = {}
    for i, c in enumerate(labels):
        if c >= 0:
            groups.setdefault(int(c), []).append(i)
    return {c: rows for c, rows in groups.items() if len(rows) >= min_size}


def dissociation(X, labels, block_A, block_B, exclude_singletons=False):
    groups = _community_members(labels, 2 if exclude_singletons else 1)
    mu = {}
    for c, rows in groups.items():
        a = sum(X[i][j] for i in rows for j in block_A) / (len(rows) * len(block_A))
        b = sum(X[i][j] for i in rows for j in block_B) / (len(rows) * len(block_B))
        mu[c] = (a, b)
    best = 0.0
    for k, l in combinations(sorted(mu), 2):
        best = max(best, abs(mu[k][0] - mu[l][0]), abs(mu[k][1] - mu[l][1]))
    return best


def d_max(X, labels, exclude_singletons=False):
    groups = _community_members(labels, 2 if exclude_singletons else 1)
    p = len(X[0])
    means = {c: [sum(X[i][j] for i in rows) / len(rows) for j in range(p)]
             for c, rows in groups.items()}
    best = 0.0
    for k, l in combinations(sorted(means), 2):
        for j in range(p):
            best = max(best, abs(means[k][j] - means[l][j]))
    return best


def modularity(n, edges, partition):
    """Q = (1/2m) sum_ij [A_ij - k_i k_j / 2m] delta(c_i, c_j)."""
    A = [[0] * n for _ in range(n)]
    for u, v in edges:
        A[u][v] += 1
        A[v][u] += 1
    k = [sum(row) for row in A]
    m2 = sum(k)
    q = 0.0
    for i in range(n):
        for j in range(n):
            if partition[i] == partition[j]:
                q += A[i][j] - k[i] * k[j] / m2
    return q / m2


def mc_pvalue(d_obs, samples):
    count = 0
    for s in samples:
        if s >= d_obs:
            count += 1
    return (1 + count) / (1 + len(samples))


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def best_modularity(n, edges):
    best = -np.inf
    for part in set_partitions(list(range(n))):
        lab = [0] * n
        for c, block in enumerate(part):
            for v in block:
                lab[v] = c
        best = max(best, modularity(n, edges, lab))
    return best


def first_gap_clusters(D, bins):
    """Single linkage via scipy, first-gap threshold via numpy.histogram, components via csgraph."""
    m = D.shape[0]
    if m == 1:
        return [np.array([0])]
    heights = linkage(squareform(D, checks=False), method="single")[:, 2]
    top = heights.max()
    if top <= 0:
        return [np.arange(m)]
    counts, edges = np.histogram(heights, bins=bins, range=(0.0, top))
    first = int(np.flatnonzero(counts)[0])
    empty = [b for b in range(first, bins) if counts[b] == 0]
    if not empty:
        return [np.arange(m)]
    threshold = edges[empty[0]]
    A = csr_matrix((D < threshold) & ~np.eye(m, dtype=bool))
    _, lab = connected_components(A, directed=False)
    groups = {}
    for i, c in enumerate(lab):
        groups.setdefault(c, []).append(i)
    return sorted((np.array(g) for g in groups.values()), key=lambda g: g[0])


def shared_point_edges(vertex_sets):
    out = []
    for u in range(len(vertex_sets)):
        for v in range(u + 1, len(vertex_sets)):
            if set(vertex_sets[u]) & set(vertex_sets[v]):
                out.append((u, v))
    return out
