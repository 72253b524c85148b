"""Louvain modularity optimisation and plurality assignment of points."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix

from . import _kernels
from .errors import UndefinedModularityError
from .mapper import MapperGraph

MIN_GAIN = 1e-12
UNASSIGNED = -1


def modularity(graph: MapperGraph, partition) -> float:
    """Newman-Girvan modularity of an unweighted graph."""
    m = graph.n_edges
    if m == 0:
        raise UndefinedModularityError("modularity is undefined for a graph without edges")
    part = np.asarray(partition)
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    labels, inv = np.unique(part, return_inverse=True)
    inside = np.bincount(inv[u][part[u] == part[v]], minlength=labels.size)
    degree = np.bincount(np.concatenate([u, v]), minlength=graph.n_vertices)
    total = np.bincount(inv, weights=degree, minlength=labels.size)
    return float(np.sum(inside / m - (total / (2.0 * m)) ** 2))


def _local_moving(A: csr_matrix, rng):
    """Repeat shuffled sweeps until no node moves. Returns (communities, moved?)."""
    n = A.shape[0]
    degree = np.asarray(A.sum(axis=1)).ravel()
    m2 = float(degree.sum())
    comm = np.arange(n, dtype=np.int64)
    tot = degree.copy()
    indptr = A.indptr.astype(np.int64)
    indices = A.indices.astype(np.int64)
    moved_any = False
    while True:
        order = rng.permutation(n).astype(np.int64)
        moved = _kernels.local_moving_sweep(indptr, indices, A.data, degree, comm, tot,
                                            order, m2, MIN_GAIN)
        if moved == 0:
            return comm, moved_any
        moved_any = True


def _aggregate(A: csr_matrix, comm: np.ndarray):
    """Collapse communities into nodes; internal weight lands on the diagonal."""
    labels, inv = np.unique(comm, return_inverse=True)
    P = csr_matrix((np.ones(comm.size), (np.arange(comm.size), inv)),
                   shape=(comm.size, labels.size))
    return (P.T @ A @ P).tocsr(), inv


def louvain(graph: MapperGraph, rng: np.random.Generator) -> np.ndarray:
    """Greedy two-phase Louvain partition of the vertices.

    Nodes are visited in an order shuffled by ``rng`` on every sweep. A node
    moves only when its best gain beats staying by more than 1e-12, and equal
    gains go to the lowest community index. Levels are aggregated until a
    local-moving phase makes no move. Labels are contiguous and numbered by
    first appearance over the vertex order.
    """
    n = graph.n_vertices
    if graph.n_edges == 0:
        return np.arange(n)
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    A = csr_matrix((np.ones(2 * u.size), (np.concatenate([u, v]), np.concatenate([v, u]))),
                   shape=(n, n))
    A.sum_duplicates()
    A.sort_indices()
    membership = np.arange(n)
    while True:
        comm, moved = _local_moving(A, rng)
        if not moved:
            break
        A, mapping = _aggregate(A, comm)
        A.sort_indices()
        membership = mapping[membership]
    _, first, inv = np.unique(membership, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.intp)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inv]


@dataclass
class CommunityResult:
    """Vertex and point communities, labelled 0..K-1 by decreasing point count."""

    vertex_community: np.ndarray
    point_community: np.ndarray
    sizes: np.ndarray
    modularity: Optional[float]

    @property
    def K(self) -> int:
        return int(self.sizes.size)

    @property
    def singleton_flags(self) -> np.ndarray:
        return self.sizes == 1

    @property
    def n_assigned(self) -> int:
        return int(np.count_nonzero(self.point_community != UNASSIGNED))

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "sizes": [int(s) for s in self.sizes],
            "singletons": int(self.singleton_flags.sum()),
            "modularity": self.modularity,
            "unassigned": int(self.point_community.size - self.n_assigned),
            "vertex_community": [int(c) for c in self.vertex_community],
        }


def plurality_vote(graph: MapperGraph, partition) -> np.ndarray:
    """Raw plurality label per point, ties to the lowest label; -1 if uncovered."""
    part = np.asarray(partition, dtype=np.intp)
    K = int(part.max()) + 1 if part.size else 0
    if K == 0:
        return np.full(graph.n_points, UNASSIGNED)
    onehot = csr_matrix((np.ones(part.size), (np.arange(part.size), part)),
                        shape=(part.size, K))
    votes = (graph.incidence().T @ onehot).toarray()
    winner = np.argmax(votes, axis=1)
    winner[votes.sum(axis=1) == 0] = UNASSIGNED
    return winner


def assign_points(graph: MapperGraph, partition, q: Optional[float] = None) -> CommunityResult:
    """Assign each point to the community most common among its vertices.

    Communities are then relabelled by decreasing size (ties by original
    label). A community that wins no points keeps a label with size 0.
    """
    part = np.asarray(partition, dtype=np.intp)
    winner = plurality_vote(graph, part)
    K = int(part.max()) + 1 if part.size else 0
    raw_sizes = np.bincount(winner[winner != UNASSIGNED], minlength=K)
    order = np.lexsort((np.arange(K), -raw_sizes))
    relabel = np.empty(K, dtype=np.intp)
    relabel[order] = np.arange(K)
    points = np.where(winner == UNASSIGNED, UNASSIGNED, relabel[np.maximum(winner, 0)])
    if q is None and graph.n_edges > 0:
        q = modularity(graph, part)
    return CommunityResult(
        vertex_community=relabel[part] if K else part,
        point_community=points,
        sizes=raw_sizes[order],
        modularity=q,
    )


def detect_communities(graph: MapperGraph, rng: np.random.Generator) -> CommunityResult:
    """Louvain followed by plurality assignment."""
    return assign_points(graph, louvain(graph, rng))
