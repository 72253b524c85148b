"""Distance matrices and the filter functions that feed the Mapper cover."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.spatial.distance import pdist, squareform

from .errors import MetricError, ParameterError
from .numerics import as_array, classical_mds

METRICS = ("euclidean", "variance_normalized_euclidean", "pearson_correlation")
FILTER_KINDS = ("linf_centrality", "pcoa", "knn_geodesic_mds", "external")


@dataclass(frozen=True)
class DistMatrix:
    values: np.ndarray
    metric: str

    @property
    def n(self) -> int:
        return self.values.shape[0]


def _dist_values(D) -> np.ndarray:
    return np.asarray(getattr(D, "values", D), dtype=float)


def distance_matrix(X, metric: str = "euclidean") -> DistMatrix:
    """Pairwise distances between the rows of ``X``.

    ``pearson_correlation`` is ``1 - corr(row_i, row_j)`` computed across
    features; ``variance_normalized_euclidean`` rescales every column to unit
    sample standard deviation first.
    """
    values = as_array(X)
    if metric == "euclidean":
        D = squareform(pdist(values, "euclidean"))
    elif metric == "variance_normalized_euclidean":
        sd = values.std(axis=0, ddof=1)
        if np.any(sd == 0):
            j = int(np.flatnonzero(sd == 0)[0])
            raise MetricError(f"column {j} has zero variance; cannot normalize")
        D = squareform(pdist(values / sd, "euclidean"))
    elif metric == "pearson_correlation":
        centered = values - values.mean(axis=1, keepdims=True)
        norms = np.sqrt(np.einsum("ij,ij->i", centered, centered))
        if np.any(norms == 0):
            i = int(np.flatnonzero(norms == 0)[0])
            raise MetricError(f"row {i} has zero variance across features; "
                              "correlation distance is undefined")
        unit = centered / norms[:, None]
        D = 1.0 - unit @ unit.T
        D = 0.5 * (D + D.T)
        np.clip(D, 0.0, 2.0, out=D)
        np.fill_diagonal(D, 0.0)
    else:
        raise MetricError(f"unknown metric {metric!r}; expected one of {METRICS}")
    D.setflags(write=False)
    return DistMatrix(D, metric)


def linf_centrality(D) -> np.ndarray:
    """Eccentricity filter: each point's largest distance to any other point."""
    return _dist_values(D).max(axis=1)


def knn_graph(D, k: int) -> csr_matrix:
    """Directed k-nearest-neighbour graph weighted by distance.

    Self-loops are excluded; ties at the k-th neighbour go to the lowest index.
    Zero-distance neighbours are kept as explicit zero-weight edges.
    """
    D = _dist_values(D)
    n = D.shape[0]
    if k < 1 or k >= n:
        raise ParameterError(f"k must satisfy 1 <= k < n = {n}, got {k}")
    masked = D.copy()
    np.fill_diagonal(masked, np.inf)
    nbrs = np.argsort(masked, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(n), k)
    cols = nbrs.ravel()
    return csr_matrix((D[rows, cols], (rows, cols)), shape=(n, n))


def knn_geodesic_distances(D, k: int):
    """All-pairs shortest paths on the directed kNN graph.

    Unreachable pairs are set to twice the largest finite path length.
    Returns ``(G, n_replaced)``.
    """
    graph = knn_graph(D, k)
    G = shortest_path(graph, method="D", directed=True)
    unreachable = ~np.isfinite(G)
    n_replaced = int(unreachable.sum())
    if n_replaced:
        G[unreachable] = 2.0 * G[~unreachable].max()
    return G, n_replaced


def knn_geodesic_mds_filter(X=None, k: int = 30, dims: int = 2,
                            metric: str = "pearson_correlation", D=None) -> np.ndarray:
    """Classical MDS of directed kNN geodesic distances.

    The (generally asymmetric) shortest-path matrix is handed to MDS without
    squaring or symmetrising, mirroring the glioma pipeline it replicates.
    """
    if D is None:
        D = distance_matrix(X, metric)
    G, _ = knn_geodesic_distances(D, k)
    return classical_mds(G, dims, square_entries=False)


def external_filter(values, jitter_sd: float, rng: Optional[np.random.Generator]) -> np.ndarray:
    """Externally supplied filter values plus fresh iid Gaussian jitter."""
    values = np.asarray(values, dtype=float).copy()
    if jitter_sd < 0:
        raise ParameterError("jitter_sd must be non-negative")
    if jitter_sd == 0:
        return values
    return values + rng.normal(0.0, jitter_sd, size=values.shape)


@dataclass(frozen=True)
class FilterSpec:
    """One filter dimension.

    ``axis`` is 1-based and selects the PCoA / MDS coordinate. ``values`` is
    only used by ``external`` filters and keeps index ``i`` attached to row
    ``i`` in every replicate.
    """

    kind: str
    axis: int = 1
    k: int = 30
    values: Optional[tuple] = None
    jitter_sd: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ParameterError(f"unknown filter kind {self.kind!r}")
        if self.axis < 1:
            raise ParameterError("filter axis must be >= 1")
        if self.k < 1:
            raise ParameterError("knn parameter k must be >= 1")
        if self.jitter_sd < 0:
            raise ParameterError("jitter_sd must be >= 0")
        if self.kind == "external":
            if self.values is None:
                raise ParameterError("external filter requires values")
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def data_derived(self) -> bool:
        return self.kind != "external"


def compute_filters(D, specs: Sequence[FilterSpec],
                    rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Evaluate every filter spec on one dataset; returns an ``n x d`` array.

    PCoA and kNN-MDS embeddings are computed once per dataset and shared by
    all specs that ask for different axes of them.
    """
    Dv = _dist_values(D)
    n = Dv.shape[0]
    columns = []
    pcoa = None
    knn_cache = {}
    pcoa_dims = max((s.axis for s in specs if s.kind == "pcoa"), default=0)
    for spec in specs:
        if spec.kind == "linf_centrality":
            columns.append(linf_centrality(Dv))
        elif spec.kind == "pcoa":
            if pcoa is None:
                pcoa = classical_mds(Dv, pcoa_dims, square_entries=True)
            columns.append(pcoa[:, spec.axis - 1])
        elif spec.kind == "knn_geodesic_mds":
            dims = max(s.axis for s in specs if s.kind == "knn_geodesic_mds" and s.k == spec.k)
            if spec.k not in knn_cache:
                knn_cache[spec.k] = knn_geodesic_mds_filter(k=spec.k, dims=max(dims, 2), D=Dv)
            columns.append(knn_cache[spec.k][:, spec.axis - 1])
        else:
            if len(spec.values) != n:
                raise ParameterError(
                    f"external filter {spec.name!r} has {len(spec.values)} values for {n} rows")
            columns.append(external_filter(spec.values, spec.jitter_sd, rng))
    return np.column_stack(columns)
