"""Mapper graph construction.

The cover is either equalized (quantile bands, each point in roughly ``g``
bands per filter) or fixed width with a fractional overlap. Each cover cell is
clustered by single linkage cut at the first gap in the histogram of merge
heights, and clusters become vertices joined when they share a point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import List, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix, triu

from . import _kernels
from .errors import DegenerateFilterError, ParameterError

COVER_MODES = ("equalized", "fixed_width")


@dataclass(frozen=True)
class MapperConfig:
    resolutions: Tuple[int, ...]
    gains: Tuple[float, ...] = (2.0,)
    cover_mode: str = "equalized"
    overlap_fraction: float = 0.5
    histogram_bins: int = 10

    def __post_init__(self):
        res = tuple(int(r) for r in np.atleast_1d(self.resolutions))
        gains = tuple(float(g) for g in np.atleast_1d(self.gains))
        if len(gains) == 1 and len(res) > 1:
            gains = gains * len(res)
        object.__setattr__(self, "resolutions", res)
        object.__setattr__(self, "gains", gains)
        if len(res) not in (1, 2):
            raise ParameterError("only 1-D and 2-D covers are supported")
        if len(gains) != len(res):
            raise ParameterError("need one gain per filter dimension")
        if any(r < 1 for r in res):
            raise ParameterError("resolutions must be >= 1")
        if self.cover_mode not in COVER_MODES:
            raise ParameterError(f"cover_mode must be one of {COVER_MODES}")
        if self.cover_mode == "equalized" and any(g < 1 for g in gains):
            raise ParameterError("gains must be >= 1 for the equalized cover")
        if self.cover_mode == "fixed_width" and not 0 <= self.overlap_fraction < 1:
            raise ParameterError("overlap_fraction must lie in [0, 1)")
        if self.histogram_bins < 2:
            raise ParameterError("histogram_bins must be >= 2")

    @property
    def dim(self) -> int:
        return len(self.resolutions)

    def to_dict(self) -> dict:
        out = {
            "resolutions": list(self.resolutions),
            "gains": list(self.gains),
            "cover_mode": self.cover_mode,
            "histogram_bins": self.histogram_bins,
        }
        if self.cover_mode == "fixed_width":
            out["overlap_fraction"] = self.overlap_fraction
        return out


@dataclass(frozen=True)
class CoverCell:
    tag: Tuple[int, ...]
    points: np.ndarray


def _equalized_bands(values: np.ndarray, N: int, g: float) -> np.ndarray:
    """Boolean (N, n) membership of closed quantile bands ``[i/N, (i+g)/N]``."""
    lo_levels = np.arange(N) / N
    hi_levels = np.minimum(1.0, (np.arange(N) + g) / N)
    lo = np.quantile(values, lo_levels)
    hi = np.quantile(values, hi_levels)
    return (values >= lo[:, None]) & (values <= hi[:, None])


def _fixed_width_bands(values: np.ndarray, N: int, overlap: float) -> np.ndarray:
    vmin, vmax = values.min(), values.max()
    length = (vmax - vmin) / (N - (N - 1) * overlap)
    lo = vmin + np.arange(N) * length * (1 - overlap)
    hi = lo + length
    hi[-1] = vmax
    return (values >= lo[:, None]) & (values <= hi[:, None])


def build_cover(filters, config: MapperConfig) -> List[CoverCell]:
    """Cover cells (pulled back to point indices), empty cells dropped.

    For 2-D filters the cover is the product grid, enumerated row-major in the
    interval indices.
    """
    F = np.asarray(filters, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    if F.shape[1] != config.dim:
        raise ParameterError(
            f"{F.shape[1]} filter columns but the cover has {config.dim} dimensions")
    if not np.all(np.isfinite(F)):
        raise DegenerateFilterError("filter values must be finite")
    bands = []
    for j in range(config.dim):
        col = F[:, j]
        if col.min() == col.max():
            raise DegenerateFilterError(f"filter dimension {j} is constant")
        N = config.resolutions[j]
        if config.cover_mode == "equalized":
            bands.append(_equalized_bands(col, N, config.gains[j]))
        else:
            bands.append(_fixed_width_bands(col, N, config.overlap_fraction))
    cells = []
    if config.dim == 1:
        for i, member in enumerate(bands[0]):
            pts = np.flatnonzero(member)
            if pts.size:
                cells.append(CoverCell((i,), pts))
    else:
        for i, j in product(range(config.resolutions[0]), range(config.resolutions[1])):
            pts = np.flatnonzero(bands[0][i] & bands[1][j])
            if pts.size:
                cells.append(CoverCell((i, j), pts))
    return cells


def first_gap_threshold(heights, bins: int):
    """Lower edge of the first empty histogram bin after the first occupied one.

    The histogram has ``bins`` equal-width bins spanning ``[0, max(heights)]``
    (the top bin is closed). Returns ``None`` when there is no such gap.
    """
    t = _kernels.first_gap(np.asarray(heights, dtype=float), int(bins))
    return None if t < 0 else float(t)


def _cluster_cell(D: np.ndarray, pts: np.ndarray, bins: int) -> List[np.ndarray]:
    m = pts.shape[0]
    if m == 1:
        return [pts]
    us, vs, ws = _kernels.mst_heights(D, pts)
    threshold = _kernels.first_gap(ws, bins)
    if threshold < 0:
        return [pts]
    roots = _kernels.cut_labels(m, us, vs, ws, threshold)
    # each root is the smallest local index of its component, so np.unique orders clusters
    return [pts[roots == r] for r in np.unique(roots)]


def cluster_preimage(D_sub, histogram_bins: int) -> List[np.ndarray]:
    """Single-linkage clusters of one cover cell, cut at the first histogram gap.

    Merge heights are the minimum-spanning-tree edge weights; clusters are
    the components left after dropping every merge at or above the gap
    threshold. Returns local index arrays ordered by their smallest member.
    """
    D_sub = np.ascontiguousarray(D_sub, dtype=float)
    return _cluster_cell(D_sub, np.arange(D_sub.shape[0]), histogram_bins)


@dataclass
class MapperGraph:
    """Mapper output: vertices as point-index sets, tagged with their cover cell."""

    vertices: List[np.ndarray]
    cells: List[Tuple[int, ...]]
    edges: np.ndarray
    n_points: int
    _adjacency: list = field(default=None, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return int(self.edges.shape[0])

    def adjacency(self) -> List[List[int]]:
        if self._adjacency is None:
            adj = [[] for _ in range(self.n_vertices)]
            for u, v in self.edges:
                adj[u].append(int(v))
                adj[v].append(int(u))
            self._adjacency = adj
        return self._adjacency

    def incidence(self) -> csr_matrix:
        """Sparse (vertices x points) membership matrix."""
        return _incidence(self.vertices, self.n_points)

    def to_dict(self, row_ids: Sequence = None) -> dict:
        def label(i):
            return row_ids[i] if row_ids is not None else int(i)

        return {
            "n_points": self.n_points,
            "vertices": [
                {"id": k, "cell": list(cell), "points": [label(i) for i in pts]}
                for k, (pts, cell) in enumerate(zip(self.vertices, self.cells))
            ],
            "edges": [[int(u), int(v)] for u, v in self.edges],
        }

    @classmethod
    def from_dict(cls, doc: dict, row_ids: Sequence = None) -> "MapperGraph":
        index = {r: i for i, r in enumerate(row_ids)} if row_ids is not None else None
        vertices, cells = [], []
        for v in doc["vertices"]:
            pts = [index[p] for p in v["points"]] if index else v["points"]
            vertices.append(np.array(pts, dtype=np.intp))
            cells.append(tuple(v["cell"]))
        edges = np.array(doc["edges"], dtype=np.intp).reshape(-1, 2)
        return cls(vertices, cells, edges, int(doc["n_points"]))


def _incidence(vertices, n_points) -> csr_matrix:
    rows = np.repeat(np.arange(len(vertices)), [len(v) for v in vertices])
    cols = np.concatenate(vertices) if vertices else np.array([], dtype=np.intp)
    return csr_matrix((np.ones(len(cols)), (rows, cols)), shape=(len(vertices), n_points))


def shared_point_edges(vertices, n_points) -> np.ndarray:
    """Edges ``(u, v)``, ``u < v``, between vertices with a common point."""
    if len(vertices) < 2:
        return np.empty((0, 2), dtype=np.intp)
    M = _incidence(vertices, n_points)
    shared = triu(M @ M.T, k=1).tocoo()
    edges = np.column_stack([shared.row, shared.col]).astype(np.intp)
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    return edges[order]


def build_mapper(X, D, filters, config: MapperConfig) -> MapperGraph:
    """Full Mapper construction from a distance matrix and filter values.

    ``X`` is accepted for interface symmetry; only ``D`` and the filters are
    used. Vertices are ordered by cover cell, then by smallest member.
    """
    Dv = np.asarray(getattr(D, "values", D), dtype=float)
    n = Dv.shape[0]
    F = np.asarray(filters, dtype=float)
    if F.shape[0] != n:
        raise ParameterError(f"{F.shape[0]} filter rows for {n} points")
    vertices, cells = [], []
    Dv = np.ascontiguousarray(Dv)
    for cell in build_cover(F, config):
        for members in _cluster_cell(Dv, cell.points, config.histogram_bins):
            vertices.append(members)
            cells.append(cell.tag)
    edges = shared_point_edges(vertices, n)
    return MapperGraph(vertices, cells, edges, n)
