"""Dense linear algebra used throughout the pipeline.

Sample covariance with its eigendecomposition, ridge shifting of singular
covariances, Gaussian sampling (full rank via Cholesky, or restricted to the
retained eigen-subspace), and classical multidimensional scaling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from .errors import DegenerateCovarianceError, DimensionError, InputError, ParameterError

RIDGE_TRIGGER = 1e-10
RIDGE_FLOOR = 1e-6
RETAIN_RELATIVE = 1e-12


@dataclass(frozen=True)
class DataMatrix:
    """An ``n x p`` observation matrix with row and feature labels."""

    values: np.ndarray
    feature_names: tuple = field(default=())
    row_ids: tuple = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise InputError(f"data matrix must be 2-D, got shape {values.shape}")
        n, p = values.shape
        if n < 2 or p < 2:
            raise InputError(f"data matrix needs n >= 2 and p >= 2, got {n}x{p}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise InputError(f"non-finite entry at row {bad[0]}, column {bad[1]}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(p))
        ids = tuple(self.row_ids) or tuple(str(i) for i in range(n))
        if len(names) != p:
            raise InputError(f"{len(names)} feature names for {p} columns")
        if len(ids) != n:
            raise InputError(f"{len(ids)} row ids for {n} rows")
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def as_array(X) -> np.ndarray:
    """Return the raw float array behind a DataMatrix or array-like."""
    if isinstance(X, DataMatrix):
        return X.values
    return np.asarray(X, dtype=float)


@dataclass(frozen=True)
class CovModel:
    """Covariance matrix together with its sorted eigendecomposition.

    ``eigenvalues`` holds the full spectrum in non-increasing order and
    ``eigenvectors`` the matching orthonormal columns; the first
    ``effective_rank`` of them are the retained directions used for
    reduced-rank sampling.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    epsilon: float = 0.0

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def effective_rank(self) -> int:
        lam = self.eigenvalues
        if lam.size == 0 or lam[0] <= 0:
            return 0
        return int(np.count_nonzero(lam > RETAIN_RELATIVE * lam[0]))

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def leading_eigenvector(self) -> np.ndarray:
        return self.eigenvectors[:, 0]

    @classmethod
    def from_matrix(cls, matrix, epsilon: float = 0.0) -> "CovModel":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise InputError(f"covariance must be square, got {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise InputError("covariance has non-finite entries")
        matrix = 0.5 * (matrix + matrix.T)
        lam, vec = np.linalg.eigh(matrix)
        order = np.argsort(lam)[::-1]
        lam, vec = lam[order], vec[:, order]
        for a in (matrix, lam, vec):
            a.setflags(write=False)
        return cls(matrix=matrix, eigenvalues=lam, eigenvectors=vec, epsilon=float(epsilon))


def sample_covariance(X) -> CovModel:
    """Unbiased sample covariance ``(X - mean)^T (X - mean) / (n - 1)``."""
    values = as_array(X)
    if values.ndim != 2 or values.shape[0] < 2:
        raise InputError("sample covariance needs a 2-D matrix with at least 2 rows")
    if not np.all(np.isfinite(values)):
        raise InputError("data contain non-finite entries")
    # shifting by the first row first keeps constant columns exactly zero
    shifted = values - values[0]
    centered = shifted - shifted.mean(axis=0)
    cov = centered.T @ centered / (values.shape[0] - 1)
    return CovModel.from_matrix(cov)


def ridge_regularize(C: CovModel) -> CovModel:
    """Shift the spectrum so the smallest eigenvalue is at least 1e-6.

    Left untouched when the smallest eigenvalue already reaches 1e-10.
    """
    lam_min = C.min_eigenvalue
    if lam_min >= RIDGE_TRIGGER:
        return C
    eps = max(0.0, -lam_min) + RIDGE_FLOOR
    matrix = C.matrix + eps * np.eye(C.dim)
    lam = C.eigenvalues + eps
    for a in (matrix, lam):
        a.setflags(write=False)
    return CovModel(matrix=matrix, eigenvalues=lam, eigenvectors=C.eigenvectors,
                    epsilon=C.epsilon + eps)


def sample_gaussian(C: CovModel, n: int, strategy: str, rng: np.random.Generator,
                    feature_names: Sequence[str] = ()) -> DataMatrix:
    """Draw ``n`` iid rows from ``N_p(0, C.matrix)``.

    ``strategy="ridge"`` factors the (positive definite) matrix by Cholesky;
    ``strategy="reduced_rank"`` draws ``Z diag(sqrt(lam_r)) V_r^T`` so every
    row lies in the span of the retained eigenvectors.
    """
    if strategy == "ridge":
        try:
            chol = linalg.cholesky(C.matrix, lower=True)
        except linalg.LinAlgError as exc:
            raise DegenerateCovarianceError(
                "covariance is not positive definite; apply ridge_regularize first"
            ) from exc
        Z = rng.standard_normal((n, C.dim))
        draws = Z @ chol.T
    elif strategy == "reduced_rank":
        r = C.effective_rank
        if r == 0:
            raise DegenerateCovarianceError("covariance has no positive eigenvalues")
        scale = np.sqrt(C.eigenvalues[:r])
        Z = rng.standard_normal((n, r))
        draws = (Z * scale) @ C.eigenvectors[:, :r].T
    else:
        raise ParameterError(f"unknown sampling strategy {strategy!r}")
    return DataMatrix(draws, feature_names=tuple(feature_names))


def double_center(M: np.ndarray) -> np.ndarray:
    """Return ``-1/2 H M H`` with ``H = I - 11^T/n``."""
    row = M.mean(axis=1, keepdims=True)
    col = M.mean(axis=0, keepdims=True)
    return -0.5 * (M - row - col + M.mean())


def classical_mds(D, k: int, square_entries: bool = True) -> np.ndarray:
    """Principal coordinates of a dissimilarity matrix.

    Parameters
    ----------
    D : (n, n) array
        Dissimilarities. May be asymmetric; the double-centred kernel is
        symmetrised before diagonalising.
    k : int
        Number of coordinates.
    square_entries : bool
        Square ``D`` entrywise before centring (standard PCoA). When false the
        raw matrix is centred, which is what ``cmdscale`` does when handed a
        shortest-path matrix directly.

    Returns
    -------
    (n, k) array
        Eigenvectors of the top ``k`` positive eigenvalues scaled by
        ``sqrt(lambda)``. Each column is signed so that its largest-magnitude
        entry is positive.
    """
    D = np.asarray(getattr(D, "values", D), dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise InputError(f"dissimilarity matrix must be square, got {D.shape}")
    if not np.all(np.isfinite(D)):
        raise InputError("dissimilarity matrix has non-finite entries")
    if k < 1:
        raise DimensionError("k must be at least 1")
    n = D.shape[0]
    M = D * D if square_entries else D
    B = double_center(M)
    B = 0.5 * (B + B.T)
    scale = np.abs(B).max()
    if scale == 0.0:
        return np.zeros((n, k))
    if k > n:
        raise DimensionError(f"requested {k} coordinates from {n} points")
    lam, vec = linalg.eigh(B, subset_by_index=[n - k, n - 1])
    lam, vec = lam[::-1], vec[:, ::-1]
    positive = lam > scale * n * np.finfo(float).eps
    if not positive.all():
        raise DimensionError(
            f"requested {k} coordinates but only {int(positive.sum())} positive "
            f"eigenvalues are available"
        )
    coords = vec * np.sqrt(lam)
    lead = np.argmax(np.abs(coords), axis=0)
    signs = np.sign(coords[lead, np.arange(k)])
    signs[signs == 0] = 1.0
    return coords * signs
