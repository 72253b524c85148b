"""Numerical checks of the two dissociation results in their idealised setting.

Covariance-driven dissociation: under ``N_p(0, Sigma)`` and an interval
partition of the leading principal component score, block-averaged
community means separate by at least ``max(|u1_A|, |u1_B|)`` times the gap
between the extreme truncated-normal means of the score.

Label-permutation decay: size-preserving random relabelling drives the
dissociation to zero like ``n^{-1/2}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import ParameterError, PrecisionError
from .numerics import CovModel
from .teststat import FeatureSplit, block_averages, permutation_null


@dataclass(frozen=True)
class IntervalPartition:
    """Intervals ``(-inf, b1], (b1, b2], ..., (bK-1, inf)`` of the real line."""

    breakpoints: tuple

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        object.__setattr__(self, "breakpoints", bp)
        if len(bp) < 1:
            raise ParameterError("an interval partition needs K >= 2 intervals")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ParameterError("breakpoints must be strictly increasing")

    @property
    def K(self) -> int:
        return len(self.breakpoints) + 1

    def edges(self):
        return (-np.inf,) + self.breakpoints + (np.inf,)

    def locate(self, values) -> np.ndarray:
        return np.searchsorted(np.asarray(self.breakpoints), values, side="left")


def truncated_normal_mean(sd: float, lo: float, hi: float) -> float:
    """``E[f | lo < f <= hi]`` for ``f ~ N(0, sd^2)``."""
    a, b = lo / sd, hi / sd
    mass = stats.norm.cdf(b) - stats.norm.cdf(a) if b <= 0 else stats.norm.sf(a) - stats.norm.sf(b)
    if mass <= 0:
        raise PrecisionError(f"interval ({lo}, {hi}] has no probability mass")
    return float(sd * (stats.norm.pdf(a) - stats.norm.pdf(b)) / mass)


def block_loadings(u: np.ndarray, split: FeatureSplit):
    return float(np.mean(u[list(split.block_A)])), float(np.mean(u[list(split.block_B)]))


@dataclass
class PopulationDissociation:
    estimate: float
    bound: float
    standard_error: float
    block_means: np.ndarray
    loadings: tuple
    filter_means: tuple

    @property
    def holds(self) -> bool:
        """Estimate at least the bound minus three Monte Carlo standard errors."""
        return self.estimate >= self.bound - 3.0 * self.standard_error


def _spread(mu: np.ndarray) -> float:
    return float(np.max(mu.max(axis=0) - mu.min(axis=0)))


def population_dissociation_mc(Sigma, partition: IntervalPartition, split: FeatureSplit,
                               samples: int, rng: np.random.Generator,
                               batches: int = 20) -> PopulationDissociation:
    """Monte Carlo population dissociation against its closed-form lower bound.

    The filter is the leading principal component score ``f = u1^T x``.
    Standard error comes from batch means over ``batches`` equal batches.
    """
    cov = Sigma if isinstance(Sigma, CovModel) else CovModel.from_matrix(Sigma)
    lam = cov.eigenvalues
    if lam.size > 1 and lam[0] - lam[1] <= 1e-8 * lam[0]:
        raise ParameterError("leading eigenvalue must be simple")
    u1 = cov.leading_eigenvector
    chol = np.linalg.cholesky(cov.matrix)
    K = partition.K
    per = samples // batches
    if per < 1:
        raise ParameterError("need at least one sample per batch")
    sums = np.zeros((batches, K, 2))
    counts = np.zeros((batches, K))
    for b in range(batches):
        X = rng.standard_normal((per, cov.dim)) @ chol.T
        f = X @ u1
        cell = partition.locate(f)
        Y = block_averages(X, split)
        for k in range(K):
            sel = cell == k
            counts[b, k] = sel.sum()
            sums[b, k] = Y[sel].sum(axis=0)
    if np.any(counts.sum(axis=0) == 0):
        raise PrecisionError("an interval received no samples; increase the sample count")
    means = sums.sum(axis=0) / counts.sum(axis=0)[:, None]
    estimate = _spread(means)
    batch_vals = []
    for b in range(batches):
        if np.any(counts[b] == 0):
            raise PrecisionError("an interval received no samples within a batch; "
                                 "increase the sample count")
        batch_vals.append(_spread(sums[b] / counts[b][:, None]))
    se = float(np.std(batch_vals, ddof=1) / np.sqrt(batches))

    sd = float(np.sqrt(lam[0]))
    edges = partition.edges()
    f_min = truncated_normal_mean(sd, edges[0], edges[1])
    f_max = truncated_normal_mean(sd, edges[-2], edges[-1])
    loadings = block_loadings(u1, split)
    bound = max(abs(loadings[0]), abs(loadings[1])) * abs(f_max - f_min)
    return PopulationDissociation(estimate=estimate, bound=float(bound), standard_error=se,
                                  block_means=means, loadings=loadings,
                                  filter_means=(f_min, f_max))


def community_sizes(n: int, pis: Sequence[float]) -> np.ndarray:
    """Integer sizes proportional to ``pis`` summing to ``n`` (largest remainder)."""
    pis = np.asarray(pis, dtype=float)
    if np.any(pis <= 0) or np.any(pis >= 1) or not np.isclose(pis.sum(), 1.0):
        raise ParameterError("community proportions must lie in (0, 1) and sum to 1")
    raw = pis * n
    sizes = np.floor(raw).astype(int)
    short = n - sizes.sum()
    sizes[np.argsort(-(raw - sizes), kind="stable")[:short]] += 1
    return sizes


def gaussian_dgp(p: int = 10, rho: float = 0.5) -> Callable:
    from .simulation import block_covariance

    L = np.linalg.cholesky(block_covariance(p, rho))
    return lambda n, rng: rng.standard_normal((n, p)) @ L.T


@dataclass
class DecayResult:
    n_grid: tuple
    medians: tuple
    slope: float


def permutation_decay_check(n_grid: Sequence[int], K: int, pis: Sequence[float],
                            dgp: Optional[Callable] = None,
                            rng: Optional[np.random.Generator] = None,
                            n_perm: int = 200, split: Optional[FeatureSplit] = None) -> DecayResult:
    """Median permuted dissociation per ``n`` and its fitted log-log slope."""
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ParameterError("n_grid must be increasing")
    if len(pis) != K:
        raise ParameterError("need one proportion per community")
    rng = rng if rng is not None else np.random.default_rng()
    dgp = dgp or gaussian_dgp()
    medians = []
    for n in n_grid:
        X = dgp(n, rng)
        if split is None:
            from .teststat import make_split
            split_n = make_split(X.shape[1])
        else:
            split_n = split
        labels = np.repeat(np.arange(K), community_sizes(n, pis))
        res = permutation_null(X, labels, split_n, n_perm, rng)
        medians.append(float(np.median(res.samples)))
    slope = float(np.polyfit(np.log(n_grid), np.log(medians), 1)[0])
    return DecayResult(tuple(n_grid), tuple(medians), slope)


def fpc_variance_check(Y, n_k: int, n_perm: int, rng: np.random.Generator):
    """Empirical variance of a permuted community mean vs. the finite-population formula.

    Returns ``(empirical, formula)`` where ``formula = (1/n_k - 1/n) S^2``.
    """
    Y = np.asarray(Y, dtype=float)
    n = Y.size
    draws = np.array([Y[rng.permutation(n)[:n_k]].mean() for _ in range(n_perm)])
    formula = (1.0 / n_k - 1.0 / n) * Y.var(ddof=1)
    return float(draws.var(ddof=1)), float(formula)


def regression_identity_check(Sigma, n: int, rng: np.random.Generator):
    """Slopes of each ``X_j`` regressed on the PC1 score, with standard errors.

    Returns ``(slopes, standard_errors, u1)``; under a Gaussian the slopes
    estimate ``u1``.
    """
    cov = Sigma if isinstance(Sigma, CovModel) else CovModel.from_matrix(Sigma)
    u1 = cov.leading_eigenvector
    X = rng.standard_normal((n, cov.dim)) @ np.linalg.cholesky(cov.matrix).T
    f = X @ u1
    fc = f - f.mean()
    Xc = X - X.mean(axis=0)
    sxx = fc @ fc
    slopes = fc @ Xc / sxx
    resid = Xc - np.outer(fc, slopes)
    se = np.sqrt((resid ** 2).sum(axis=0) / (n - 2) / sxx)
    return slopes, se, u1
