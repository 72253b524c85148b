"""Dissociation statistic, its single-feature variant, and null summaries."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .community import UNASSIGNED, CommunityResult
from .errors import DegenerateNullError, ParameterError
from .numerics import as_array


@dataclass(frozen=True)
class FeatureSplit:
    block_A: Tuple[int, ...]
    block_B: Tuple[int, ...]
    origin: str = "odd_even"

    def __post_init__(self):
        A, B = set(self.block_A), set(self.block_B)
        if not A or not B:
            raise ParameterError("both feature blocks must be nonempty")
        if A & B:
            raise ParameterError("feature blocks overlap")
        if abs(len(A) - len(B)) > 1:
            raise ParameterError("feature blocks must differ in size by at most one")
        if A | B != set(range(len(A) + len(B))):
            raise ParameterError("feature blocks must cover 0..p-1")

    @property
    def p(self) -> int:
        return len(self.block_A) + len(self.block_B)

    def to_dict(self) -> dict:
        return {"origin": self.origin, "A": list(self.block_A), "B": list(self.block_B)}


def make_split(p: int, mode: str = "odd_even", seed: Optional[int] = None) -> FeatureSplit:
    """Balanced two-block feature split.

    ``odd_even`` puts 0-based even indices in A and odd ones in B; ``random``
    draws a uniformly random balanced split from ``seed``.
    """
    if p < 2:
        raise ParameterError(f"a feature split needs p >= 2, got {p}")
    if mode == "odd_even":
        return FeatureSplit(tuple(range(0, p, 2)), tuple(range(1, p, 2)), "odd_even")
    if mode == "random":
        perm = np.random.default_rng(seed).permutation(p)
        half = (p + 1) // 2
        return FeatureSplit(tuple(sorted(int(j) for j in perm[:half])),
                            tuple(sorted(int(j) for j in perm[half:])),
                            f"random({seed})")
    raise ParameterError(f"unknown split mode {mode!r}")


@dataclass
class DissociationResult:
    D: float
    D_excl_singletons: float
    D_max: float
    per_pair_values: Dict[Tuple[int, int], Tuple[float, float]]
    argmax_pair: Optional[Tuple[int, int]]


def _community_means(values, labels, min_size):
    """Per-community column means for communities with at least ``min_size`` points."""
    mask = labels != UNASSIGNED
    lab = labels[mask]
    if lab.size == 0:
        return np.empty(0, dtype=np.intp), np.empty((0, values.shape[1]))
    K = int(lab.max()) + 1
    sizes = np.bincount(lab, minlength=K)
    keep = np.flatnonzero(sizes >= min_size)
    sums = np.zeros((K, values.shape[1]))
    np.add.at(sums, lab, values[mask])
    return keep, sums[keep] / sizes[keep, None]


def _spread(M) -> float:
    """Largest pairwise absolute difference down each column, maximised over columns."""
    if M.shape[0] < 2:
        return 0.0
    return float(np.max(M.max(axis=0) - M.min(axis=0)))


def block_averages(X, split: FeatureSplit) -> np.ndarray:
    """``n x 2`` matrix of each row's mean over block A and over block B."""
    values = as_array(X)
    return np.column_stack([values[:, list(split.block_A)].mean(axis=1),
                            values[:, list(split.block_B)].mean(axis=1)])


def dissociation(X, assignment, split: FeatureSplit,
                 exclude_singletons: bool = False) -> DissociationResult:
    """Maximum block-mean separation between any two communities.

    ``assignment`` holds one community label per row, with -1 for unassigned
    rows. ``D`` and ``D_max`` honour ``exclude_singletons``;
    ``D_excl_singletons`` always drops size-1 communities.
    """
    values = as_array(X)
    labels = np.asarray(assignment, dtype=np.intp)
    min_size = 2 if exclude_singletons else 1
    keep, means = _community_means(values, labels, min_size)
    mu = np.column_stack([means[:, list(split.block_A)].mean(axis=1),
                          means[:, list(split.block_B)].mean(axis=1)]) if keep.size else np.empty((0, 2))
    pairs = {}
    best, best_pair = 0.0, None
    for a in range(keep.size):
        for b in range(a + 1, keep.size):
            dA = abs(mu[a, 0] - mu[b, 0])
            dB = abs(mu[a, 1] - mu[b, 1])
            pair = (int(keep[a]), int(keep[b]))
            pairs[pair] = (float(dA), float(dB))
            if max(dA, dB) > best:
                best, best_pair = max(dA, dB), pair
    if best_pair is None and keep.size >= 2:
        best_pair = (int(keep[0]), int(keep[1]))
    if exclude_singletons:
        d_excl = best
    else:
        _, means2 = _community_means(values, labels, 2)
        Y2 = np.column_stack([means2[:, list(split.block_A)].mean(axis=1),
                              means2[:, list(split.block_B)].mean(axis=1)]) if len(means2) else np.empty((0, 2))
        d_excl = _spread(Y2)
    return DissociationResult(D=float(best), D_excl_singletons=float(d_excl),
                              D_max=_spread(means), per_pair_values=pairs,
                              argmax_pair=best_pair)


STAT_VARIANTS = ("D", "D_excl_singletons", "D_max", "D_max_excl_singletons")


def statistic_variants(X, assignment, split: FeatureSplit) -> Dict[str, float]:
    """All four statistic variants at once, without the per-pair table."""
    values = as_array(X)
    labels = np.asarray(assignment, dtype=np.intp)
    blocks = (list(split.block_A), list(split.block_B))
    out = {}
    for suffix, min_size in (("", 1), ("_excl_singletons", 2)):
        _, means = _community_means(values, labels, min_size)
        mu = np.column_stack([means[:, blocks[0]].mean(axis=1),
                              means[:, blocks[1]].mean(axis=1)]) if len(means) else np.empty((0, 2))
        out["D" + suffix] = _spread(mu)
        out["D_max" + suffix] = _spread(means)
    return out


def zscore(D_obs: float, null_samples) -> float:
    """``(D_obs - mean) / sd`` with the n-1 standard deviation."""
    s = np.asarray(null_samples, dtype=float)
    if s.size < 2:
        raise DegenerateNullError("need at least two null samples")
    sd = s.std(ddof=1)
    if sd == 0:
        raise DegenerateNullError("null samples have zero standard deviation")
    return float((D_obs - s.mean()) / sd)


def mc_pvalue(D_obs: float, null_samples) -> float:
    """Monte Carlo p-value ``(1 + #{D* >= D_obs}) / (1 + B)``."""
    s = np.asarray(null_samples, dtype=float)
    if s.size < 1:
        raise ParameterError("need at least one null sample")
    return float((1 + np.count_nonzero(s >= D_obs)) / (1 + s.size))


@dataclass
class PermutationResult:
    D_obs: float
    z_perm: float
    samples: np.ndarray


def permutation_null(X, result, split: FeatureSplit, n_perm: int,
                     rng: np.random.Generator, exclude_singletons: bool = False) -> PermutationResult:
    """Label-permutation baseline.

    Assigned points have their community labels shuffled (so community sizes
    are preserved) and ``D`` is recomputed. Unassigned points stay out.
    """
    labels = result.point_community if isinstance(result, CommunityResult) else np.asarray(result)
    labels = np.asarray(labels, dtype=np.intp)
    assigned = np.flatnonzero(labels != UNASSIGNED)
    lab = labels[assigned]
    K = np.unique(lab).size
    if K < 2 or assigned.size < K:
        raise ParameterError("permutation baseline needs at least two communities")
    Y = block_averages(as_array(X)[assigned], split)
    sizes = np.bincount(lab)
    keep = sizes >= (2 if exclude_singletons else 1)

    def stat(lbl):
        sums = np.column_stack([np.bincount(lbl, weights=Y[:, 0], minlength=sizes.size),
                                np.bincount(lbl, weights=Y[:, 1], minlength=sizes.size)])
        mu = sums[keep] / sizes[keep, None]
        return _spread(mu)

    d_obs = stat(lab)
    samples = np.array([stat(rng.permutation(lab)) for _ in range(n_perm)])
    return PermutationResult(D_obs=d_obs, z_perm=zscore(d_obs, samples), samples=samples)
