"""Structured (covariance-matched Gaussian) null test for Mapper communities.

The observed data go through distances, filters, Mapper, Louvain and point
assignment once. Then ``B`` replicates are drawn from ``N_p(0, Sigma_hat)``
and pushed through the identical pipeline. Each replicate owns a seed
derived from ``(base_seed, key)``, so results do not depend on execution
order or worker count.
"""
from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .community import CommunityResult, assign_points, louvain
from .errors import DegenerateNullError, MapNullError, ParameterError, ReplicateError, StageError
from .filters import FilterSpec, compute_filters, distance_matrix
from .mapper import MapperConfig, MapperGraph, build_mapper
from .numerics import CovModel, as_array, ridge_regularize, sample_covariance, sample_gaussian
from .teststat import (STAT_VARIANTS, FeatureSplit, make_split, mc_pvalue, permutation_null,
                       statistic_variants, zscore)

STRATEGIES = ("ridge", "reduced_rank")
OBSERVED_KEY = (0,)
PERMUTATION_KEY = (2,)


def replicate_key(b: int) -> tuple:
    return (1, int(b))


def seed_sequence(base_seed: int, key: tuple) -> np.random.SeedSequence:
    """Counter-based stream: the same (base_seed, key) always gives the same draws."""
    return np.random.SeedSequence(int(base_seed), spawn_key=tuple(int(k) for k in key))


@dataclass(frozen=True)
class PipelineConfig:
    """Every analyst choice that the observed run and each replicate share."""

    filters: tuple
    mapper: MapperConfig
    metric: str = "euclidean"
    split_mode: str = "odd_even"
    split_seed: Optional[int] = None
    strategy: str = "ridge"
    B: int = 50
    base_seed: int = 0
    n_perm: int = 0

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(self.filters))
        if not self.filters:
            raise ParameterError("at least one filter is required")
        if len(self.filters) != self.mapper.dim:
            raise ParameterError(
                f"{len(self.filters)} filters but the cover has {self.mapper.dim} dimensions")
        if self.B < 1:
            raise ParameterError("B must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ParameterError(f"strategy must be one of {STRATEGIES}")
        if self.n_perm < 0:
            raise ParameterError("n_perm must be >= 0")

    def split_for(self, p: int) -> FeatureSplit:
        return make_split(p, self.split_mode, self.split_seed)

    def to_dict(self) -> dict:
        filters = []
        for f in self.filters:
            entry = {"kind": f.kind}
            if f.kind in ("pcoa", "knn_geodesic_mds"):
                entry["axis"] = f.axis
            if f.kind == "knn_geodesic_mds":
                entry["k"] = f.k
            if f.kind == "external":
                entry["name"] = f.name
                entry["jitter_sd"] = f.jitter_sd
            filters.append(entry)
        return {
            "metric": self.metric,
            "filters": filters,
            "mapper": self.mapper.to_dict(),
            "split": {"mode": self.split_mode, "seed": self.split_seed},
            "null": {"B": self.B, "strategy": self.strategy, "base_seed": self.base_seed},
            "permutation": {"n_perm": self.n_perm},
        }


def mapper_digest(config: MapperConfig) -> str:
    blob = json.dumps(config.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class PipelineRun:
    """One pass of distances -> filters -> Mapper -> communities -> statistics."""

    graph: MapperGraph
    communities: CommunityResult
    stats: Dict[str, float]
    filters: np.ndarray
    mapper_digest: str


def run_pipeline(X, config: PipelineConfig, split: FeatureSplit,
                 seed: np.random.SeedSequence) -> PipelineRun:
    """Run the analysis pipeline once; ``seed`` feeds jitter and Louvain."""
    values = as_array(X)
    jitter_seed, louvain_seed = seed.spawn(2)
    stage = "distances"
    try:
        D = distance_matrix(values, config.metric)
        stage = "filters"
        F = compute_filters(D, config.filters, np.random.default_rng(jitter_seed))
        stage = "mapper"
        graph = build_mapper(values, D, F, config.mapper)
        stage = "communities"
        communities = assign_points(graph, louvain(graph, np.random.default_rng(louvain_seed)))
        stage = "statistic"
        stats = statistic_variants(values, communities.point_community, split)
    except MapNullError as exc:
        raise StageError(stage, exc) from exc
    return PipelineRun(graph, communities, stats, F, mapper_digest(config.mapper))


def estimate_covariance(X, strategy: str) -> CovModel:
    cov = sample_covariance(X)
    if strategy == "ridge":
        cov = ridge_regularize(cov)
    return cov


# Per-process state for replicate workers, installed once by the pool initializer.
_WORKER = {}


def _init_worker(cov, config, split, n):
    _WORKER.update(cov=cov, config=config, split=split, n=n)


def _replicate(key: int) -> dict:
    cov, config, split, n = _WORKER["cov"], _WORKER["config"], _WORKER["split"], _WORKER["n"]
    ss = seed_sequence(config.base_seed, replicate_key(key))
    sample_seed, pipe_seed = ss.spawn(2)
    try:
        Xb = sample_gaussian(cov, n, config.strategy, np.random.default_rng(sample_seed))
    except MapNullError as exc:
        raise ReplicateError(key, "sampling", exc) from exc
    try:
        run = run_pipeline(Xb.values, config, split, pipe_seed)
    except StageError as exc:
        raise ReplicateError(key, exc.stage, exc.cause) from exc
    comm = run.communities
    stats = dict(run.stats)
    if np.count_nonzero(comm.sizes) < 2:
        stats = {v: 0.0 for v in STAT_VARIANTS}
    return {
        "key": key,
        "stats": stats,
        "K": comm.K,
        "modularity": comm.modularity,
        "sizes": [int(s) for s in comm.sizes],
        "singletons": int(comm.singleton_flags.sum()),
        "mapper_digest": run.mapper_digest,
    }


def run_replicates(cov: CovModel, config: PipelineConfig, split: FeatureSplit, n: int,
                   keys: Sequence[int], workers: int = 1) -> List[dict]:
    """Evaluate null replicates, returned in the order of ``keys``."""
    keys = [int(k) for k in keys]
    if workers <= 1 or len(keys) < 2:
        _init_worker(cov, config, split, n)
        return [_replicate(k) for k in keys]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(cov, config, split, n)) as pool:
        return list(pool.map(_replicate, keys, chunksize=max(1, len(keys) // (4 * workers))))


def _safe_z(d_obs, samples):
    try:
        return zscore(d_obs, samples)
    except DegenerateNullError:
        return None


def _summary(values):
    v = np.asarray([x for x in values if x is not None], dtype=float)
    if v.size == 0:
        return None
    return {
        "mean": float(v.mean()),
        "sd": float(v.std(ddof=1)) if v.size > 1 else 0.0,
        "q025": float(np.quantile(v, 0.025)),
        "q975": float(np.quantile(v, 0.975)),
    }


@dataclass
class NullTestResult:
    D_obs: Dict[str, float]
    null_samples: Dict[str, List[float]]
    z: Dict[str, Optional[float]]
    p_hat: Dict[str, float]
    observed: dict
    permutation: Optional[dict]
    diagnostics: dict
    provenance: dict
    observed_run: Optional[PipelineRun] = field(default=None, repr=False, compare=False)

    @property
    def B(self) -> int:
        return len(self.null_samples["D"])

    def to_dict(self) -> dict:
        return {
            "D_obs": self.D_obs,
            "z": self.z,
            "p_hat": self.p_hat,
            "null_samples": self.null_samples,
            "observed": self.observed,
            "permutation": self.permutation,
            "diagnostics": self.diagnostics,
            "provenance": self.provenance,
        }


def default_workers() -> int:
    return os.cpu_count() or 1


def run_structured_null_test(X, config: PipelineConfig, workers: int = 1,
                             seed_schedule: Optional[Sequence[int]] = None) -> NullTestResult:
    """Compare observed dissociation with its covariance-matched Gaussian null.

    ``X`` must already be preprocessed; the covariance is estimated on exactly
    this matrix. ``seed_schedule`` lists the replicate keys (default
    ``1..B``); reordering it reorders but does not change the null draws.
    """
    values = as_array(X)
    n, p = values.shape
    split = config.split_for(p)
    observed = run_pipeline(values, config, split, seed_sequence(config.base_seed, OBSERVED_KEY))

    try:
        cov = estimate_covariance(values, config.strategy)
    except MapNullError as exc:
        raise StageError("covariance", exc) from exc

    keys = list(range(1, config.B + 1)) if seed_schedule is None else [int(k) for k in seed_schedule]
    if len(keys) != config.B:
        raise ParameterError(f"seed schedule has {len(keys)} keys for B = {config.B}")
    reps = run_replicates(cov, config, split, n, keys, workers)

    digest = observed.mapper_digest
    if any(r["mapper_digest"] != digest for r in reps):
        raise AssertionError("a null replicate used a different Mapper configuration")

    samples = {v: [r["stats"][v] for r in reps] for v in STAT_VARIANTS}
    d_obs = dict(observed.stats)
    z = {v: _safe_z(d_obs[v], samples[v]) for v in STAT_VARIANTS}
    p_hat = {v: mc_pvalue(d_obs[v], samples[v]) for v in STAT_VARIANTS}

    comm = observed.communities
    perm = None
    if config.n_perm > 0 and np.count_nonzero(comm.sizes) >= 2:
        perm_ss = seed_sequence(config.base_seed, PERMUTATION_KEY)
        perm = {"n_perm": config.n_perm}
        for label, excl in (("all", False), ("excl_singletons", True)):
            try:
                res = permutation_null(values, comm, split, config.n_perm,
                                       np.random.default_rng(perm_ss), exclude_singletons=excl)
                perm[label] = {"D_obs": res.D_obs, "z_perm": res.z_perm,
                               "mean": float(res.samples.mean()),
                               "sd": float(res.samples.std(ddof=1)),
                               "samples": res.samples.tolist()}
            except (DegenerateNullError, ParameterError) as exc:
                perm[label] = {"error": str(exc)}

    diagnostics = {
        "replicates": [{k: r[k] for k in ("key", "K", "modularity", "singletons", "sizes",
                                          "mapper_digest")} for r in reps],
        "null_modularity": _summary(r["modularity"] for r in reps),
        "null_K_mean": float(np.mean([r["K"] for r in reps])),
        "replicates_below_two_communities": int(sum(
            1 for r in reps if sum(1 for s in r["sizes"] if s > 0) < 2)),
    }
    provenance = {
        "config": config.to_dict(),
        "split": split.to_dict(),
        "n": n,
        "p": p,
        "seed_keys": keys,
        "mapper_digest": digest,
        "covariance": {"strategy": config.strategy, "epsilon": cov.epsilon,
                       "effective_rank": cov.effective_rank},
    }
    observed_doc = comm.to_dict()
    observed_doc["n_vertices"] = observed.graph.n_vertices
    observed_doc["n_edges"] = observed.graph.n_edges
    return NullTestResult(
        D_obs=d_obs, null_samples=samples, z=z, p_hat=p_hat, observed=observed_doc,
        permutation=perm, diagnostics=diagnostics, provenance=provenance,
        observed_run=observed,
    )


def split_sweep(X, config: PipelineConfig, n_splits: int, seed: int = 0,
                workers: int = 1) -> List[dict]:
    """Repeat the test under the odd/even split plus ``n_splits`` random splits."""
    rows = []
    configs = [replace(config, split_mode="odd_even", split_seed=None)]
    configs += [replace(config, split_mode="random", split_seed=int(seed) + i)
                for i in range(n_splits)]
    for cfg in configs:
        res = run_structured_null_test(X, cfg, workers=workers)
        rows.append({"split": res.provenance["split"]["origin"], "z": res.z, "p_hat": res.p_hat,
                     "D_obs": res.D_obs, "K": res.observed["K"]})
    return rows


def parameter_sweep(X, config: PipelineConfig, resolutions: Sequence[int],
                    gains: Sequence[float], workers: int = 1) -> List[dict]:
    """Repeat the test over a resolution x gain grid (same value on every filter axis)."""
    rows = []
    dim = config.mapper.dim
    for N in resolutions:
        for g in gains:
            mapper = replace(config.mapper, resolutions=(int(N),) * dim, gains=(float(g),) * dim)
            res = run_structured_null_test(X, replace(config, mapper=mapper), workers=workers)
            rows.append({"resolution": int(N), "gain": float(g), "z": res.z,
                         "p_hat": res.p_hat, "K": res.observed["K"]})
    return rows
