"""Data-generating processes and the rejection-rate harness.

Every scenario draws ``R`` datasets, runs the structured null test on each
with the fixed two-dimensional PCoA Mapper pipeline, and reports the mean
z-score and the fraction of datasets with ``z > 1.645``.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .errors import ParameterError
from .filters import FilterSpec
from .mapper import MapperConfig
from .numerics import DataMatrix
from .nulltest import PipelineConfig, run_structured_null_test, seed_sequence

DGP_KINDS = ("spherical", "correlated_block", "multivariate_t", "skewed",
             "allfeature_mixture", "sparse_mixture", "hetero_cov_mixture")
STANDARDIZED_KINDS = ("skewed", "allfeature_mixture", "sparse_mixture", "hetero_cov_mixture")
Z_CRIT = 1.645

DISPLAY_NAMES = {
    "spherical": "Spherical Gaussian",
    "correlated_block": "Correlated Gaussian",
    "multivariate_t": "Multivariate t",
    "skewed": "Skewed unimodal",
    "allfeature_mixture": "All-feature mixture",
    "sparse_mixture": "Sparse mixture",
    "hetero_cov_mixture": "Hetero-covariance",
}


@dataclass(frozen=True)
class DGPSpec:
    """One data-generating process.

    ``rho`` is the within-group correlation of the block covariance that the
    correlated, t, skewed and mixture processes share.
    """

    kind: str
    n: int = 300
    p: int = 10
    rho: float = 0.5
    df: float = 5.0
    delta: float = 0.0
    k_shifted: int = 5
    standardize: Optional[bool] = None

    def __post_init__(self):
        if self.kind not in DGP_KINDS:
            raise ParameterError(f"unknown distribution {self.kind!r}; expected one of {DGP_KINDS}")
        if self.n < 2 or self.p < 2:
            raise ParameterError("need n >= 2 and p >= 2")
        if self.delta < 0:
            raise ParameterError("delta must be >= 0")
        if self.df <= 2:
            raise ParameterError("df must exceed 2")
        if not 0 <= self.rho < 1:
            raise ParameterError("rho must lie in [0, 1)")
        if self.kind == "sparse_mixture" and not 0 <= self.k_shifted <= self.p:
            raise ParameterError("k_shifted must lie in [0, p]")
        if self.standardize is None:
            object.__setattr__(self, "standardize", self.kind in STANDARDIZED_KINDS)

    @property
    def label(self) -> str:
        name = DISPLAY_NAMES[self.kind]
        if self.kind == "multivariate_t":
            return f"{name} (df={self.df:g})"
        if self.kind == "sparse_mixture":
            return f"{name} (k={self.k_shifted})"
        return name


def block_covariance(p: int, rho: float, first_group: Optional[int] = None) -> np.ndarray:
    """Unit-variance covariance with two independent equicorrelated groups.

    The first group has ``ceil(p/2)`` features unless ``first_group`` is given.
    """
    g1 = (p + 1) // 2 if first_group is None else first_group
    S = np.zeros((p, p))
    S[:g1, :g1] = rho
    S[g1:, g1:] = rho
    np.fill_diagonal(S, 1.0)
    return S


def _partial_block(p: int, rho: float, correlated_first: bool) -> np.ndarray:
    """Equicorrelated ``rho`` on one half of the features, identity on the other."""
    g1 = (p + 1) // 2
    S = np.eye(p)
    sl = slice(0, g1) if correlated_first else slice(g1, p)
    S[sl, sl] = rho
    np.fill_diagonal(S, 1.0)
    return S


def _mvn(rng, n, S):
    L = np.linalg.cholesky(S)
    return rng.standard_normal((n, S.shape[0])) @ L.T


def standardize_columns(X: np.ndarray) -> np.ndarray:
    """Center each column and scale it to unit sample standard deviation."""
    X = X - X.mean(axis=0)
    return X / X.std(axis=0, ddof=1)


@dataclass
class DGPDraw:
    """A generated dataset plus the mixture labels (never shown to the test)."""

    data: DataMatrix
    components: Optional[np.ndarray] = None
    raw: Optional[np.ndarray] = None


def generate_dgp_with_labels(spec: DGPSpec, rng: np.random.Generator) -> DGPDraw:
    """Generate one dataset, exposing component labels and the pre-scaling matrix."""
    n, p = spec.n, spec.p
    S = block_covariance(p, spec.rho)
    comp = None
    if spec.kind == "spherical":
        X = rng.standard_normal((n, p))
    elif spec.kind == "correlated_block":
        X = _mvn(rng, n, S)
    elif spec.kind == "multivariate_t":
        Z = _mvn(rng, n, S)
        V = rng.chisquare(spec.df, size=n)
        X = Z / np.sqrt(V / spec.df)[:, None]
    elif spec.kind == "skewed":
        X = np.exp(0.5 * _mvn(rng, n, S))
    elif spec.kind in ("allfeature_mixture", "sparse_mixture"):
        comp = rng.integers(0, 2, size=n)
        shift = np.full(p, spec.delta / 2.0)
        if spec.kind == "sparse_mixture":
            shift[spec.k_shifted:] = 0.0
        sign = np.where(comp == 0, 1.0, -1.0)
        X = _mvn(rng, n, S) + sign[:, None] * shift
    else:  # hetero_cov_mixture
        comp = rng.integers(0, 2, size=n)
        X = np.empty((n, p))
        for c, first in ((0, True), (1, False)):
            rows = comp == c
            X[rows] = _mvn(rng, int(rows.sum()), _partial_block(p, spec.rho, first))
    raw = X
    if spec.standardize:
        X = standardize_columns(X)
    return DGPDraw(DataMatrix(X), comp, raw)


def generate_dgp(spec: DGPSpec, rng: np.random.Generator) -> DataMatrix:
    """Draw one ``n x p`` dataset from the process described by ``spec``."""
    return generate_dgp_with_labels(spec, rng).data


def simulation_pipeline(B: int = 50, base_seed: int = 0, strategy: str = "ridge",
                        resolution: int = 15, gain: float = 2.0,
                        histogram_bins: int = 10) -> PipelineConfig:
    """The fixed simulation pipeline: 2-D equalized PCoA filters on Euclidean distance."""
    return PipelineConfig(
        filters=(FilterSpec("pcoa", axis=1), FilterSpec("pcoa", axis=2)),
        mapper=MapperConfig(resolutions=(resolution, resolution), gains=(gain, gain),
                            cover_mode="equalized", histogram_bins=histogram_bins),
        metric="euclidean",
        strategy=strategy,
        B=B,
        base_seed=base_seed,
    )


@dataclass
class ScenarioResult:
    spec: DGPSpec
    R: int
    B: int
    z: List[float]
    runtime: float
    p_hat: List[float] = field(default_factory=list)
    K: List[int] = field(default_factory=list)

    @property
    def rejection_rate(self) -> float:
        z = np.asarray(self.z, dtype=float)
        return float(np.mean(z > Z_CRIT))

    @property
    def rejections(self) -> int:
        return int(np.sum(np.asarray(self.z, dtype=float) > Z_CRIT))

    @property
    def mean_z(self) -> float:
        return float(np.nanmean(self.z))

    def row(self) -> Dict[str, object]:
        return {
            "distribution": self.spec.label,
            "kind": self.spec.kind,
            "p": self.spec.p,
            "n": self.spec.n,
            "delta": self.spec.delta if "mixture" in self.spec.kind and self.spec.kind != "hetero_cov_mixture" else None,
            "rho": self.spec.rho if self.spec.kind != "spherical" else None,
            "B": self.B,
            "R": self.R,
            "mean_z": round(self.mean_z, 6),
            "rejection_rate": round(self.rejection_rate, 6),
        }

    def to_dict(self) -> dict:
        def finite(x):
            return None if x is None or not np.isfinite(x) else float(x)

        return {"spec": asdict(self.spec), "R": self.R, "B": self.B,
                "z": [finite(z) for z in self.z], "p_hat": self.p_hat, "K": self.K,
                "rejection_rate": self.rejection_rate, "mean_z": finite(self.mean_z),
                "runtime": self.runtime}


def _one_dataset(args):
    spec, r, B, base_seed, strategy = args
    ss = seed_sequence(base_seed, (r,))
    data_seed, test_seed = ss.spawn(2)
    X = generate_dgp(spec, np.random.default_rng(data_seed))
    null_seed = int(test_seed.generate_state(1)[0])
    res = run_structured_null_test(X, simulation_pipeline(B=B, base_seed=null_seed,
                                                          strategy=strategy))
    z = res.z["D"]
    # a degenerate null (zero spread) yields nan, which never counts as a rejection
    return (float("nan") if z is None else z), res.p_hat["D"], res.observed["K"]


def run_scenario(spec: DGPSpec, R: int, B: int = 50, base_seed: int = 0,
                 workers: int = 1, strategy: str = "ridge") -> ScenarioResult:
    """Rejection rate of the structured null test over ``R`` simulated datasets.

    Datasets run in parallel across ``workers`` processes; replicates within a
    dataset run serially so the pool is never nested.
    """
    if R < 1:
        raise ParameterError("R must be >= 1")
    start = time.perf_counter()
    jobs = [(spec, r, B, base_seed, strategy) for r in range(R)]
    if workers <= 1:
        out = [_one_dataset(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_one_dataset, jobs))
    return ScenarioResult(spec=spec, R=R, B=B, z=[o[0] for o in out],
                          runtime=time.perf_counter() - start,
                          p_hat=[o[1] for o in out], K=[o[2] for o in out])


def preset_scenarios(name: str):
    """Full calibration or mixture grids as ``(DGPSpec, B)`` pairs."""
    if name == "calibration":
        return [
            (DGPSpec("spherical", p=10), 50),
            (DGPSpec("correlated_block", p=10), 50),
            (DGPSpec("correlated_block", p=50), 50),
            (DGPSpec("correlated_block", p=500), 50),
            (DGPSpec("correlated_block", p=10), 100),
            (DGPSpec("multivariate_t", p=10, df=5.0), 50),
            (DGPSpec("skewed", p=10), 50),
        ]
    if name == "mixtures":
        rows = [(DGPSpec("allfeature_mixture", p=p, delta=d), 50)
                for p, d in ((10, 0.5), (10, 1.0), (10, 2.0), (50, 2.0))]
        rows += [(DGPSpec("sparse_mixture", p=50, delta=d, k_shifted=5), 50) for d in (1.0, 2.0)]
        rows += [(DGPSpec("hetero_cov_mixture", p=p, rho=r), 50)
                 for r in (0.5, 0.8, 0.9) for p in (10, 50)]
        return rows
    raise ParameterError(f"unknown preset {name!r}")


TABLE_COLUMNS = ("distribution", "p", "delta", "rho", "B", "R", "mean_z", "rejection_rate")


def format_table(results: List[ScenarioResult]) -> str:
    """Markdown table laid out like the calibration / mixture tables."""
    head = ["Distribution", "p", "delta", "rho", "B", "R", "Mean z", "Rejection rate"]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for res in results:
        row = res.row()
        cells = [row["distribution"], str(row["p"]),
                 "---" if row["delta"] is None else f"{row['delta']:.1f}",
                 "---" if row["rho"] is None else f"{row['rho']:.1f}",
                 str(row["B"]), str(row["R"]), f"{res.mean_z:.2f}", f"{res.rejection_rate:.3f}"]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
