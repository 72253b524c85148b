import numpy as np
import pytest

from mapnull.errors import ParameterError, PrecisionError
from mapnull.simulation import block_covariance
from mapnull.teststat import FeatureSplit, dissociation
from mapnull.theory import (IntervalPartition, community_sizes, fpc_variance_check,
                            permutation_decay_check, population_dissociation_mc,
                            regression_identity_check, truncated_normal_mean)

SPLIT_2 = FeatureSplit((0,), (1,))


def test_half_normal_mean():
    assert truncated_normal_mean(2.0, 0.0, np.inf) == pytest.approx(np.sqrt(2 * 4 / np.pi))


def test_truncated_means_increasing():
    edges = [-np.inf, -1.5, -0.2, 0.4, 2.0, np.inf]
    means = [truncated_normal_mean(1.3, a, b) for a, b in zip(edges, edges[1:])]
    assert all(b > a for a, b in zip(means, means[1:]))


def test_partition_validation():
    with pytest.raises(ParameterError):
        IntervalPartition(())
    with pytest.raises(ParameterError):
        IntervalPartition((1.0, 0.0))


def test_bound_diag_split_at_zero():
    res = population_dissociation_mc(np.diag([4.0, 1.0]), IntervalPartition((0.0,)), SPLIT_2,
                                     200_000, np.random.default_rng(0))
    assert res.bound == pytest.approx(2 * np.sqrt(8 / np.pi), rel=1e-12)
    assert res.holds


def test_bound_zero_loadings():
    # leading eigenvector (1,-1)/sqrt2 within block A, nothing in block B
    S = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, 0.0], [0.0, 0.0, 0.5]])
    split = FeatureSplit((0, 1), (2,))
    res = population_dissociation_mc(S, IntervalPartition((0.0,)), split, 20_000,
                                     np.random.default_rng(1))
    assert res.bound == pytest.approx(0.0, abs=1e-12)
    assert res.holds


def test_finer_partition_not_smaller():
    rng = np.random.default_rng(2)
    coarse = population_dissociation_mc(np.diag([4.0, 1.0]), IntervalPartition((0.0,)), SPLIT_2,
                                        200_000, rng)
    fine = population_dissociation_mc(np.diag([4.0, 1.0]), IntervalPartition((-1.0, 0.0, 1.0)),
                                      SPLIT_2, 200_000, rng)
    assert fine.estimate >= coarse.estimate - 3 * (coarse.standard_error + fine.standard_error)


def test_repeated_leading_eigenvalue_rejected():
    with pytest.raises(ParameterError):
        population_dissociation_mc(np.eye(2), IntervalPartition((0.0,)), SPLIT_2, 1000,
                                   np.random.default_rng(0))


def test_empty_interval_precision_error():
    with pytest.raises(PrecisionError):
        population_dissociation_mc(np.diag([4.0, 1.0]), IntervalPartition((50.0,)), SPLIT_2,
                                   2000, np.random.default_rng(0))


def test_community_sizes():
    assert community_sizes(10, (0.5, 0.3, 0.2)).tolist() == [5, 3, 2]
    assert community_sizes(401, (0.5, 0.3, 0.2)).sum() == 401
    with pytest.raises(ParameterError):
        community_sizes(10, (0.5, 0.6))


def test_constant_data_permuted_zero():
    X = np.full((20, 4), 3.0)
    rng = np.random.default_rng(0)
    labels = np.repeat([0, 1], 10)
    for _ in range(10):
        assert dissociation(X, rng.permutation(labels), FeatureSplit((0, 2), (1, 3))).D == 0.0


def test_decay_grid_validation():
    with pytest.raises(ParameterError):
        permutation_decay_check((400, 100), 2, (0.5, 0.5))


def test_regression_identity():
    S = block_covariance(5, 0.5)
    slopes, se, u1 = regression_identity_check(S, 50_000, np.random.default_rng(3))
    assert np.all(np.abs(slopes - u1) <= 3 * se + 1e-12)


def test_fpc_small():
    emp, formula = fpc_variance_check(np.random.default_rng(4).standard_normal(500), 100, 3000,
                                      np.random.default_rng(5))
    assert emp == pytest.approx(formula, rel=0.1)
