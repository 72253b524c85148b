import json
import math

import numpy as np
import pytest
from oracles import first_gap_clusters, shared_point_edges

from mapnull.errors import DegenerateFilterError, ParameterError
from mapnull.filters import FilterSpec, compute_filters, distance_matrix
from mapnull.mapper import (MapperConfig, MapperGraph, build_cover, build_mapper, cluster_preimage,
                            first_gap_threshold)


def cells_of(values, **kw):
    cfg = MapperConfig(**kw)
    return [sorted(values[c.points].tolist()) for c in build_cover(values, cfg)]


def test_cover_disjoint_halves():
    v = np.arange(1.0, 9.0)
    assert cells_of(v, resolutions=(2,), gains=(1.0,)) == [[1, 2, 3, 4], [5, 6, 7, 8]]


def test_cover_gain_two():
    v = np.arange(1.0, 9.0)
    assert cells_of(v, resolutions=(4,), gains=(2.0,)) == [
        [1, 2, 3, 4], [3, 4, 5, 6], [5, 6, 7, 8], [7, 8]]


def test_cover_product_grid_bound():
    F = np.random.default_rng(0).standard_normal((200, 2))
    cells = build_cover(F, MapperConfig(resolutions=(3, 5), gains=(1.5,)))
    assert len(cells) <= 15
    assert len({c.tag for c in cells}) == len(cells)


def test_cover_fixed_width():
    v = np.linspace(0.0, 10.0, 11)
    cfg = MapperConfig(resolutions=(4,), cover_mode="fixed_width", overlap_fraction=0.5)
    cells = build_cover(v, cfg)
    # length = 10 / (4 - 3 * 0.5) = 4, starts 0, 2, 4, 6
    assert [v[c.points].tolist() for c in cells] == [
        [0, 1, 2, 3, 4], [2, 3, 4, 5, 6], [4, 5, 6, 7, 8], [6, 7, 8, 9, 10]]


def test_cover_constant_filter():
    with pytest.raises(DegenerateFilterError):
        build_cover(np.ones(10), MapperConfig(resolutions=(3,)))


def test_config_validation():
    with pytest.raises(ParameterError):
        MapperConfig(resolutions=(3,), gains=(0.5,))
    with pytest.raises(ParameterError):
        MapperConfig(resolutions=(0,))
    with pytest.raises(ParameterError):
        MapperConfig(resolutions=(3,), histogram_bins=1)
    with pytest.raises(ParameterError):
        MapperConfig(resolutions=(3, 3, 3))
    with pytest.raises(ParameterError):
        MapperConfig(resolutions=(3,), cover_mode="fixed_width", overlap_fraction=1.0)
    assert MapperConfig(resolutions=(3, 4), gains=(2.0,)).gains == (2.0, 2.0)


@pytest.mark.parametrize("seed", range(5))
def test_cover_complete_and_multiplicity(seed):
    rng = np.random.default_rng(seed)
    F = rng.standard_normal((150, 2))
    g = 2.5
    cells = build_cover(F, MapperConfig(resolutions=(6, 4), gains=(g,)))
    counts = np.zeros(150, dtype=int)
    for c in cells:
        counts[c.points] += 1
    assert np.all(counts >= 1)
    assert np.all(counts <= math.ceil(g) ** 2)


def test_first_gap_examples():
    assert first_gap_threshold([1.0, 1.0, 1.0], 10) is None
    assert first_gap_threshold([0.1, 0.1, 9.9], 10) == pytest.approx(0.99)
    assert first_gap_threshold([0.0, 0.0], 10) is None


def test_cluster_single_point():
    out = cluster_preimage(np.zeros((1, 1)), 10)
    assert len(out) == 1 and out[0].tolist() == [0]


def test_cluster_two_pairs_on_line():
    x = np.array([0.0, 0.1, 10.0, 10.1])
    out = cluster_preimage(np.abs(x[:, None] - x), 10)
    assert [c.tolist() for c in out] == [[0, 1], [2, 3]]


def test_cluster_equal_distances_one_cluster():
    D = np.ones((5, 5)) - np.eye(5)
    assert [c.tolist() for c in cluster_preimage(D, 10)] == [[0, 1, 2, 3, 4]]


@pytest.mark.parametrize("seed", range(30))
def test_cluster_matches_scipy_single_linkage(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(2, 25))
    P = rng.standard_normal((m, 2)) + rng.integers(0, 3, (m, 1)) * 4
    D = distance_matrix(P).values
    bins = int(rng.integers(2, 12))
    got = [c.tolist() for c in cluster_preimage(D, bins)]
    want = [c.tolist() for c in first_gap_clusters(D, bins)]
    assert got == want


def two_blobs(n=60, seed=0):
    rng = np.random.default_rng(seed)
    return np.vstack([rng.standard_normal((n // 2, 3)), rng.standard_normal((n // 2, 3)) + 20])


def lattice_blobs():
    grid = np.array([(i, j) for i in range(6) for j in range(5)], dtype=float)
    return np.vstack([grid, grid + 40.0])


def test_two_blobs_two_components():
    import networkx as nx

    X = lattice_blobs()
    D = distance_matrix(X)
    F = compute_filters(D, [FilterSpec("pcoa", axis=1)])
    graph = build_mapper(X, D, F, MapperConfig(resolutions=(2,), gains=(1.0,)))
    G = nx.Graph()
    G.add_nodes_from(range(graph.n_vertices))
    G.add_edges_from(map(tuple, graph.edges))
    assert nx.number_connected_components(G) == 2


def test_single_vertex_graph():
    X = np.random.default_rng(1).standard_normal((30, 3))
    D = distance_matrix(X)
    F = compute_filters(D, [FilterSpec("pcoa", axis=1)])
    graph = build_mapper(X, D, F, MapperConfig(resolutions=(1,), gains=(1.0,), histogram_bins=2))
    assert graph.n_vertices == 1 and graph.n_edges == 0


@pytest.mark.parametrize("seed", range(5))
def test_graph_edges_exhaustive_and_complete(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((80, 4))
    D = distance_matrix(X)
    F = compute_filters(D, [FilterSpec("pcoa", axis=1), FilterSpec("pcoa", axis=2)])
    graph = build_mapper(X, D, F, MapperConfig(resolutions=(4, 4), gains=(2.0,)))
    verts = [v.tolist() for v in graph.vertices]
    assert all(len(v) > 0 for v in verts)
    assert [tuple(e) for e in graph.edges.tolist()] == shared_point_edges(verts)
    assert set().union(*map(set, verts)) == set(range(80))
    # vertex order: cell-major, then by smallest member
    keys = [(graph.cells[i], verts[i][0]) for i in range(len(verts))]
    assert keys == sorted(keys)


def test_build_mapper_deterministic_and_roundtrip():
    X = two_blobs(seed=3)
    D = distance_matrix(X)
    F = compute_filters(D, [FilterSpec("pcoa", axis=1)])
    cfg = MapperConfig(resolutions=(5,), gains=(2.0,))
    a = build_mapper(X, D, F, cfg)
    b = build_mapper(X, D, F, cfg)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    ids = [f"r{i}" for i in range(X.shape[0])]
    back = MapperGraph.from_dict(json.loads(json.dumps(a.to_dict(ids))), ids)
    assert back.to_dict() == a.to_dict()
