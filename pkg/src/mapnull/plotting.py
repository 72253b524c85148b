"""Report figures. Presentation only; nothing here feeds back into the statistics."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed salt and no timestamp so identical inputs give identical SVG bytes
matplotlib.rcParams["svg.hashsalt"] = "mapnull"
SVG_METADATA = {"Date": None}


def _save(fig, path):
    path = str(path)
    meta = SVG_METADATA if path.endswith(".svg") else None
    fig.savefig(path, metadata=meta, bbox_inches="tight")
    plt.close(fig)


def null_histogram(null_samples, D_obs, path, title="Structured null", z=None, p_hat=None):
    """Histogram of null dissociation values with the observed value marked."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    samples = np.asarray(null_samples, dtype=float)
    ax.hist(samples, bins=min(30, max(5, samples.size // 4)), color="0.7", edgecolor="0.3")
    ax.axvline(D_obs, color="C3", lw=2, label=f"observed D = {D_obs:.3f}")
    label = title
    if z is not None:
        label += f"   z = {z:.2f}"
    if p_hat is not None:
        label += f"   p = {p_hat:.3f}"
    ax.set_title(label, fontsize=10)
    ax.set_xlabel("dissociation D")
    ax.set_ylabel("null replicates")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def scenario_z_plot(results, path, z_crit=1.645):
    """One box of per-dataset z-scores per simulated scenario."""
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(results) + 2), 3.8))
    data = [np.asarray(r.z, dtype=float)[np.isfinite(r.z)] for r in results]
    ax.boxplot(data, showfliers=True)
    ax.set_xticks(range(1, len(results) + 1))
    ax.set_xticklabels([f"{r.spec.label}\np={r.spec.p}" for r in results], fontsize=7, rotation=20)
    ax.axhline(z_crit, color="C3", ls="--", lw=1, label=f"z = {z_crit}")
    ax.set_ylabel("z (structured null)")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)


def mapper_graph_plot(graph, vertex_community, path, seed=0):
    """Spring layout of the Mapper graph, vertices coloured by community."""
    import networkx as nx

    G = nx.Graph()
    G.add_nodes_from(range(graph.n_vertices))
    G.add_edges_from((int(u), int(v)) for u, v in graph.edges)
    pos = nx.spring_layout(G, seed=seed)
    sizes = [10 + 4 * len(v) for v in graph.vertices]
    fig, ax = plt.subplots(figsize=(6, 6))
    nx.draw_networkx_edges(G, pos, ax=ax, width=0.5, edge_color="0.6")
    nx.draw_networkx_nodes(G, pos, ax=ax, node_size=sizes, node_color=list(vertex_community),
                           cmap="tab20", linewidths=0.3, edgecolors="0.2")
    ax.set_axis_off()
    _save(fig, path)
