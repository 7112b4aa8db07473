from __future__ import annotations

import numpy as np

from .louvain import louvain


def next_node_labels(g) -> np.ndarray:
    """Index of each node's highest-weight successor.

    Ties go to the smallest target index, which is the lexicographically
    smallest n-gram because nodes are stored in alphabet order.  Nodes with
    no outgoing edge are labeled with themselves.
    """
    n = g.num_nodes
    labels = np.arange(n, dtype=np.int64)
    best = np.zeros(n, dtype=np.int64)
    # edges are sorted by (src, dst), so the first strict maximum per source wins ties
    for u, v, c in zip(g.src.tolist(), g.dst.tolist(), g.counts.tolist()):
        if c > best[u]:
            best[u] = c
            labels[u] = v
    return labels


def louvain_labels(g) -> np.ndarray:
    """Louvain communities of the graph symmetrized as ``w + w^T``."""
    a = g.adjacency() if hasattr(g, "adjacency") else np.asarray(g, dtype=np.float64)
    return louvain(a + a.T)
