from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-9


@dataclass(frozen=True)
class PropagationSet:
    """Dense propagation matrices for the incoming, outgoing and undirected paths."""

    a_in: np.ndarray
    a_out: np.ndarray
    a_undir: np.ndarray

    @property
    def num_nodes(self) -> int:
        return self.a_in.shape[0]


def row_normalize(a: np.ndarray) -> np.ndarray:
    rows = a.sum(axis=1, keepdims=True)
    return np.divide(a, rows, out=np.zeros_like(a, dtype=np.float64), where=rows > 0)


def propagation_matrix(a_w: np.ndarray, eps: float = EPS) -> np.ndarray:
    """Magnitude of the symmetric and skew parts of the row-normalized adjacency.

    Returns ``sqrt(S*S + K*K + eps) + I`` (elementwise square and root) where
    ``S`` and ``K`` are the symmetric and skew-symmetric halves of
    ``D^-1 a_w``.
    """
    a_w = np.asarray(a_w, dtype=np.float64)
    if np.any(a_w < 0):
        raise ValueError("weighted adjacency must be nonnegative")
    a_n = row_normalize(a_w)
    s = (a_n + a_n.T) / 2.0
    k = (a_n - a_n.T) / 2.0
    out = np.sqrt(s * s + k * k + eps) + np.eye(a_w.shape[0])
    # S*S + K*K is symmetric in exact arithmetic; remove rounding asymmetry
    return (out + out.T) / 2.0


def undirected_propagation(a_raw: np.ndarray) -> np.ndarray:
    """Symmetric-normalized GCN operator ``D^-1/2 (A + A^T + I) D^-1/2``."""
    a_raw = np.asarray(a_raw, dtype=np.float64)
    a_tilde = a_raw + a_raw.T + np.eye(a_raw.shape[0])
    d = a_tilde.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(d)
    out = inv_sqrt[:, None] * a_tilde * inv_sqrt[None, :]
    return (out + out.T) / 2.0


def build_propagation_set(graph_or_adjacency) -> PropagationSet:
    """Propagation matrices from an :class:`NGramGraph` or a raw weighted adjacency."""
    a_raw = graph_or_adjacency.adjacency() if hasattr(graph_or_adjacency, "adjacency") else np.asarray(
        graph_or_adjacency, dtype=np.float64
    )
    return PropagationSet(
        a_in=propagation_matrix(a_raw.T),
        a_out=propagation_matrix(a_raw),
        a_undir=undirected_propagation(a_raw),
    )
