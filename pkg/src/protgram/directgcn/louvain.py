"""Louvain modularity maximization on a dense symmetric weight matrix."""

from __future__ import annotations

import numpy as np


def modularity(w: np.ndarray, communities) -> float:
    w = np.asarray(w, dtype=np.float64)
    communities = np.asarray(communities)
    two_m = w.sum()
    if two_m == 0:
        return 0.0
    k = w.sum(axis=1)
    same = communities[:, None] == communities[None, :]
    return float(((w - np.outer(k, k) / two_m) * same).sum() / two_m)


def _renumber(labels: np.ndarray) -> np.ndarray:
    """Dense ids in order of first appearance."""
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.reshape(-1)]


def _local_moves(w: np.ndarray, tol: float) -> tuple[np.ndarray, bool]:
    n = w.shape[0]
    k = w.sum(axis=1)
    two_m = k.sum()
    comm = np.arange(n)
    tot = k.copy()
    improved = False
    while True:
        moved = False
        for i in range(n):
            ci = comm[i]
            tot[ci] -= k[i]
            links = np.bincount(comm, weights=w[i], minlength=n)
            links[ci] -= w[i, i]
            gain = np.where(links > 0, links - tot * k[i] / two_m, -np.inf)
            stay = links[ci] - tot[ci] * k[i] / two_m
            best = int(np.argmax(gain))  # first maximum: smallest community id
            if not gain[best] > stay + tol:
                best = ci
            comm[i] = best
            tot[best] += k[i]
            if best != ci:
                moved = improved = True
        if not moved:
            return comm, improved


def louvain(w, tol: float = 1e-12) -> np.ndarray:
    """Community id per node, renumbered densely from 0.

    Nodes are visited in index order during local moves and a move needs a
    strictly positive gain, so the result is deterministic.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"expected a square weight matrix, got shape {w.shape}")
    if not np.allclose(w, w.T):
        raise ValueError("louvain expects a symmetric weight matrix")
    n = w.shape[0]
    membership = np.arange(n)
    if w.sum() == 0:
        return membership
    current = w
    while True:
        comm, improved = _local_moves(current, tol)
        if not improved:
            break
        comm = _renumber(comm)
        membership = comm[membership]
        onehot = np.zeros((current.shape[0], comm.max() + 1))
        onehot[np.arange(current.shape[0]), comm] = 1.0
        current = onehot.T @ current @ onehot
    return _renumber(membership)
