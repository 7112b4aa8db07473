"""Global directed n-gram transition graphs built from a token stream.

An n-gram graph has one node per distinct length-n window of the stream and
an edge ``u -> v`` for every pair of adjacent windows, weighted by how often
that shift occurs.  Window pairs at shift one are exactly the (n+1)-grams, so
edges are counted by encoding (n+1)-gram windows as base-|alphabet| integers.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .corpus import ALPHABET, ALPHABET_INDEX, SEPARATOR, encode

BASE = len(ALPHABET)
MAX_LEVEL = 12  # BASE ** (MAX_LEVEL + 1) must fit in int64

_SEP_CODE = ALPHABET_INDEX[SEPARATOR]


class EmptyGraphError(ValueError):
    pass


@dataclass
class NGramGraph:
    """Directed weighted transition graph at one n-gram level.

    ``nodes`` is sorted in alphabet order (residues lexicographic, separator
    last), so node indices are stable across runs.  Edges are stored as
    parallel arrays sorted by ``(src, dst)``.
    """

    level: int
    nodes: list[str]
    src: np.ndarray
    dst: np.ndarray
    counts: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return int(self.src.size)

    @cached_property
    def index(self) -> dict[str, int]:
        return {g: i for i, g in enumerate(self.nodes)}

    def adjacency(self) -> np.ndarray:
        """Dense raw weighted adjacency, ``A[u, v] = w_uv``."""
        n = self.num_nodes
        a = np.zeros((n, n), dtype=np.float64)
        a[self.src, self.dst] = self.counts
        return a

    def out_counts(self) -> np.ndarray:
        return np.bincount(self.src, weights=self.counts, minlength=self.num_nodes).astype(np.int64)

    def edges(self):
        """Iterate ``(src_ngram, dst_ngram, count)`` triples."""
        for u, v, c in zip(self.src.tolist(), self.dst.tolist(), self.counts.tolist()):
            yield self.nodes[u], self.nodes[v], c

    def edge_count(self, u: str, v: str) -> int:
        iu, iv = self.index[u], self.index[v]
        hit = np.flatnonzero((self.src == iu) & (self.dst == iv))
        return int(self.counts[hit[0]]) if hit.size else 0


def _decode(code: int, n: int) -> str:
    chars = []
    for _ in range(n):
        code, r = divmod(code, BASE)
        chars.append(ALPHABET[r])
    return "".join(reversed(chars))


def _window_codes(codes: np.ndarray, n: int) -> np.ndarray:
    """Base-BASE integer code of every length-n window (most significant first)."""
    m = codes.size - n + 1
    if m <= 0:
        return np.zeros(0, dtype=np.int64)
    out = np.zeros(m, dtype=np.int64)
    for k in range(n):
        out = out * BASE + codes[k : k + m]
    return out


def _has_separator(codes: np.ndarray, n: int) -> np.ndarray:
    m = codes.size - n + 1
    if m <= 0:
        return np.zeros(0, dtype=bool)
    sep = (codes == _SEP_CODE).astype(np.int64)
    csum = np.concatenate(([0], np.cumsum(sep)))
    return (csum[n : n + m] - csum[:m]) > 0


def _count_shard(codes: np.ndarray, n: int, split_at_separator: bool):
    """Unique node codes and (n+1)-gram edge codes with counts for one shard."""
    nodes = _window_codes(codes, n)
    edges = _window_codes(codes, n + 1)
    if split_at_separator:
        nodes = nodes[~_has_separator(codes, n)]
        edges = edges[~_has_separator(codes, n + 1)]
    node_codes = np.unique(nodes)
    edge_codes, edge_counts = np.unique(edges, return_counts=True)
    return node_codes, edge_codes, edge_counts.astype(np.int64)


def merge_counts(parts):
    """Associatively merge per-shard ``(node_codes, edge_codes, edge_counts)``."""
    parts = list(parts)
    node_codes = np.unique(np.concatenate([p[0] for p in parts]))
    all_edges = np.concatenate([p[1] for p in parts])
    all_counts = np.concatenate([p[2] for p in parts])
    edge_codes, inverse = np.unique(all_edges, return_inverse=True)
    edge_counts = np.bincount(inverse, weights=all_counts, minlength=edge_codes.size)
    return node_codes, edge_codes, edge_counts.astype(np.int64)


def build_graph(tokens, n: int, split_at_separator: bool = False, shards: int = 1) -> NGramGraph:
    """Count the level-``n`` transition graph of a token stream.

    ``tokens`` is any iterable of alphabet symbols or an already-encoded
    integer array.  With ``shards > 1`` the stream is cut into overlapping
    chunks that are counted independently and merged; the result is
    identical to the single-pass count.
    """
    if n < 1:
        raise ValueError(f"n-gram level must be >= 1, got {n}")
    if n > MAX_LEVEL:
        raise ValueError(f"n-gram level {n} exceeds the supported maximum {MAX_LEVEL}")
    codes = tokens if isinstance(tokens, np.ndarray) else encode(tokens)
    if codes.size < n:
        raise EmptyGraphError(f"stream of {codes.size} tokens has no windows of length {n}")

    # Chunk k covers window starts [s_k, s_{k+1}); it needs n extra tokens so the
    # (n+1)-gram starting at s_{k+1} - 1 is complete.
    n_windows = codes.size - n + 1
    bounds = np.linspace(0, n_windows, max(1, shards) + 1).astype(np.int64)
    parts = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi <= lo:
            continue
        node_chunk = codes[lo : hi + n - 1]
        edge_chunk = codes[lo : min(hi + n, codes.size)]
        nodes, _, _ = _count_shard(node_chunk, n, split_at_separator)
        _, edges, counts = _count_shard(edge_chunk, n, split_at_separator)
        parts.append((nodes, edges, counts))
    node_codes, edge_codes, edge_counts = merge_counts(parts)
    if node_codes.size == 0:
        raise EmptyGraphError(f"no level-{n} windows survive separator splitting")

    mod = BASE**n
    src_codes = edge_codes // BASE
    dst_codes = edge_codes % mod
    src = np.searchsorted(node_codes, src_codes)
    dst = np.searchsorted(node_codes, dst_codes)
    order = np.lexsort((dst, src))
    nodes = [_decode(int(c), n) for c in node_codes]
    return NGramGraph(
        level=n,
        nodes=nodes,
        src=src[order].astype(np.int64),
        dst=dst[order].astype(np.int64),
        counts=edge_counts[order],
        metadata={"split_at_separator": split_at_separator, "tokens": int(codes.size)},
    )


def build_hierarchy(tokens, max_n: int, split_at_separator: bool = False) -> list[NGramGraph]:
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    codes = tokens if isinstance(tokens, np.ndarray) else encode(tokens)
    return [build_graph(codes, n, split_at_separator) for n in range(1, max_n + 1)]


def transition_probabilities(g: NGramGraph) -> np.ndarray:
    """Row-stochastic matrix of ``P(v | u) = w_uv / sum_k w_uk``; sink rows stay zero."""
    a = g.adjacency()
    rows = a.sum(axis=1, keepdims=True)
    return np.divide(a, rows, out=np.zeros_like(a), where=rows > 0)


def sequence_log_likelihood(g: NGramGraph, residues: str) -> float:
    """Log-probability of a sequence read as a walk over ``g``'s windows.

    For level 1 this is ``sum_j log P(r_{j+1} | r_j)``.  Returns ``-inf``
    when a required transition was never observed.
    """
    n = g.level
    windows = [residues[i : i + n] for i in range(len(residues) - n + 1)]
    for w in windows:
        if w not in g.index:
            bad = next((ch for ch in w if ch not in ALPHABET_INDEX), w)
            raise KeyError(f"unknown symbol or n-gram {bad!r} for level-{n} graph")
    if len(windows) < 2:
        return 0.0
    out = g.out_counts()
    total = 0.0
    for u, v in zip(windows[:-1], windows[1:]):
        w = g.edge_count(u, v)
        if w == 0:
            return -math.inf
        total += math.log(w) - math.log(out[g.index[u]])
    return total


def save_graph(g: NGramGraph, prefix: str | os.PathLike) -> tuple[str, str]:
    """Write ``<prefix>.nodes.tsv`` and ``<prefix>.edges.tsv``."""
    prefix = os.fspath(prefix)
    nodes_path, edges_path = prefix + ".nodes.tsv", prefix + ".edges.tsv"
    with open(nodes_path, "w") as fh:
        fh.write("ngram\tindex\n")
        for i, ngram in enumerate(g.nodes):
            fh.write(f"{ngram}\t{i}\n")
    with open(edges_path, "w") as fh:
        fh.write("src\tdst\tcount\n")
        for u, v, c in g.edges():
            fh.write(f"{u}\t{v}\t{c}\n")
    return nodes_path, edges_path


def load_graph(prefix: str | os.PathLike) -> NGramGraph:
    prefix = os.fspath(prefix)
    with open(prefix + ".nodes.tsv") as fh:
        header = fh.readline().rstrip("\n")
        if header != "ngram\tindex":
            raise ValueError(f"{prefix}.nodes.tsv: unexpected header {header!r}")
        rows = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
    nodes = [None] * len(rows)
    for ngram, idx in rows:
        nodes[int(idx)] = ngram
    levels = {len(s) for s in nodes}
    if len(levels) != 1:
        raise ValueError(f"{prefix}.nodes.tsv: mixed n-gram lengths {sorted(levels)}")
    index = {s: i for i, s in enumerate(nodes)}
    src, dst, counts = [], [], []
    with open(prefix + ".edges.tsv") as fh:
        header = fh.readline().rstrip("\n")
        if header != "src\tdst\tcount":
            raise ValueError(f"{prefix}.edges.tsv: unexpected header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            u, v, c = line.rstrip("\n").split("\t")
            src.append(index[u])
            dst.append(index[v])
            counts.append(int(c))
    return NGramGraph(
        level=levels.pop(),
        nodes=nodes,
        src=np.asarray(src, dtype=np.int64),
        dst=np.asarray(dst, dtype=np.int64),
        counts=np.asarray(counts, dtype=np.int64),
    )


def hierarchy_stats(graphs) -> list[tuple[int, int, int]]:
    return [(g.level, g.num_nodes, g.num_edges) for g in graphs]


def format_stats(graphs) -> str:
    lines = ["n-gram Level (n)\t# Nodes (Unique n-grams)\t# Edges (Unique Transitions)"]
    for level, nodes, edges in hierarchy_stats(graphs):
        lines.append(f"{level}\t{nodes:,}\t{edges:,}")
    return "\n".join(lines)
