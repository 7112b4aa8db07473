"""Independent straight-line reference implementations used as test oracles."""

import itertools
import math
from collections import Counter

import numpy as np


def brute_force_graph(tokens, n):
    """Nodes and edge counts by enumerating windows with plain Python."""
    tokens = list(tokens)
    windows = [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]
    nodes = {"".join(w) for w in windows}
    edges = Counter(("".join(a), "".join(b)) for a, b in zip(windows[:-1], windows[1:]))
    return nodes, dict(edges)


def propagation_oracle(a_w, eps=1e-9):
    """Elementwise loops: row-normalize, split into S and K, take the magnitude, add I."""
    a_w = np.asarray(a_w, dtype=float)
    n = a_w.shape[0]
    p = np.zeros((n, n))
    for i in range(n):
        s = sum(a_w[i])
        for j in range(n):
            p[i][j] = a_w[i][j] / s if s > 0 else 0.0
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            sym = 0.5 * (p[i][j] + p[j][i])
            skew = 0.5 * (p[i][j] - p[j][i])
            out[i][j] = math.sqrt(sym * sym + skew * skew + eps) + (1.0 if i == j else 0.0)
    return out


def undirected_oracle(a_raw):
    a = np.asarray(a_raw, dtype=float)
    n = a.shape[0]
    t = a + a.T + np.eye(n)
    d = [sum(t[i]) for i in range(n)]
    return np.array([[t[i][j] / math.sqrt(d[i] * d[j]) for j in range(n)] for i in range(n)])


def leaky(x, slope):
    return np.where(x > 0, x, slope * x)


def layer_oracle(h, p, a_raw, mode, slope=0.01):
    """One DirectGCN layer written out term by term from plain arrays.

    ``p`` maps parameter names to numpy arrays.  Gates are ignored for mode
    'none'.
    """
    a_in = propagation_oracle(np.asarray(a_raw, dtype=float).T)
    a_out = propagation_oracle(a_raw)
    a_und = undirected_oracle(a_raw)
    shared = h @ p["w_shared"]
    terms = {}
    for path, a in (("in", a_in), ("out", a_out), ("undir", a_und)):
        main = a @ (h @ p[f"w_main_{path}"]) + p[f"b_main_{path}"]
        terms[path] = main + shared + p[f"b_shared_{path}"]
        if mode != "none":
            terms[path] = p[f"c_{path}"] * terms[path]
    pre = terms["undir"] + terms["in"] + terms["out"] + p["b_const"] + h @ p["w_res"]
    return leaky(pre, slope)


def pairwise_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for a in pos:
        for b in neg:
            total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (len(pos) * len(neg))


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]
        yield [[first]] + part


def modularity_oracle(w, blocks):
    w = np.asarray(w, dtype=float)
    m2 = w.sum()
    k = w.sum(axis=1)
    q = 0.0
    for block in blocks:
        for i, j in itertools.product(block, block):
            q += w[i, j] - k[i] * k[j] / m2
    return q / m2


def softmax_pool_scalar(vectors):
    """Attention pooling with explicit Python loops."""
    k, d = len(vectors), len(vectors[0])
    c = [sum(v[j] for v in vectors) / k for j in range(d)]
    s = [sum(v[j] * c[j] for j in range(d)) for v in vectors]
    e = [math.exp(x) for x in s]
    z = sum(e)
    alpha = [x / z for x in e]
    return [sum(alpha[i] * vectors[i][j] for i in range(k)) for j in range(d)], alpha


def smoothed_max_rise(trace, window=10):
    """Largest increase between consecutive points of a trailing moving average."""
    t = np.asarray(trace, dtype=float)
    ma = np.convolve(t, np.ones(window) / window, mode="valid")
    return float(np.max(np.diff(ma))) if ma.size > 1 else 0.0
