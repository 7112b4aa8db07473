"""Node-classification harness for DirectGCN on user-supplied datasets and Karate Club."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .directgcn import TrainConfig, build_propagation_set, fit, model_forward
from .numcore import Tensor

KARATE_EDGES = (
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10), (0, 11), (0, 12), (0, 13),
    (0, 17), (0, 19), (0, 21), (0, 31), (1, 2), (1, 3), (1, 7), (1, 13), (1, 17), (1, 19), (1, 21), (1, 30),
    (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27), (2, 28), (2, 32), (3, 7), (3, 12), (3, 13), (4, 6),
    (4, 10), (5, 6), (5, 10), (5, 16), (6, 16), (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32),
    (14, 33), (15, 32), (15, 33), (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32), (22, 33),
    (23, 25), (23, 27), (23, 29), (23, 32), (23, 33), (24, 25), (24, 27), (24, 31), (25, 31), (26, 29),
    (26, 33), (27, 33), (28, 31), (28, 33), (29, 32), (29, 33), (30, 32), (30, 33), (31, 32), (31, 33),
    (32, 33),
)
# four modularity-based communities, as distributed with common GNN benchmark loaders
KARATE_LABELS = (
    1, 1, 1, 1, 3, 3, 3, 1, 0, 1, 3, 1, 1, 1, 0, 0, 3, 1, 0, 1, 0, 1, 0, 0, 2, 2, 0, 0, 2, 0, 0, 2, 0, 0,
)

SPLITS = ("train", "val", "test")


@dataclass
class NodeDataset:
    name: str
    edges: np.ndarray  # (E, 2) int
    labels: np.ndarray  # (N,)
    features: np.ndarray | None = None  # None means identity features
    train_mask: np.ndarray | None = None
    val_mask: np.ndarray | None = None
    test_mask: np.ndarray | None = None
    weights: np.ndarray | None = None
    undirected: bool = False

    @property
    def num_nodes(self) -> int:
        return int(self.labels.size)

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def feature_matrix(self) -> np.ndarray:
        return np.eye(self.num_nodes) if self.features is None else self.features

    def adjacency(self) -> np.ndarray:
        n = self.num_nodes
        a = np.zeros((n, n))
        w = np.ones(self.num_edges) if self.weights is None else self.weights
        np.add.at(a, (self.edges[:, 0], self.edges[:, 1]), w)
        if self.undirected:
            np.add.at(a, (self.edges[:, 1], self.edges[:, 0]), w)
        return a

    def validate(self) -> None:
        n = self.num_nodes
        present = np.unique(self.labels)
        if present[0] < 0 or present.size != present[-1] + 1:
            raise ValueError(
                f"{self.name}: class labels must be 0..C-1 with every class present, got {present.tolist()}"
            )
        if self.edges.size and (self.edges.min() < 0 or self.edges.max() >= n):
            raise ValueError(f"{self.name}: edge endpoint outside [0, {n})")
        if self.features is not None and self.features.shape[0] != n:
            raise ValueError(f"{self.name}: {self.features.shape[0]} feature rows for {n} labeled nodes")
        masks = [m for m in (self.train_mask, self.val_mask, self.test_mask) if m is not None]
        for m in masks:
            if m.shape != (n,):
                raise ValueError(f"{self.name}: split mask of length {m.size} for {n} nodes")
        if len(masks) == 3 and np.any(self.train_mask.astype(int) + self.val_mask + self.test_mask > 1):
            raise ValueError(f"{self.name}: split masks overlap")


def _allocate(counts: np.ndarray, total: int, min_one: bool) -> np.ndarray:
    """Per-class sample counts summing to ``total`` (largest-remainder rounding)."""
    alloc = np.zeros_like(counts)
    if min_one:
        alloc = np.minimum(counts, 1)
    remaining = total - alloc.sum()
    if remaining > 0:
        avail = counts - alloc
        quota = remaining * avail / max(avail.sum(), 1)
        base = np.minimum(np.floor(quota).astype(int), avail)
        alloc = alloc + base
        left = total - alloc.sum()
        order = np.argsort(-(quota - np.floor(quota)), kind="stable")
        for c in order:
            if left <= 0:
                break
            if alloc[c] < counts[c]:
                alloc[c] += 1
                left -= 1
    return alloc


def make_split(labels, seed: int = 0, train_frac: float = 0.1, val_frac: float = 0.1):
    """Stratified train/val/test masks with the given fractions (test gets the rest).

    When the number of classes exceeds the rounded train (or val) size by
    at most one, the size is bumped by one so every class is represented.
    """
    labels = np.asarray(labels)
    n = labels.size
    classes = np.unique(labels)
    rng = np.random.default_rng(seed)
    masks = {s: np.zeros(n, dtype=bool) for s in SPLITS}
    pool = np.ones(n, dtype=bool)
    for split, frac in (("train", train_frac), ("val", val_frac)):
        target = int(round(frac * n))
        min_one = classes.size <= target + 1 and classes.size <= pool.sum()
        if min_one:
            target = max(target, classes.size)
        counts = np.array([np.sum(pool & (labels == c)) for c in classes])
        alloc = _allocate(counts, min(target, int(counts.sum())), min_one)
        for c, k in zip(classes, alloc):
            idx = np.flatnonzero(pool & (labels == c))
            chosen = rng.choice(idx, size=int(k), replace=False)
            masks[split][chosen] = True
            pool[chosen] = False
    masks["test"] = pool
    return masks["train"], masks["val"], masks["test"]


def karate_club(seed: int = 0) -> NodeDataset:
    labels = np.array(KARATE_LABELS, dtype=np.int64)
    train, val, test = make_split(labels, seed)
    return NodeDataset(
        "KarateClub",
        np.array(KARATE_EDGES, dtype=np.int64),
        labels,
        None,
        train,
        val,
        test,
        undirected=True,
    )


def _read_tsv(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip() and not line.startswith("#"):
                yield lineno, line.rstrip("\n").split("\t")


def load_dataset(directory, seed: int = 0) -> NodeDataset:
    """Read ``edges.tsv``, ``labels.tsv`` and optional ``features.tsv`` / ``splits.tsv``.

    * edges.tsv: ``src<TAB>dst[<TAB>weight]`` with 0-based node ids
    * labels.tsv: ``node<TAB>class``
    * features.tsv: ``node<TAB>f1<TAB>...<TAB>fF``; identity features when absent
    * splits.tsv: ``node<TAB>train|val|test``; a stratified 10/10/80 split when absent
    """
    directory = os.fspath(directory)
    name = os.path.basename(os.path.normpath(directory))
    label_rows = {}
    for lineno, parts in _read_tsv(os.path.join(directory, "labels.tsv")):
        if len(parts) != 2:
            raise ValueError(f"labels.tsv:{lineno}: expected 'node<TAB>class'")
        label_rows[int(parts[0])] = int(parts[1])
    n = len(label_rows)
    if sorted(label_rows) != list(range(n)):
        raise ValueError(f"labels.tsv: node ids must be exactly 0..{n - 1}")
    labels = np.array([label_rows[i] for i in range(n)], dtype=np.int64)

    edges, weights = [], []
    for lineno, parts in _read_tsv(os.path.join(directory, "edges.tsv")):
        if len(parts) not in (2, 3):
            raise ValueError(f"edges.tsv:{lineno}: expected 'src<TAB>dst[<TAB>weight]'")
        edges.append((int(parts[0]), int(parts[1])))
        weights.append(float(parts[2]) if len(parts) == 3 else 1.0)

    features = None
    fpath = os.path.join(directory, "features.tsv")
    if os.path.exists(fpath):
        rows = {int(p[0]): [float(x) for x in p[1:]] for _, p in _read_tsv(fpath)}
        if sorted(rows) != list(range(n)):
            raise ValueError(f"features.tsv: has {len(rows)} nodes, labels.tsv has {n}")
        features = np.array([rows[i] for i in range(n)], dtype=np.float64)

    spath = os.path.join(directory, "splits.tsv")
    if os.path.exists(spath):
        masks = {s: np.zeros(n, dtype=bool) for s in SPLITS}
        for lineno, parts in _read_tsv(spath):
            if len(parts) != 2 or parts[1] not in SPLITS:
                raise ValueError(f"splits.tsv:{lineno}: expected 'node<TAB>train|val|test'")
            node = int(parts[0])
            if not 0 <= node < n:
                raise ValueError(f"splits.tsv:{lineno}: node {node} outside [0, {n})")
            masks[parts[1]][node] = True
        train, val, test = masks["train"], masks["val"], masks["test"]
    else:
        train, val, test = make_split(labels, seed)

    ds = NodeDataset(
        name,
        np.array(edges, dtype=np.int64).reshape(-1, 2),
        labels,
        features,
        train,
        val,
        test,
        weights=np.array(weights),
    )
    ds.validate()
    return ds


def classification_metrics(y_true, y_pred) -> dict[str, float]:
    """Accuracy and macro precision/recall/F1 over the classes present in either array."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    classes = np.union1d(y_true, y_pred)
    p, r, f = [], [], []
    for c in classes:
        tp = np.sum((y_pred == c) & (y_true == c))
        fp = np.sum((y_pred == c) & (y_true != c))
        fn = np.sum((y_pred != c) & (y_true == c))
        pc = tp / (tp + fp) if tp + fp else 0.0
        rc = tp / (tp + fn) if tp + fn else 0.0
        p.append(pc)
        r.append(rc)
        f.append(2 * pc * rc / (pc + rc) if pc + rc else 0.0)
    return {
        "accuracy": float(np.mean(y_true == y_pred)),
        "f1_macro": float(np.mean(f)),
        "precision_macro": float(np.mean(p)),
        "recall_macro": float(np.mean(r)),
    }


BENCH_CONFIG = TrainConfig(epochs=300, lr=0.01, hidden_dim=64, n_layers=2, dropout=0.5, gate_mode="vector")


@dataclass
class BenchResult:
    dataset: str
    runs: list[dict] = field(default_factory=list)
    losses: list[list[float]] = field(default_factory=list)
    eval_losses: list[list[float]] = field(default_factory=list)

    def summary(self) -> dict[str, tuple[float, float]]:
        keys = ("accuracy", "f1_macro", "precision_macro", "recall_macro")
        return {k: (float(np.mean([r[k] for r in self.runs])), float(np.std([r[k] for r in self.runs]))) for k in keys}

    def table_row(self) -> list[str]:
        s = self.summary()
        return [
            self.dataset,
            "DirectGCN",
            f"{s['accuracy'][0]:.4f} ± {s['accuracy'][1]:.4f}",
            f"{s['f1_macro'][0]:.4f} ± {s['f1_macro'][1]:.4f}",
            f"{s['precision_macro'][0]:.4f}",
            f"{s['recall_macro'][0]:.4f}",
        ]


def run_benchmark(dataset: NodeDataset, config: TrainConfig = BENCH_CONFIG, repeats: int = 5, seeds=None) -> BenchResult:
    """Train on the train mask once per seed and report test metrics."""
    dataset.validate()
    seeds = list(range(repeats)) if seeds is None else list(seeds)
    prop = build_propagation_set(dataset.adjacency())
    h0 = dataset.feature_matrix()
    train_rows = np.flatnonzero(dataset.train_mask)
    test_rows = np.flatnonzero(dataset.test_mask)
    result = BenchResult(dataset.name)
    for seed in seeds:
        cfg = replace(config, seed=seed, max_nodes=max(config.max_nodes, dataset.num_nodes))
        model, losses, eval_losses = fit(h0, prop, dataset.labels, cfg, n_classes=dataset.num_classes,
                                         train_rows=train_rows)
        _, logits = model_forward(Tensor(h0), model, prop, training=False)
        pred = logits.value.argmax(axis=1)
        metrics = classification_metrics(dataset.labels[test_rows], pred[test_rows])
        metrics["seed"] = seed
        result.runs.append(metrics)
        result.losses.append(losses)
        result.eval_losses.append(eval_losses)
    return result


def write_bench_csv(path, results) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "model", "accuracy", "f1_macro", "precision_macro", "recall_macro"])
        for r in results:
            writer.writerow(r.table_row())
