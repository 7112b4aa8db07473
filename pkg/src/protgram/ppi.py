"""Protein-protein interaction link prediction with an MLP over concatenated embeddings."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .numcore import (
    Adam,
    Tensor,
    add_row,
    backward,
    binary_cross_entropy,
    dropout,
    glorot_uniform,
    matmul,
    relu,
    seeded_rng,
    sigmoid,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledPair:
    id_a: str
    id_b: str
    label: int


def _read_pair_file(path) -> list[tuple[str, str]]:
    pairs = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if lineno == 1 and parts == ["id_a", "id_b"]:
                continue
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}:{lineno}: expected 'id_a<TAB>id_b', got {line.rstrip()!r}")
            pairs.append((parts[0].strip(), parts[1].strip()))
    return pairs


def load_pairs(positives, negatives) -> list[LabeledPair]:
    """Merge positive and negative pair files into deduplicated labeled pairs.

    Pairs are unordered for deduplication but keep their first-seen
    orientation.  Self pairs are skipped; a pair listed in both files is
    dropped.
    """
    seen: dict[frozenset, LabeledPair] = {}
    conflicts: set[frozenset] = set()
    self_pairs = 0
    for path, label in ((positives, 1), (negatives, 0)):
        for a, b in _read_pair_file(path):
            if a == b:
                self_pairs += 1
                continue
            key = frozenset((a, b))
            prior = seen.get(key)
            if prior is None:
                seen[key] = LabeledPair(a, b, label)
            elif prior.label != label:
                conflicts.add(key)
    if conflicts:
        logger.warning("dropping %d pairs listed as both positive and negative", len(conflicts))
    if self_pairs:
        logger.warning("skipping %d self pairs", self_pairs)
    pairs = [p for k, p in seen.items() if k not in conflicts]
    n_pos = sum(p.label for p in pairs)
    logger.info("loaded %d pairs (%d positive, %d negative)", len(pairs), n_pos, len(pairs) - n_pos)
    return pairs


def dataset_stats(pairs, protein_count: int | None = None) -> dict:
    """Counts, class ratio and positive-graph density ``2m / (n (n - 1))``."""
    pairs = list(pairs)
    if protein_count is None:
        protein_count = len({p.id_a for p in pairs} | {p.id_b for p in pairs})
    m = sum(1 for p in pairs if p.label == 1)
    n = protein_count
    density = 2.0 * m / (n * (n - 1)) if n > 1 else 0.0
    neg = len(pairs) - m
    return {
        "pairs": len(pairs),
        "positives": m,
        "negatives": neg,
        "proteins": n,
        "density": density,
        "positive_fraction": m / len(pairs) if pairs else 0.0,
    }


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Test-index arrays of ``k`` disjoint folds preserving class proportions.

    Each class is shuffled and dealt round-robin; the dealing position
    carries over between classes so remainders land on different folds.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    rng = seeded_rng(seed, "folds")
    buckets: list[list[int]] = [[] for _ in range(k)]
    start = 0
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        if idx.size < k:
            raise ValueError(f"class {cls!r} has {idx.size} examples, fewer than k={k}")
        idx = rng.permutation(idx)
        for j, i in enumerate(idx):
            buckets[(start + j) % k].append(int(i))
        start = (start + idx.size) % k
    return [np.sort(np.asarray(b, dtype=np.int64)) for b in buckets]


def auc(scores, labels) -> float:
    """ROC AUC as the Mann-Whitney statistic with ties counted half."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both positive and negative examples")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(scores.size)
    # midranks over runs of tied scores, 1-based
    boundaries = np.flatnonzero(np.diff(sorted_scores)) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [scores.size]))
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = (s + e + 1) / 2.0
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, labels):
    """``(fpr, tpr, thresholds)`` with one point per distinct score, plus the origin."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    distinct = np.flatnonzero(np.diff(s)) if s.size > 1 else np.zeros(0, dtype=np.int64)
    cut = np.concatenate((distinct, [s.size - 1]))
    tp = np.cumsum(y)[cut]
    fp = np.cumsum(~y)[cut]
    tpr = np.concatenate(([0.0], tp / max(y.sum(), 1)))
    fpr = np.concatenate(([0.0], fp / max((~y).sum(), 1)))
    thresholds = np.concatenate(([np.inf], s[cut]))
    return fpr, tpr, thresholds


def binary_metrics(scores, labels, threshold: float = 0.5) -> dict[str, float]:
    """Precision, recall and F1 of ``score >= threshold``; undefined ratios are 0."""
    pred = np.asarray(scores) >= threshold
    y = np.asarray(labels).astype(bool)
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    fn = int(np.sum(~pred & y))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


@dataclass
class MLPConfig:
    hidden: tuple[int, ...] = (128, 64)
    dropout: float = 0.3
    epochs: int = 100
    lr: float = 1e-3
    batch_size: int = 64
    seed: int = 0
    threshold: float = 0.5
    augment_flipped: bool = False


class MLP:
    """ReLU hidden layers with dropout and a single sigmoid output."""

    def __init__(self, in_dim: int, hidden, rng: np.random.Generator, dropout_rate: float = 0.3):
        dims = [in_dim, *hidden, 1]
        self.weights = [
            Tensor(glorot_uniform(rng, dims[i], dims[i + 1]), requires_grad=True, name=f"mlp.w{i}")
            for i in range(len(dims) - 1)
        ]
        self.biases = [
            Tensor(np.zeros((1, dims[i + 1])), requires_grad=True, name=f"mlp.b{i}") for i in range(len(dims) - 1)
        ]
        self.dropout_rate = dropout_rate

    def parameters(self) -> list[Tensor]:
        return [t for pair in zip(self.weights, self.biases) for t in pair]

    def forward(self, x, training: bool = False, rng=None) -> Tensor:
        h = x if isinstance(x, Tensor) else Tensor(x)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = add_row(matmul(h, w), b)
            if i < last:
                h = dropout(relu(h), self.dropout_rate, rng, training)
        return sigmoid(h)

    def predict(self, x) -> np.ndarray:
        return self.forward(x, training=False).value[:, 0]


def train_mlp(x: np.ndarray, y: np.ndarray, config: MLPConfig, rng: np.random.Generator) -> MLP:
    model = MLP(x.shape[1], config.hidden, rng, config.dropout)
    opt = Adam(model.parameters(), lr=config.lr)
    n = x.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            p = model.forward(x[batch], training=True, rng=rng)
            loss = binary_cross_entropy(p, y[batch])
            backward(loss)
            opt.step()
    return model


@dataclass
class FoldResult:
    fold: int
    auc: float
    f1: float
    precision: float
    recall: float
    threshold: float
    roc: tuple = field(default=(), repr=False)


@dataclass
class PPIResult:
    folds: list[FoldResult]

    def summary(self) -> dict[str, tuple[float, float]]:
        out = {}
        for metric in ("auc", "f1", "precision", "recall"):
            vals = np.array([getattr(f, metric) for f in self.folds])
            out[metric] = (float(vals.mean()), float(vals.std()))
        return out

    def format_summary(self) -> str:
        s = self.summary()
        return "  ".join(f"{m.upper()} {mu:.4f} ± {sd:.4f}" for m, (mu, sd) in s.items())


def pair_features(pairs, embeddings) -> tuple[np.ndarray, np.ndarray]:
    """Feature rows ``concat(emb_a, emb_b)`` in pair orientation, and labels."""
    missing = sorted({i for p in pairs for i in (p.id_a, p.id_b) if i not in embeddings})
    if missing:
        shown = ", ".join(missing[:20]) + (" ..." if len(missing) > 20 else "")
        raise KeyError(f"{len(missing)} protein ids have no embedding: {shown}")
    x = np.vstack([np.concatenate([embeddings[p.id_a], embeddings[p.id_b]]) for p in pairs])
    y = np.array([p.label for p in pairs], dtype=np.float64)
    return x, y


def _flip(x: np.ndarray) -> np.ndarray:
    d = x.shape[1] // 2
    return np.hstack([x[:, d:], x[:, :d]])


def evaluate_fold(x_train, y_train, x_test, y_test, config: MLPConfig, fold: int) -> FoldResult:
    """Train on one split and score the held-out rows; test labels are used only for metrics."""
    rng = seeded_rng(config.seed, f"mlp.fold{fold}")
    if config.augment_flipped:
        x_train = np.vstack([x_train, _flip(x_train)])
        y_train = np.concatenate([y_train, y_train])
    model = train_mlp(x_train, y_train, config, rng)
    scores = model.predict(x_test)
    m = binary_metrics(scores, y_test, config.threshold)
    return FoldResult(fold, auc(scores, y_test), m["f1"], m["precision"], m["recall"], config.threshold,
                      roc=roc_curve(scores, y_test))


def train_and_eval(pairs, embeddings, config: MLPConfig | None = None, k: int = 5) -> PPIResult:
    """Stratified k-fold evaluation of an MLP link predictor."""
    config = config or MLPConfig()
    pairs = list(pairs)
    x, y = pair_features(pairs, embeddings)
    folds = stratified_kfold(y.astype(int), k, config.seed)
    results = []
    for i, test_idx in enumerate(folds):
        train_mask = np.ones(len(pairs), dtype=bool)
        train_mask[test_idx] = False
        res = evaluate_fold(x[train_mask], y[train_mask], x[test_idx], y[test_idx], config, i)
        logger.info("fold %d: AUC %.4f F1 %.4f", i, res.auc, res.f1)
        results.append(res)
    return PPIResult(results)


def write_fold_results(path, result: PPIResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "auc", "f1", "precision", "recall"])
        for f in result.folds:
            writer.writerow([f.fold, repr(f.auc), repr(f.f1), repr(f.precision), repr(f.recall)])
        s = result.summary()
        writer.writerow(["summary"] + [f"{s[m][0]:.4f}±{s[m][1]:.4f}" for m in ("auc", "f1", "precision", "recall")])


def write_roc_csv(path, result: PPIResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "fpr", "tpr", "threshold"])
        for f in result.folds:
            fpr, tpr, thr = f.roc
            for a, b, t in zip(fpr, tpr, thr):
                writer.writerow([f.fold, repr(float(a)), repr(float(b)), repr(float(t))])
