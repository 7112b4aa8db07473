"""Full-batch training of DirectGCN on self-supervised node labels, level by level."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..numcore import Adam, Tensor, backward, l2_normalize_rows, log_softmax, nll_loss, seeded_rng
from ..pooling import attention_pool
from .labels import louvain_labels, next_node_labels
from .model import ModelParams, check_gate_mode, init_model, model_forward
from .propagation import PropagationSet, build_propagation_set

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 300
    lr: float = 1e-3
    hidden_dim: int = 64
    n_layers: int = 2
    dropout: float = 0.5
    gate_mode: str = "vector"
    leaky_slope: float = 0.01
    layer_norm: bool = False
    max_nodes: int = 6000
    seed: int = 0

    def __post_init__(self):
        check_gate_mode(self.gate_mode)
        if self.epochs < 0 or self.n_layers < 1 or self.hidden_dim < 1:
            raise ValueError(f"invalid training config {self}")


@dataclass
class EmbeddingTable:
    """L2-normalized n-gram embeddings for one level, rows aligned with ``ngrams``."""

    level: int
    ngrams: list[str]
    vectors: np.ndarray

    def __post_init__(self):
        self.index = {g: i for i, g in enumerate(self.ngrams)}

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __getitem__(self, ngram: str) -> np.ndarray:
        return self.vectors[self.index[ngram]]

    def __contains__(self, ngram: str) -> bool:
        return ngram in self.index

    def to_tsv(self, path) -> None:
        with open(path, "w") as fh:
            for gram, vec in zip(self.ngrams, self.vectors):
                fh.write(gram + "\t" + "\t".join(repr(float(x)) for x in vec) + "\n")

    @classmethod
    def from_tsv(cls, path) -> "EmbeddingTable":
        grams, rows = [], []
        with open(path) as fh:
            for line in fh:
                if not line.strip():
                    continue
                parts = line.rstrip("\n").split("\t")
                grams.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        levels = {len(g) for g in grams}
        if len(levels) != 1:
            raise ValueError(f"{path}: mixed n-gram lengths {sorted(levels)}")
        return cls(levels.pop(), grams, np.asarray(rows, dtype=np.float64))


@dataclass
class LevelResult:
    level: int
    embeddings: EmbeddingTable
    model: ModelParams
    losses: list[float]
    labels: np.ndarray
    task: str
    config: TrainConfig = field(default_factory=TrainConfig)
    eval_losses: list[float] = field(default_factory=list)


def hierarchical_init(prev: EmbeddingTable | None, g) -> np.ndarray:
    """Initial features for ``g``: identity at level 1, else pooled constituent embeddings.

    Each (n+1)-gram row is the attention pool of its length-n prefix and
    suffix embeddings from ``prev``.
    """
    if prev is None:
        return np.eye(g.num_nodes)
    if prev.level != g.level - 1:
        raise ValueError(f"level-{prev.level} embeddings cannot initialize a level-{g.level} graph")
    h0 = np.zeros((g.num_nodes, prev.dim))
    for i, gram in enumerate(g.nodes):
        prefix, suffix = gram[:-1], gram[1:]
        for part in (prefix, suffix):
            if part not in prev:
                raise KeyError(f"constituent {part!r} of {gram!r} has no level-{prev.level} embedding")
        h0[i], _ = attention_pool(np.vstack([prev[prefix], prev[suffix]]))
    return h0


def fit(
    h0: np.ndarray,
    prop: PropagationSet,
    labels,
    config: TrainConfig,
    n_classes: int | None = None,
    train_rows=None,
    track_eval: bool = True,
) -> tuple[ModelParams, list[float], list[float]]:
    """Train a fresh model with NLL on ``labels`` (restricted to ``train_rows`` if given).

    Returns ``(model, losses, eval_losses)``: ``losses`` is the dropout-mode
    objective each step descended on, ``eval_losses`` the deterministic
    (dropout-free) loss of the parameters after each update.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n = prop.num_nodes
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got {labels.shape[0]}")
    if n > config.max_nodes:
        raise TrainingError(
            f"graph has {n} nodes, above the full-batch cap of {config.max_nodes}; "
            "raise max_nodes if memory allows"
        )
    if n_classes is None:
        n_classes = int(labels.max()) + 1
    model = init_model(
        n,
        h0.shape[1],
        [config.hidden_dim] * config.n_layers,
        n_classes,
        gate_mode=config.gate_mode,
        rng=seeded_rng(config.seed, "init"),
        dropout=config.dropout,
        leaky_slope=config.leaky_slope,
        layer_norm=config.layer_norm,
    )
    drop_rng = seeded_rng(config.seed, "dropout")
    opt = Adam(model.parameters(), lr=config.lr)
    x = Tensor(h0)
    rows = None if train_rows is None else np.asarray(train_rows, dtype=np.int64)
    targets = labels if rows is None else labels[rows]
    losses, eval_losses = [], []
    for epoch in range(config.epochs):
        _, logits = model_forward(x, model, prop, training=True, rng=drop_rng)
        loss = nll_loss(log_softmax(logits), targets, rows)
        value = loss.item()
        if not np.isfinite(value):
            raise TrainingError(f"non-finite loss {value} at epoch {epoch} (lr={config.lr}, nodes={n})")
        losses.append(value)
        backward(loss)
        opt.step()
        if track_eval:
            _, logits = model_forward(x, model, prop, training=False)
            eval_losses.append(nll_loss(log_softmax(logits), targets, rows).item())
    return model, losses, eval_losses


def extract_embeddings(model: ModelParams, h0: np.ndarray, prop: PropagationSet) -> np.ndarray:
    z, _ = model_forward(Tensor(h0), model, prop, training=False)
    return l2_normalize_rows(z).value


def train_level(g, labels, config: TrainConfig, h0: np.ndarray | None = None, n_classes: int | None = None,
                task: str = "custom") -> LevelResult:
    """Train on one graph and return L2-normalized node embeddings keyed by n-gram."""
    prop = build_propagation_set(g)
    if h0 is None:
        h0 = np.eye(g.num_nodes)
    model, losses, eval_losses = fit(h0, prop, labels, config, n_classes=n_classes)
    table = EmbeddingTable(g.level, list(g.nodes), extract_embeddings(model, h0, prop))
    logger.info("level %d (%s): %d nodes, loss %.4f -> %.4f", g.level, task, g.num_nodes,
                losses[0] if losses else float("nan"), losses[-1] if losses else float("nan"))
    return LevelResult(g.level, table, model, losses, np.asarray(labels), task, config, eval_losses)


def level_task(level: int, max_n: int) -> str:
    return "louvain" if level == max_n else "next_node"


def task_labels(g, task: str) -> tuple[np.ndarray, int]:
    if task == "next_node":
        return next_node_labels(g), g.num_nodes
    if task == "louvain":
        labels = louvain_labels(g)
        return labels, int(labels.max()) + 1
    raise ValueError(f"unknown task {task!r}")


def train_hierarchy(graphs, config: TrainConfig, level_overrides: dict | None = None) -> list[LevelResult]:
    """Train every level in order, each initialized from the one below.

    Levels below the top use next-node labels; the top level uses Louvain
    communities.  ``level_overrides`` maps a level to a dict of
    :class:`TrainConfig` field overrides.
    """
    graphs = list(graphs)
    max_n = graphs[-1].level
    results: list[LevelResult] = []
    prev = None
    for g in graphs:
        cfg = replace(config, **(level_overrides or {}).get(g.level, {}))
        task = level_task(g.level, max_n)
        labels, n_classes = task_labels(g, task)
        h0 = hierarchical_init(prev, g)
        result = train_level(g, labels, cfg, h0=h0, n_classes=n_classes, task=task)
        results.append(result)
        prev = result.embeddings
    return results
