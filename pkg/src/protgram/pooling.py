"""Protein-level embeddings by mean-context attention pooling of n-gram vectors."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .corpus import CleanSequence, read_sequences
from .numcore import PCAModel, load_matrix, pca_fit, save_matrix

logger = logging.getLogger(__name__)


def attention_pool(vectors) -> tuple[np.ndarray, np.ndarray]:
    """Pool k vectors (k x d) into one d-vector.

    The context is the mean vector, each vector is scored by its dot
    product with the context, and the softmax of the scores weights the sum.
    Returns ``(pooled, weights)``.
    """
    v = np.asarray(vectors, dtype=np.float64)
    if v.ndim == 1:
        v = v[None, :]
    if v.shape[0] == 0:
        raise ValueError("attention_pool needs at least one vector")
    context = v.mean(axis=0)
    scores = v @ context
    e = np.exp(scores - scores.max())
    alpha = e / e.sum()
    return alpha @ v, alpha


@dataclass
class AttentionRecord:
    """Attention mass per distinct n-gram of one protein (occurrences summed)."""

    protein_id: str
    ngrams: list[str]
    weights: np.ndarray

    @property
    def variance(self) -> float:
        return float(np.var(self.weights))


def sequence_ngrams(residues: str, n: int) -> list[str]:
    return [residues[i : i + n] for i in range(len(residues) - n + 1)]


def protein_embedding(seq, table) -> tuple[np.ndarray, AttentionRecord]:
    """Attention-pool the embeddings of every n-gram occurrence of ``seq``."""
    if isinstance(seq, CleanSequence):
        pid, residues = seq.protein_id, seq.residues
    else:
        pid, residues = "", str(seq)
    n = table.level
    if len(residues) < n:
        raise ValueError(f"sequence {pid!r} of length {len(residues)} is shorter than n={n}")
    grams = sequence_ngrams(residues, n)
    rows = []
    for gram in grams:
        idx = table.index.get(gram)
        if idx is None:
            raise KeyError(f"n-gram {gram!r} of protein {pid!r} is not in the level-{n} embedding table")
        rows.append(idx)
    rows = np.asarray(rows)
    pooled, alpha = attention_pool(table.vectors[rows])
    uniq, inverse = np.unique(rows, return_inverse=True)
    mass = np.bincount(inverse.reshape(-1), weights=alpha, minlength=uniq.size)
    record = AttentionRecord(pid, [table.ngrams[i] for i in uniq], mass)
    return pooled, record


@dataclass
class ProteinEmbeddings:
    ids: list[str]
    raw: np.ndarray
    vectors: np.ndarray
    pca: PCAModel
    reduced: bool = False  # True when the corpus was too small for the requested dimension
    records: list[AttentionRecord] = field(default_factory=list)

    def as_dict(self) -> dict[str, np.ndarray]:
        return dict(zip(self.ids, self.vectors))


def embed_corpus(sequences, table, pca_dim: int = 64, keep_attention: bool = True) -> ProteinEmbeddings:
    """Pool every protein, then fit PCA on the pooled matrix and project.

    ``sequences`` is a FASTA path or an iterable of :class:`CleanSequence`.
    If there are too few proteins for ``pca_dim`` components the dimension
    is reduced to the largest allowed value and ``reduced`` is set.
    """
    if isinstance(sequences, (str, os.PathLike)):
        sequences = read_sequences(sequences)
    ids, raw, records = [], [], []
    for seq in sequences:
        vec, rec = protein_embedding(seq, table)
        ids.append(seq.protein_id)
        raw.append(vec)
        if keep_attention:
            records.append(rec)
    if not raw:
        raise ValueError("no proteins to embed")
    raw = np.vstack(raw)
    k = min(pca_dim, raw.shape[0] - 1, raw.shape[1])
    reduced = k < pca_dim
    if reduced:
        logger.warning("reducing PCA dimension from %d to %d for %d proteins of dimension %d",
                       pca_dim, k, raw.shape[0], raw.shape[1])
    model = pca_fit(raw, k)
    return ProteinEmbeddings(ids, raw, model.transform(raw), model, reduced, records)


def export_attention_heatmap_data(records, top_k_variance: int = 20) -> list[tuple[str, str, float]]:
    """Rows ``(protein_id, ngram, weight)`` for the proteins with the most varied attention."""
    records = list(records)
    if not records:
        raise ValueError("no attention records to export")
    order = sorted(range(len(records)), key=lambda i: (-records[i].variance, i))
    rows = []
    for i in order[:top_k_variance]:
        rec = records[i]
        rows.extend((rec.protein_id, g, float(w)) for g, w in zip(rec.ngrams, rec.weights))
    return rows


def write_attention_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["protein_id", "ngram", "weight"])
        for pid, gram, w in rows:
            writer.writerow([pid, gram, repr(w)])


def write_protein_embeddings(path, ids, vectors) -> None:
    with open(path, "w") as fh:
        for pid, vec in zip(ids, vectors):
            fh.write(pid + "\t" + "\t".join(repr(float(x)) for x in vec) + "\n")


def read_protein_embeddings(path) -> dict[str, np.ndarray]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            try:
                out[parts[0]] = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed embedding row") from None
    return out


def save_pca(model: PCAModel, prefix) -> None:
    """Components in matrix format plus ``.mean`` and ``.variance`` sidecars."""
    prefix = os.fspath(prefix)
    save_matrix(prefix + ".components.txt", model.components)
    save_matrix(prefix + ".mean.txt", model.mean[None, :])
    save_matrix(prefix + ".variance.txt", np.vstack([model.explained_variance, model.explained_variance_ratio]))


def load_pca(prefix) -> PCAModel:
    prefix = os.fspath(prefix)
    var = load_matrix(prefix + ".variance.txt")
    return PCAModel(
        mean=load_matrix(prefix + ".mean.txt")[0],
        components=load_matrix(prefix + ".components.txt"),
        explained_variance=var[0],
        explained_variance_ratio=var[1],
    )
