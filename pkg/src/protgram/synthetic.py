"""Synthetic two-family protein corpora with known interaction structure, for end-to-end checks."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .corpus import RESIDUES, CleanSequence
from .numcore import seeded_rng
from .ppi import LabeledPair


@dataclass
class SyntheticCorpus:
    sequences: list[CleanSequence]
    families: np.ndarray  # family index per sequence
    motifs: list[list[str]]


def motif_corpus(
    n_proteins: int = 200,
    n_families: int = 2,
    seed: int = 0,
    length_range: tuple[int, int] = (60, 120),
    motifs_per_family: int = 3,
    motif_len: int = 5,
    motif_fraction: float = 0.5,
) -> SyntheticCorpus:
    """Proteins made of uniform background residues with family motifs spliced in.

    Each family owns ``motifs_per_family`` random motifs; roughly
    ``motif_fraction`` of every sequence is covered by copies of its
    family's motifs.  Families alternate so the split is balanced.
    """
    if n_families < 2:
        raise ValueError("need at least two families")
    rng = seeded_rng(seed, "synthetic.corpus")
    alphabet = np.array(list(RESIDUES))
    motifs = [
        ["".join(rng.choice(alphabet, motif_len)) for _ in range(motifs_per_family)] for _ in range(n_families)
    ]
    width = len(str(n_proteins))
    seqs, fams = [], []
    for i in range(n_proteins):
        fam = i % n_families
        length = int(rng.integers(length_range[0], length_range[1] + 1))
        parts, size = [], 0
        while size < length:
            if rng.random() < motif_fraction:
                piece = motifs[fam][int(rng.integers(motifs_per_family))]
            else:
                piece = "".join(rng.choice(alphabet, motif_len))
            parts.append(piece)
            size += len(piece)
        seqs.append(CleanSequence(f"P{i:0{width}d}", "".join(parts)[:length]))
        fams.append(fam)
    return SyntheticCorpus(seqs, np.array(fams), motifs)


def family_pairs(corpus: SyntheticCorpus, n_pairs: int = 1000, seed: int = 0) -> list[LabeledPair]:
    """``n_pairs`` same-family positives and ``n_pairs`` cross-family negatives, without repeats."""
    rng = seeded_rng(seed, "synthetic.pairs")
    ids = [s.protein_id for s in corpus.sequences]
    fam = corpus.families
    n = len(ids)
    iu, ju = np.triu_indices(n, k=1)
    same = fam[iu] == fam[ju]
    out = []
    for label, mask in ((1, same), (0, ~same)):
        cand = np.flatnonzero(mask)
        if cand.size < n_pairs:
            raise ValueError(f"only {cand.size} candidate pairs with label {label}, asked for {n_pairs}")
        pick = np.sort(rng.choice(cand, size=n_pairs, replace=False))
        out.extend(LabeledPair(ids[iu[k]], ids[ju[k]], label) for k in pick)
    return out


def write_fasta(path, sequences, width: int = 60) -> None:
    with open(path, "w") as fh:
        for seq in sequences:
            fh.write(f">{seq.protein_id}\n")
            for start in range(0, len(seq.residues), width):
                fh.write(seq.residues[start : start + width] + "\n")


def write_pairs(path, pairs, label: int) -> None:
    with open(path, "w") as fh:
        for p in pairs:
            if p.label == label:
                fh.write(f"{p.id_a}\t{p.id_b}\n")


def write_synthetic_inputs(directory, n_proteins: int = 200, n_pairs: int = 1000, seed: int = 0) -> dict[str, str]:
    """Write ``corpus.fa``, ``positives.tsv`` and ``negatives.tsv``; returns their paths."""
    os.makedirs(directory, exist_ok=True)
    corpus = motif_corpus(n_proteins, seed=seed)
    pairs = family_pairs(corpus, n_pairs, seed=seed)
    paths = {
        "fasta": os.path.join(directory, "corpus.fa"),
        "positives": os.path.join(directory, "positives.tsv"),
        "negatives": os.path.join(directory, "negatives.tsv"),
    }
    write_fasta(paths["fasta"], corpus.sequences)
    write_pairs(paths["positives"], pairs, 1)
    write_pairs(paths["negatives"], pairs, 0)
    return paths
