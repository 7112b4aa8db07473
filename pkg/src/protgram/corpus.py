"""FASTA ingestion: cleaning to the canonical residue alphabet and token streaming."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Iterator

import numpy as np

logger = logging.getLogger(__name__)

RESIDUES = tuple("ACDEFGHIKLMNPQRSTVWY")
SEPARATOR = "|"
ALPHABET = RESIDUES + (SEPARATOR,)
ALPHABET_INDEX = {s: i for i, s in enumerate(ALPHABET)}
MAX_LENGTH = 10_000

_RESIDUE_SET = frozenset(RESIDUES)


class FastaFormatError(ValueError):
    """Raised for files that cannot be read as FASTA."""


@dataclass(frozen=True)
class CleanSequence:
    protein_id: str
    residues: str

    def __len__(self) -> int:
        return len(self.residues)


def clean_sequence(raw: str, max_length: int | None = MAX_LENGTH) -> str | None:
    """Uppercase, drop non-standard characters, then truncate to ``max_length``.

    Returns None when nothing survives cleaning.
    """
    kept = "".join(ch for ch in raw.upper() if ch in _RESIDUE_SET)
    if not kept:
        return None
    return kept if max_length is None else kept[:max_length]


def read_fasta(path: str | os.PathLike) -> Iterator[tuple[str, str]]:
    """Yield ``(header, raw_body)`` records in file order.

    The header is the text after '>' up to the line end; body lines are
    concatenated without whitespace.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"FASTA file not found: {path}")
    header = None
    body: list[str] = []
    offset = 0
    with open(path, "rb") as fh:
        for line in fh:
            start = offset
            offset += len(line)
            text = line.decode("ascii", errors="replace").strip()
            if not text:
                continue
            if text.startswith(">"):
                if header is not None:
                    yield header, "".join(body)
                header = text[1:].strip()
                body = []
            else:
                if header is None:
                    raise FastaFormatError(
                        f"{path}: sequence data before any '>' header at byte offset {start}"
                    )
                body.append("".join(text.split()))
    if header is not None:
        yield header, "".join(body)


def _protein_id(header: str) -> str:
    # UniProt style ">sp|P12345|NAME_HUMAN ..." keeps the accession.
    token = header.split()[0] if header.split() else header
    parts = token.split("|")
    if len(parts) >= 3 and parts[0] in ("sp", "tr"):
        return parts[1]
    return token


def read_sequences(path: str | os.PathLike, max_length: int = MAX_LENGTH) -> list[CleanSequence]:
    """Read and clean every record; empty records are dropped and counted in the log."""
    out = []
    dropped = truncated = 0
    for header, raw in read_fasta(path):
        cleaned = clean_sequence(raw, max_length=None)
        if cleaned is None:
            dropped += 1
            continue
        if max_length is not None and len(cleaned) > max_length:
            truncated += 1
            cleaned = cleaned[:max_length]
        out.append(CleanSequence(_protein_id(header), cleaned))
    logger.info("%s: kept %d records, dropped %d empty records, truncated %d records",
                os.fspath(path), len(out), dropped, truncated)
    return out


def tokens_from_sequences(sequences) -> Iterator[str]:
    """Residue tokens with one separator between consecutive sequences."""
    first = True
    for seq in sequences:
        residues = seq.residues if isinstance(seq, CleanSequence) else seq
        if not residues:
            continue
        if not first:
            yield SEPARATOR
        first = False
        yield from residues


def stream_tokens(fasta_path: str | os.PathLike, max_length: int = MAX_LENGTH) -> Iterator[str]:
    return tokens_from_sequences(read_sequences(fasta_path, max_length=max_length))


def encode(tokens) -> np.ndarray:
    """Map tokens to alphabet indices as an int64 array."""
    try:
        return np.fromiter((ALPHABET_INDEX[t] for t in tokens), dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"token {exc.args[0]!r} is not in the alphabet") from None
