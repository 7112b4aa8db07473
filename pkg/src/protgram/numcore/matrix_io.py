"""Plain-text matrix files: a ``rows cols`` line, then one row per line."""

from __future__ import annotations

import os

import numpy as np


def save_matrix(path: str | os.PathLike, a) -> None:
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    with open(path, "w") as fh:
        fh.write(f"{a.shape[0]} {a.shape[1]}\n")
        for row in a:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_matrix(path: str | os.PathLike) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: first line must be 'rows cols'")
        rows, cols = int(header[0]), int(header[1])
        data = [line.split() for line in fh if line.strip()]
    a = np.array(data, dtype=np.float64) if data else np.zeros((0, cols))
    if a.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols} but found {a.shape[0]}x{a.shape[1] if a.ndim == 2 else 0}")
    return a
