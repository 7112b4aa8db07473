"""Per-level checkpoints: one matrix file per parameter plus a key=value manifest."""

from __future__ import annotations

import os

import numpy as np

from ..numcore import Tensor, load_matrix, save_matrix
from .model import ModelParams, init_model


def write_manifest(path, entries: dict) -> None:
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key}={value}\n")


def read_manifest(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def save_checkpoint(result, directory) -> None:
    """Write ``result.model`` parameters and a manifest into ``directory``."""
    os.makedirs(directory, exist_ok=True)
    model: ModelParams = result.model
    for name, t in model.named_parameters():
        save_matrix(os.path.join(directory, name + ".txt"), t.value)
    cfg = result.config
    write_manifest(
        os.path.join(directory, "manifest.txt"),
        {
            "level": result.level,
            "task": result.task,
            "n_nodes": model.layers[0].b_const.shape[0],
            "dims": ",".join(str(d) for d in model.dims),
            "n_classes": model.n_classes,
            "gate_mode": model.gate_mode,
            "seed": cfg.seed,
            "epochs": cfg.epochs,
            "lr": cfg.lr,
            "dropout": model.dropout,
            "leaky_slope": model.leaky_slope,
            "layer_norm": str(model.layer_norm).lower(),
            "final_loss": repr(result.losses[-1]) if result.losses else "nan",
        },
    )


def load_checkpoint(directory) -> tuple[ModelParams, dict[str, str]]:
    manifest = read_manifest(os.path.join(directory, "manifest.txt"))
    dims = [int(d) for d in manifest["dims"].split(",")]
    model = init_model(
        int(manifest["n_nodes"]),
        dims[0],
        dims[1:],
        int(manifest["n_classes"]),
        gate_mode=manifest["gate_mode"],
        rng=np.random.default_rng(0),
        dropout=float(manifest["dropout"]),
        leaky_slope=float(manifest["leaky_slope"]),
        layer_norm=manifest["layer_norm"] == "true",
    )
    for name, t in model.named_parameters():
        value = load_matrix(os.path.join(directory, name + ".txt"))
        if value.shape != t.shape:
            raise ValueError(f"{directory}/{name}.txt: shape {value.shape}, expected {t.shape}")
        t.value[...] = value
    return model, manifest
