"""DirectGCN layers: three gated propagation paths, a positional table and a residual."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from ..numcore import (
    Tensor,
    add,
    add_row,
    constant,
    dropout,
    glorot_uniform,
    layer_norm_rows,
    leaky_relu,
    matmul,
    scale,
)
from .propagation import PropagationSet

GATE_MODES = ("none", "scalar", "vector")
PATHS = ("in", "out", "undir")


def check_gate_mode(mode: str) -> str:
    if mode not in GATE_MODES:
        raise ValueError(f"gate mode must be one of {GATE_MODES}, got {mode!r}")
    return mode


@dataclass
class LayerParams:
    w_main_in: Tensor
    w_main_out: Tensor
    w_main_undir: Tensor
    w_shared: Tensor
    b_main_in: Tensor
    b_main_out: Tensor
    b_main_undir: Tensor
    b_shared_in: Tensor
    b_shared_out: Tensor
    b_shared_undir: Tensor
    b_const: Tensor
    w_res: Tensor
    c_in: Tensor | None = None
    c_out: Tensor | None = None
    c_undir: Tensor | None = None

    @property
    def gate_mode(self) -> str:
        if self.c_in is None:
            return "none"
        return "scalar" if self.c_in.shape[0] == 1 else "vector"

    @property
    def in_dim(self) -> int:
        return self.w_shared.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w_shared.shape[1]

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self) if getattr(self, f.name) is not None]

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]


def init_layer(
    rng: np.random.Generator, n_nodes: int, in_dim: int, out_dim: int, gate_mode: str = "vector", prefix: str = ""
) -> LayerParams:
    """Glorot path/shared weights, zero biases and positional table, unit gates, identity residual."""
    check_gate_mode(gate_mode)

    def param(value, name):
        return Tensor(value, requires_grad=True, name=prefix + name)

    kw = {}
    for name in ("w_main_in", "w_main_out", "w_main_undir", "w_shared"):
        kw[name] = param(glorot_uniform(rng, in_dim, out_dim), name)
    for name in ("b_main_in", "b_main_out", "b_main_undir", "b_shared_in", "b_shared_out", "b_shared_undir"):
        kw[name] = param(np.zeros((1, out_dim)), name)
    kw["b_const"] = param(np.zeros((n_nodes, out_dim)), "b_const")
    kw["w_res"] = param(np.eye(in_dim, out_dim), "w_res")
    if gate_mode != "none":
        rows = 1 if gate_mode == "scalar" else n_nodes
        for path in PATHS:
            kw[f"c_{path}"] = param(np.ones((rows, 1)), f"c_{path}")
    return LayerParams(**kw)


@dataclass
class ModelParams:
    layers: list[LayerParams]
    w_dec: Tensor
    b_dec: Tensor
    dropout: float = 0.5
    leaky_slope: float = 0.01
    layer_norm: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def gate_mode(self) -> str:
        return self.layers[0].gate_mode

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].in_dim] + [layer.out_dim for layer in self.layers]

    @property
    def n_classes(self) -> int:
        return self.w_dec.shape[1]

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        for i, layer in enumerate(self.layers):
            out.extend((f"layer{i}.{name}", t) for name, t in layer.named_parameters())
        out.append(("decoder.w", self.w_dec))
        out.append(("decoder.b", self.b_dec))
        return out

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]


def init_model(
    n_nodes: int,
    in_dim: int,
    hidden_dims,
    n_classes: int,
    gate_mode: str = "vector",
    rng: np.random.Generator | None = None,
    dropout: float = 0.5,
    leaky_slope: float = 0.01,
    layer_norm: bool = False,
) -> ModelParams:
    hidden_dims = list(hidden_dims)
    if not hidden_dims:
        raise ValueError("a DirectGCN model needs at least one layer")
    if n_classes < 1:
        raise ValueError(f"decoder needs at least one class, got {n_classes}")
    if rng is None:
        rng = np.random.default_rng(0)
    dims = [in_dim] + hidden_dims
    layers = [
        init_layer(rng, n_nodes, dims[i], dims[i + 1], gate_mode, prefix=f"layer{i}.")
        for i in range(len(hidden_dims))
    ]
    w_dec = Tensor(glorot_uniform(rng, dims[-1], n_classes), requires_grad=True, name="decoder.w")
    b_dec = Tensor(np.zeros((1, n_classes)), requires_grad=True, name="decoder.b")
    return ModelParams(layers, w_dec, b_dec, dropout=dropout, leaky_slope=leaky_slope, layer_norm=layer_norm)


def _path(prop_matrix: Tensor, h: Tensor, w_main: Tensor, b_main: Tensor, shared: Tensor, b_shared: Tensor) -> Tensor:
    return add(add_row(matmul(prop_matrix, matmul(h, w_main)), b_main), add_row(shared, b_shared))


def layer_forward(
    h: Tensor,
    p: LayerParams,
    prop: PropagationSet,
    training: bool = False,
    rng: np.random.Generator | None = None,
    dropout_rate: float = 0.0,
    leaky_slope: float = 0.01,
    layer_norm: bool = False,
) -> Tensor:
    if h.shape[1] != p.in_dim or h.shape[0] != p.b_const.shape[0]:
        raise ValueError(
            f"layer expects features of shape ({p.b_const.shape[0]}, {p.in_dim}), got {h.shape}"
        )
    shared = matmul(h, p.w_shared)
    h_in = _path(constant(prop.a_in), h, p.w_main_in, p.b_main_in, shared, p.b_shared_in)
    h_out = _path(constant(prop.a_out), h, p.w_main_out, p.b_main_out, shared, p.b_shared_out)
    h_undir = _path(constant(prop.a_undir), h, p.w_main_undir, p.b_main_undir, shared, p.b_shared_undir)
    if p.gate_mode != "none":
        h_undir = scale(h_undir, p.c_undir)
        h_in = scale(h_in, p.c_in)
        h_out = scale(h_out, p.c_out)
    pre = add(add(add(h_undir, h_in), h_out), p.b_const)
    pre = add(pre, matmul(h, p.w_res))
    if layer_norm:
        pre = layer_norm_rows(pre)
    out = leaky_relu(pre, leaky_slope)
    return dropout(out, dropout_rate, rng, training)


def model_forward(
    h0,
    model: ModelParams,
    prop: PropagationSet,
    training: bool = False,
    rng: np.random.Generator | None = None,
):
    """Run the layer stack; returns ``(Z, logits)`` where Z is the last hidden output.

    Z is returned before L2 normalization; apply ``log_softmax`` to the
    logits for NLL training.
    """
    h = h0 if isinstance(h0, Tensor) else Tensor(h0)
    for layer in model.layers:
        h = layer_forward(
            h,
            layer,
            prop,
            training=training,
            rng=rng,
            dropout_rate=model.dropout,
            leaky_slope=model.leaky_slope,
            layer_norm=model.layer_norm,
        )
    return h, add_row(matmul(h, model.w_dec), model.b_dec)
