"""Central finite-difference gradient checking."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .tensor import Tensor, backward


def numerical_gradient(f: Callable[[], float], param: Tensor, h: float = 1e-5) -> np.ndarray:
    g = np.zeros_like(param.value)
    flat = param.value.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + h
        fp = f()
        flat[i] = old - h
        fm = f()
        flat[i] = old
        gflat[i] = (fp - fm) / (2.0 * h)
    return g


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8) -> float:
    """Max-norm error scaled by the larger max-norm of the two gradients."""
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), floor)
    return float(np.abs(analytic - numeric).max() / scale)


def check_gradients(loss_fn: Callable[[], Tensor], params, h: float = 1e-5) -> dict[str, float]:
    """Relative error between backprop and central differences, per parameter."""
    params = list(params)
    for p in params:
        p.zero_grad()
    backward(loss_fn())
    analytic = {id(p): p.grad.copy() for p in params}

    def scalar():
        return loss_fn().item()

    errors = {}
    for k, p in enumerate(params):
        num = numerical_gradient(scalar, p, h)
        errors[p.name or f"param{k}"] = relative_error(analytic[id(p)], num)
    return errors
