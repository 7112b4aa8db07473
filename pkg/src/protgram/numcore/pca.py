"""PCA through a cyclic Jacobi eigensolver on the covariance matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def jacobi_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100):
    """Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors as columns,
    sorted by decreasing eigenvalue.
    """
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.abs(a).max(), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt((np.tril(a, -1) ** 2).sum())
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each component is made positive
    idx = np.abs(components).argmax(axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


@dataclass
class PCAModel:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,)
    explained_variance_ratio: np.ndarray  # (k,)

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def transform(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return (x - self.mean) @ self.components.T

    def inverse_transform(self, z) -> np.ndarray:
        return np.asarray(z) @ self.components + self.mean


def pca_fit(x, k: int) -> PCAModel:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D data matrix, got shape {x.shape}")
    n, d = x.shape
    if k < 1 or k > min(n - 1, d):
        raise ValueError(f"cannot extract {k} components from {n} samples of dimension {d}")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (n - 1)
    w, v = jacobi_eigh(cov)
    w = np.clip(w, 0.0, None)
    total = w.sum()
    ratio = w / total if total > 0 else np.zeros_like(w)
    return PCAModel(mean, _fix_signs(v[:, :k].T), w[:k], ratio[:k])


def pca_reduce(x, k: int):
    """Project ``x`` onto its top-``k`` principal axes; returns ``(projected, model)``."""
    model = pca_fit(x, k)
    return model.transform(x), model
