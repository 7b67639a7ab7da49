"""Gaussian kernel, its truncated Maclaurin series, and the localized variant.

Inputs are scaled by the length scale before any series is evaluated, so
``x~ = x / l``.  With that convention the Gaussian kernel factorizes as

    k(x, y) = s2 * exp(-(|x~|^2 + |y~|^2) / 2) * exp(x~ . y~)

and truncating the last exponential after ``p`` terms gives ``k_p``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InputError

MEDIAN_EXACT_LIMIT = 5000


class DegenerateInputWarning(UserWarning):
    """Raised when a heuristic has no information to work with."""


@dataclass(frozen=True)
class KernelParams:
    """Gaussian kernel hyperparameters plus the observation noise."""

    lengthscale: float
    kernel_variance: float
    noise_variance: float

    def __post_init__(self):
        for name in ("lengthscale", "kernel_variance", "noise_variance"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InputError(f"{name} must be a positive finite number, got {value!r}")

    def replace(self, **changes) -> "KernelParams":
        fields = dict(
            lengthscale=self.lengthscale,
            kernel_variance=self.kernel_variance,
            noise_variance=self.noise_variance,
        )
        fields.update(changes)
        return KernelParams(**fields)

    def to_dict(self) -> dict:
        return {
            "lengthscale": float(self.lengthscale),
            "kernel_variance": float(self.kernel_variance),
            "noise_variance": float(self.noise_variance),
        }


def _pair(x, y):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return x, y


def gaussian_kernel(x, y, params: KernelParams) -> float:
    x, y = _pair(x, y)
    sq = float(np.sum((x - y) ** 2))
    return params.kernel_variance * math.exp(-sq / (2.0 * params.lengthscale**2))


def maclaurin_partial_sum(z, p: int):
    """sum_{n=0}^{p} z^n / n!, elementwise."""
    if p < 0:
        raise InputError("truncation degree must be non-negative")
    z = np.asarray(z, dtype=float)
    term = np.ones_like(z)
    total = np.ones_like(z)
    for n in range(1, p + 1):
        term = term * z / n
        total = total + term
    return total


def truncated_maclaurin_kernel(x, y, params: KernelParams, p: int) -> float:
    """Degree-``p`` truncation of the Maclaurin expansion of the Gaussian kernel."""
    x, y = _pair(x, y)
    xs = x / params.lengthscale
    ys = y / params.lengthscale
    prefactor = math.exp(-(xs @ xs + ys @ ys) / 2.0)
    return params.kernel_variance * prefactor * float(maclaurin_partial_sum(xs @ ys, p))


def localized_truncated_kernel(x, y, center, params: KernelParams, p: int) -> float:
    """``k_p`` evaluated after shifting both arguments by ``center``."""
    x, y = _pair(x, y)
    center, _ = _pair(center, x)
    return truncated_maclaurin_kernel(x - center, y - center, params, p)


def _as_matrix(X, name="X"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError(f"{name} must be a 2-D array")
    return X


def squared_distances(X, Y) -> np.ndarray:
    X = _as_matrix(X)
    Y = _as_matrix(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    sq = (
        np.sum(X**2, axis=1)[:, None]
        + np.sum(Y**2, axis=1)[None, :]
        - 2.0 * X @ Y.T
    )
    return np.maximum(sq, 0.0)


def gaussian_gram(X, Y, params: KernelParams) -> np.ndarray:
    """Vectorized Gaussian kernel matrix."""
    sq = squared_distances(X, Y)
    return params.kernel_variance * np.exp(-sq / (2.0 * params.lengthscale**2))


def kernel_matrix(X, Y, kernel: Callable) -> np.ndarray:
    """Fill ``K[i, j] = kernel(X[i], Y[j])`` with a scalar kernel callable."""
    X = _as_matrix(X)
    Y = _as_matrix(Y, "Y")
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    K = np.empty((X.shape[0], Y.shape[0]))
    for i, xi in enumerate(X):
        for j, yj in enumerate(Y):
            K[i, j] = kernel(xi, yj)
    return K


def median_heuristic(X, rng=None) -> float:
    """Median pairwise Euclidean distance of the rows of ``X``.

    Above ``MEDIAN_EXACT_LIMIT`` rows a uniform subsample of that size is
    used.  Identical points give 0 and a ``DegenerateInputWarning``.
    """
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise InputError("median heuristic needs at least two points")
    if X.shape[0] > MEDIAN_EXACT_LIMIT:
        rng = np.random.default_rng(rng)
        idx = rng.choice(X.shape[0], size=MEDIAN_EXACT_LIMIT, replace=False)
        X = X[idx]
    value = float(np.median(pdist(X)))
    if value == 0.0:
        warnings.warn("all points identical; median distance is 0", DegenerateInputWarning)
    return value
