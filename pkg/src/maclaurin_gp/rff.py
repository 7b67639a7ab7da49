"""Random Fourier features for the Gaussian kernel, plain and orthogonal."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .kernels import KernelParams
from .sketches import as_seed_sequence


@dataclass(frozen=True, eq=False)
class FourierFeatureMap:
    """Frequencies ``omega`` (``D/2`` rows) and the kernel variance.

    Features are ``s * sqrt(2/D) * (cos w_1.x, sin w_1.x, ..., cos w_m.x, sin w_m.x)``.
    """

    frequencies: np.ndarray
    kernel_variance: float
    structured: bool = False

    @property
    def input_dim(self) -> int:
        return self.frequencies.shape[1]

    @property
    def total_dim(self) -> int:
        return 2 * self.frequencies.shape[0]


def _orthogonal_frequencies(rng, n_rows, d):
    blocks = []
    for _ in range(math.ceil(n_rows / d)):
        q, r = np.linalg.qr(rng.standard_normal((d, d)))
        q = q * np.sign(np.diag(r))  # Haar-distributed orthogonal matrix
        norms = np.sqrt(rng.chisquare(d, size=d))
        blocks.append(q.T * norms[:, None])
    return np.vstack(blocks)[:n_rows]


def sample_rff(input_dim: int, D: int, params: KernelParams, structured: bool = False,
               seed=None) -> FourierFeatureMap:
    """Draw ``D/2`` frequencies from ``N(0, I / l^2)``.

    With ``structured=True`` each block of ``d`` rows is an orthonormal basis
    rescaled by independent chi(d) norms, which keeps the marginal law of
    every row Gaussian while making rows in a block orthogonal.
    """
    if D < 2 or D % 2:
        raise InputError(f"random Fourier feature count must be even and >= 2, got {D}")
    if input_dim < 1:
        raise InputError("input_dim must be positive")
    rng = np.random.default_rng(as_seed_sequence(seed))
    m = D // 2
    if structured:
        omega = _orthogonal_frequencies(rng, m, input_dim)
    else:
        omega = rng.standard_normal((m, input_dim))
    return FourierFeatureMap(omega / params.lengthscale, params.kernel_variance, structured)


def apply_rff(fmap: FourierFeatureMap, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1 and fmap.input_dim > 1
    if X.ndim == 1:
        X = X[None, :] if single else X[:, None]
    if X.shape[1] != fmap.input_dim:
        raise InputError(f"expected inputs of dimension {fmap.input_dim}, got shape {X.shape}")
    proj = X @ fmap.frequencies.T
    feats = np.empty((X.shape[0], fmap.total_dim))
    feats[:, 0::2] = np.cos(proj)
    feats[:, 1::2] = np.sin(proj)
    feats *= math.sqrt(fmap.kernel_variance * 2.0 / fmap.total_dim)
    return feats[0] if single else feats
