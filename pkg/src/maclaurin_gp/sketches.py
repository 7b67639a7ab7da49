"""Randomized feature maps for the polynomial kernel ``(x . y)^n``.

A degree-``n`` sketch maps ``x`` to ``(W_1 x * ... * W_n x) / sqrt(D)``
(elementwise products) so that ``E[phi(x) . phi(y)] = (x . y)^n``.  Three
samplers are provided:

* ``GAUSSIAN``     - i.i.d. standard normal entries,
* ``RADEMACHER``   - i.i.d. uniform {+1, -1} entries,
* ``TENSOR_SRHT``  - each ``W_i`` is a block of permuted rows of
  ``H diag(s)`` with ``H`` the unnormalized Walsh-Hadamard matrix.

Random streams
--------------
``sample_sketch`` accepts an integer seed or a ``numpy.random.SeedSequence``.
Every random array is drawn from its own child sequence, keyed by
``spawn_key + (component, block, factor)`` with component 0 for dense
weights, 1 for sign vectors and 2 for permutations.  Increasing the feature
count or degree therefore leaves previously drawn arrays untouched.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError

_WEIGHTS, _SIGNS, _PERMS = 0, 1, 2


class SketchKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    TENSOR_SRHT = "tensorsrht"

    @classmethod
    def parse(cls, value) -> "SketchKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().replace("-", "").replace("_", ""))
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise InputError(f"unknown sketch kind {value!r}; expected one of {names}") from None


def next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n) - 1).bit_length()


def as_seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2**63)))
    return np.random.SeedSequence(seed)


def child_sequence(ss: np.random.SeedSequence, *key: int) -> np.random.SeedSequence:
    """Deterministic child of ``ss`` addressed by ``key`` (no internal counter)."""
    return np.random.SeedSequence(
        ss.entropy, spawn_key=tuple(ss.spawn_key) + tuple(int(k) for k in key)
    )


def _child_rng(ss, *key) -> np.random.Generator:
    return np.random.default_rng(child_sequence(ss, *key))


@dataclass(frozen=True, eq=False)
class PolynomialSketch:
    """Sampled state of a degree-``n`` polynomial sketch.

    Dense kinds hold ``weights`` with shape ``(degree, feature_dim, input_dim)``.
    TensorSRHT holds ``signs`` and ``permutations``, both shaped
    ``(n_blocks, degree, padded_dim)``.
    """

    kind: SketchKind
    degree: int
    input_dim: int
    feature_dim: int
    weights: Optional[np.ndarray] = None
    signs: Optional[np.ndarray] = None
    permutations: Optional[np.ndarray] = None

    @property
    def padded_dim(self) -> int:
        return next_power_of_two(self.input_dim)

    @property
    def n_blocks(self) -> int:
        return math.ceil(self.feature_dim / self.padded_dim)

    def __call__(self, X) -> np.ndarray:
        return apply_sketch(self, X)


def _check_dims(degree, input_dim, feature_dim):
    for name, v in (("degree", degree), ("input_dim", input_dim), ("feature_dim", feature_dim)):
        if int(v) != v or v < 1:
            raise InputError(f"{name} must be a positive integer, got {v!r}")


def sample_sketch(kind, degree: int, input_dim: int, feature_dim: int, seed=None) -> PolynomialSketch:
    kind = SketchKind.parse(kind)
    _check_dims(degree, input_dim, feature_dim)
    ss = as_seed_sequence(seed)
    shape = (feature_dim, input_dim)

    if kind is SketchKind.GAUSSIAN:
        W = np.stack([_child_rng(ss, _WEIGHTS, 0, i).standard_normal(shape) for i in range(degree)])
        return PolynomialSketch(kind, degree, input_dim, feature_dim, weights=W)
    if kind is SketchKind.RADEMACHER:
        W = np.stack([
            _child_rng(ss, _WEIGHTS, 0, i).choice(np.array([-1.0, 1.0]), size=shape)
            for i in range(degree)
        ])
        return PolynomialSketch(kind, degree, input_dim, feature_dim, weights=W)

    dp = next_power_of_two(input_dim)
    n_blocks = math.ceil(feature_dim / dp)
    signs = np.empty((n_blocks, degree, dp))
    perms = np.empty((n_blocks, degree, dp), dtype=np.intp)
    for b in range(n_blocks):
        for i in range(degree):
            signs[b, i] = _child_rng(ss, _SIGNS, b, i).choice(np.array([-1.0, 1.0]), size=dp)
            perms[b, i] = _child_rng(ss, _PERMS, b, i).permutation(dp)
    return PolynomialSketch(kind, degree, input_dim, feature_dim, signs=signs, permutations=perms)


def fwht(v, axis: int = -1) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform along ``axis``.

    Iterative radix-2 butterflies applied in place on a copy of ``v``.
    """
    out = np.array(v, dtype=float, copy=True)
    out = np.moveaxis(out, axis, -1)
    n = out.shape[-1]
    if n < 1 or n & (n - 1):
        raise InputError(f"FWHT length must be a power of two, got {n}")
    lead = out.shape[:-1]
    h = 1
    while h < n:
        view = out.reshape(lead + (n // (2 * h), 2, h))
        upper = view[..., 0, :].copy()
        view[..., 0, :] += view[..., 1, :]
        view[..., 1, :] = upper - view[..., 1, :]
        h *= 2
    return np.moveaxis(out, -1, axis)


def _dense_features(weights, X, feature_dim):
    # weights (..., n, D, d); X (m, d) -> (..., m, D)
    proj = X @ np.swapaxes(weights, -1, -2)
    return np.prod(proj, axis=-3) / math.sqrt(feature_dim)


def _srht_features(signs, perms, X, feature_dim):
    # signs/perms (..., B, n, d'); X (m, d) -> (..., m, D)
    dp = signs.shape[-1]
    if X.shape[1] < dp:
        X = np.pad(X, ((0, 0), (0, dp - X.shape[1])))
    Z = signs[..., None, :, :, :] * X[:, None, None, :]
    Z = fwht(Z)
    idx = np.broadcast_to(perms[..., None, :, :, :], Z.shape)
    Z = np.take_along_axis(Z, idx, axis=-1)
    Z = np.prod(Z, axis=-2)
    Z = Z.reshape(Z.shape[:-2] + (-1,))[..., :feature_dim]
    return Z / math.sqrt(feature_dim)


def apply_sketch(sketch: PolynomialSketch, X) -> np.ndarray:
    """Feature vector(s) of ``X``: shape ``(D,)`` for a vector, ``(N, D)`` for rows."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    X2 = X[None, :] if single else X
    if X2.ndim != 2 or X2.shape[1] != sketch.input_dim:
        raise InputError(f"expected inputs of dimension {sketch.input_dim}, got shape {X.shape}")
    if sketch.kind is SketchKind.TENSOR_SRHT:
        out = _srht_features(sketch.signs, sketch.permutations, X2, sketch.feature_dim)
    else:
        out = _dense_features(sketch.weights, X2, sketch.feature_dim)
    return out[0] if single else out


def monte_carlo_estimates(kind, x, y, degree: int, feature_dim: int, n_draws: int,
                          seed=None, chunk: int = 2000) -> np.ndarray:
    """``phi(x) . phi(y)`` for ``n_draws`` independently sampled sketches.

    Draws are vectorized in chunks; the sampling distribution matches
    ``sample_sketch`` but the random stream layout does not.
    """
    kind = SketchKind.parse(kind)
    x, y = np.asarray(x, dtype=float).ravel(), np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InputError("dimension mismatch")
    d = x.shape[0]
    _check_dims(degree, d, feature_dim)
    rng = np.random.default_rng(seed)
    pts = np.stack([x, y])
    out = np.empty(n_draws)
    dp = next_power_of_two(d)
    n_blocks = math.ceil(feature_dim / dp)
    for start in range(0, n_draws, chunk):
        s = min(chunk, n_draws - start)
        if kind is SketchKind.GAUSSIAN:
            W = rng.standard_normal((s, degree, feature_dim, d))
            F = _dense_features(W, pts, feature_dim)
        elif kind is SketchKind.RADEMACHER:
            W = rng.choice(np.array([-1.0, 1.0]), size=(s, degree, feature_dim, d))
            F = _dense_features(W, pts, feature_dim)
        else:
            signs = rng.choice(np.array([-1.0, 1.0]), size=(s, n_blocks, degree, dp))
            base = np.broadcast_to(np.arange(dp), (s, n_blocks, degree, dp))
            perms = rng.permuted(base, axis=-1)
            F = _srht_features(signs, perms, pts, feature_dim)
        out[start:start + s] = np.sum(F[:, 0, :] * F[:, 1, :], axis=-1)
    return out


def srht_pair_count(D: int, d: int) -> int:
    """Number of ordered same-block feature pairs, ``c(D, d)``."""
    q, r = divmod(int(D), int(d))
    return q * d * (d - 1) + r * (r - 1)


def variance_coefficients(kind, x, y, degree: int):
    """Coefficients ``(a, t)`` with ``Var(D) = a / D - c(D, d') / D**2 * t``.

    ``x`` and ``y`` may carry leading batch axes; ``t`` is zero for the
    dense kinds and ``d'`` is the padded block size of TensorSRHT.
    """
    kind = SketchKind.parse(kind)
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise InputError("dimension mismatch")
    n = int(degree)
    xx = np.sum(x * x, axis=-1)
    yy = np.sum(y * y, axis=-1)
    xy = np.sum(x * y, axis=-1)
    if kind is SketchKind.GAUSSIAN:
        return (xx * yy + 2 * xy**2) ** n - xy ** (2 * n), np.zeros_like(xy)
    diag = np.sum(x**2 * y**2, axis=-1)
    a = (xx * yy + 2 * (xy**2 - diag)) ** n - xy ** (2 * n)
    dp = next_power_of_two(x.shape[-1])
    if kind is SketchKind.RADEMACHER or dp == 1:
        return a, np.zeros_like(xy)
    inner = xy**2 - (xx * yy + xy**2 - 2 * diag) / (dp - 1)
    return a, xy ** (2 * n) - inner**n


def sketch_variance(kind, x, y, degree: int, feature_dim: int) -> float:
    """Closed-form variance of ``phi(x) . phi(y)`` for a degree-``n`` sketch.

    For TensorSRHT the block size is the padded dimension (next power of
    two), which is where the orthogonal row structure lives.
    """
    kind = SketchKind.parse(kind)
    x, y = np.asarray(x, dtype=float).ravel(), np.asarray(y, dtype=float).ravel()
    _check_dims(degree, max(x.shape[0], 1), feature_dim)
    a, t = variance_coefficients(kind, x, y, degree)
    D = int(feature_dim)
    pairs = srht_pair_count(D, next_power_of_two(x.shape[0])) if kind is SketchKind.TENSOR_SRHT else 0
    return max(float(a / D - pairs / D**2 * t), 0.0)
