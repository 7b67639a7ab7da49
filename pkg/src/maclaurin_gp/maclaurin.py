"""Finite feature maps for the Gaussian kernel built from its Maclaurin series.

``Phi(x) = s * exp(-|x~|^2 / 2) * (1, f_1(x~) / sqrt(1!), ..., f_p(x~) / sqrt(p!))``

where ``f_n`` is either the explicit tensor power ``x~^(n)`` or a random
polynomial sketch of degree ``n``.  Shifting the inputs by a center before
featurizing gives the localized approximation, which is exact (and
deterministic) whenever one argument coincides with the center.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import CapacityError, InputError
from .kernels import KernelParams, maclaurin_partial_sum
from .sketches import (
    PolynomialSketch,
    SketchKind,
    apply_sketch,
    as_seed_sequence,
    child_sequence,
    next_power_of_two,
    sample_sketch,
    srht_pair_count,
    variance_coefficients,
)

MAX_EXPLICIT_DIM = 10**6


class MapVariant(str, enum.Enum):
    EXPLICIT = "explicit"
    RANDOMIZED = "randomized"


@dataclass(frozen=True, eq=False)
class MaclaurinFeatureMap:
    params: KernelParams
    degree_cap: int
    variant: MapVariant
    input_dim: int
    sketches: tuple = ()
    allocation: tuple = ()
    kind: Optional[SketchKind] = None

    @property
    def total_dim(self) -> int:
        if self.variant is MapVariant.EXPLICIT:
            return explicit_dim(self.input_dim, self.degree_cap)
        return 1 + int(sum(self.allocation))


@dataclass
class AllocationResult:
    optimal_degree: int
    allocation: tuple
    objective_trace: list = field(default_factory=list)


def explicit_dim(d: int, p: int) -> int:
    return sum(d**n for n in range(p + 1))


def build_explicit_map(params: KernelParams, p: int, input_dim: int) -> MaclaurinFeatureMap:
    if p < 0 or input_dim < 1:
        raise InputError("need p >= 0 and input_dim >= 1")
    dim = explicit_dim(input_dim, p)
    if dim > MAX_EXPLICIT_DIM:
        raise CapacityError(
            f"explicit map with d={input_dim}, p={p} has {dim} features (limit {MAX_EXPLICIT_DIM})"
        )
    return MaclaurinFeatureMap(params, p, MapVariant.EXPLICIT, input_dim)


def build_random_map(params: KernelParams, allocation: Sequence[int], kind, input_dim: int,
                     seed=None) -> MaclaurinFeatureMap:
    """Randomized map with ``allocation[n-1]`` sketch features for degree ``n``.

    The sketch of degree ``n`` is drawn from the child seed sequence ``(n,)``
    of ``seed``, so the draws of one degree do not depend on the others.
    """
    allocation = tuple(int(a) for a in allocation)
    if any(a < 0 for a in allocation):
        raise InputError("feature allocation entries must be non-negative")
    kind = SketchKind.parse(kind)
    ss = as_seed_sequence(seed)
    sketches = []
    for n, Dn in enumerate(allocation, start=1):
        if Dn == 0:
            sketches.append(None)
        else:
            sketches.append(sample_sketch(kind, n, input_dim, Dn, child_sequence(ss, n)))
    return MaclaurinFeatureMap(
        params, len(allocation), MapVariant.RANDOMIZED, input_dim,
        sketches=tuple(sketches), allocation=allocation, kind=kind,
    )


def _tensor_powers(X, p):
    out = [np.ones((X.shape[0], 1))]
    for _ in range(p):
        prev = out[-1]
        out.append((prev[:, :, None] * X[:, None, :]).reshape(X.shape[0], -1))
    return out


def featurize(fmap: MaclaurinFeatureMap, X, center=None) -> np.ndarray:
    """Rows ``Phi(x_i - center)``; ``center`` defaults to the origin."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if fmap.input_dim == 1 else X[None, :]
    if X.ndim != 2 or X.shape[1] != fmap.input_dim:
        raise InputError(f"expected inputs of dimension {fmap.input_dim}, got shape {X.shape}")
    if center is not None:
        center = np.asarray(center, dtype=float).ravel()
        if center.shape[0] != fmap.input_dim:
            raise InputError("center dimension does not match the inputs")
        X = X - center
    params = fmap.params
    Xs = X / params.lengthscale
    scale = math.sqrt(params.kernel_variance) * np.exp(-0.5 * np.sum(Xs**2, axis=1))

    blocks = [np.ones((X.shape[0], 1))]
    if fmap.variant is MapVariant.EXPLICIT:
        powers = _tensor_powers(Xs, fmap.degree_cap)
        for n in range(1, fmap.degree_cap + 1):
            blocks.append(powers[n] / math.sqrt(math.factorial(n)))
    else:
        for n, sketch in enumerate(fmap.sketches, start=1):
            if sketch is not None:
                blocks.append(apply_sketch(sketch, Xs) / math.sqrt(math.factorial(n)))
    return scale[:, None] * np.hstack(blocks)


def approximate_kernel(fmap: MaclaurinFeatureMap, X, Y, center=None) -> np.ndarray:
    return featurize(fmap, X, center) @ featurize(fmap, Y, center).T


# --- variance and allocation -------------------------------------------------


def _pair_terms(pairs, params: KernelParams, p_max: int, kind):
    """Per-pair quantities shared by the variance and the allocation objective."""
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim == 2:
        pairs = pairs[:, :, None]
    if pairs.ndim != 3 or pairs.shape[1] != 2:
        raise InputError("pairs must have shape (P, 2, d)")
    xs = pairs[:, 0, :] / params.lengthscale
    ys = pairs[:, 1, :] / params.lengthscale
    prefactor = params.kernel_variance * np.exp(
        -0.5 * (np.sum(xs**2, axis=1) + np.sum(ys**2, axis=1))
    )
    dot = np.sum(xs * ys, axis=1)
    degrees = np.arange(1, p_max + 1)
    facts = np.array([math.factorial(n) for n in degrees], dtype=float)
    series = dot[:, None] ** degrees[None, :] / facts[None, :]
    tail = np.exp(dot) - maclaurin_partial_sum(dot, p_max)
    a = np.empty((len(dot), p_max))
    t = np.empty((len(dot), p_max))
    for j, n in enumerate(degrees):
        a[:, j], t[:, j] = variance_coefficients(kind, xs, ys, n)
    return prefactor, series, tail, a / facts**2, t / facts**2, next_power_of_two(xs.shape[1])


def _variance_at(a, t, Dn, dp, kind):
    if Dn == 0:
        return np.zeros_like(a)
    c = srht_pair_count(Dn, dp) if kind is SketchKind.TENSOR_SRHT else 0
    return np.maximum(a / Dn - c / Dn**2 * t, 0.0)


class _Objective:
    """Mean over pairs of squared bias plus variance of the random estimator."""

    def __init__(self, pairs, params, p_max, kind):
        self.kind = SketchKind.parse(kind)
        self.p_max = p_max
        (self.prefactor, self.series, self.tail,
         self.a, self.t, self.dp) = _pair_terms(pairs, params, p_max, self.kind)
        self._cache = {}

    def degree_variance(self, j, Dn):
        key = (j, Dn)
        if key not in self._cache:
            self._cache[key] = _variance_at(self.a[:, j], self.t[:, j], Dn, self.dp, self.kind)
        return self._cache[key]

    def __call__(self, allocation) -> float:
        bias = self.tail.copy()
        var = np.zeros_like(bias)
        for j, Dn in enumerate(allocation):
            if Dn == 0:
                bias = bias + self.series[:, j]
            else:
                var = var + self.degree_variance(j, Dn)
        return float(np.mean(self.prefactor**2 * (bias**2 + var)))


def allocation_objective(pairs, allocation, params: KernelParams, kind) -> float:
    allocation = tuple(int(a) for a in allocation)
    return _Objective(pairs, params, len(allocation), kind)(allocation)


def random_map_variance(fmap: MaclaurinFeatureMap, x, y, center=None) -> float:
    """Exact variance of ``Phi(x) . Phi(y)`` over the sketch distribution."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if center is not None:
        center = np.asarray(center, dtype=float).ravel()
        x, y = x - center, y - center
    if fmap.variant is MapVariant.EXPLICIT:
        return 0.0
    obj = _Objective(np.stack([x, y])[None], fmap.params, fmap.degree_cap, fmap.kind)
    var = np.zeros(1)
    for j, Dn in enumerate(fmap.allocation):
        var = var + obj.degree_variance(j, Dn)
    return float(obj.prefactor[0] ** 2 * var[0])


def _degree_curves(objective: _Objective, budget: int) -> np.ndarray:
    """``curves[j, D]`` = mean prefactored variance of degree ``j + 1`` at ``D`` features."""
    curves = np.zeros((objective.p_max, budget + 1))
    w = objective.prefactor**2
    for j in range(objective.p_max):
        for Dn in range(1, budget + 1):
            curves[j, Dn] = np.mean(w * objective.degree_variance(j, Dn))
    return curves


def _candidate_sets(p_max: int, budget: int, contiguous: bool = True):
    if not contiguous and p_max <= 10:
        sets = [
            tuple(j for j in range(p_max) if mask >> j & 1)
            for mask in range(1, 2**p_max)
        ]
    else:
        sets = [tuple(range(p)) for p in range(1, p_max + 1)]
    return [s for s in sets if len(s) <= budget]


def _greedy_fill(active, curves, bias_term, budget, block):
    """Incremental allocation of ``budget`` features over the ``active`` degrees.

    Starts from one feature per active degree.  A step adds either a single
    feature or, when ``block > 1``, enough features to complete the current
    Hadamard block, whichever lowers the objective most per feature.
    """
    alloc = {j: 1 for j in active}
    value = bias_term + sum(curves[j, 1] for j in active)
    trace = [value]
    remaining = budget - len(active)
    while remaining > 0:
        best = None
        for j in active:
            Dn = alloc[j]
            steps = {1}
            if block > 1:
                steps.add(block - Dn % block)
            for k in sorted(steps):
                if k > remaining:
                    continue
                gain = curves[j, Dn] - curves[j, Dn + k]
                rate = gain / k
                if best is None or rate > best[0] + 1e-15 * abs(best[0]):
                    best = (rate, j, k, gain)
        _, j, k, gain = best
        alloc[j] += k
        remaining -= k
        value -= gain
        trace.append(value)
    # features that could only raise the objective (partial Hadamard blocks)
    # are folded into the preceding step
    while len(trace) > 1 and trace[-1] > trace[-2]:
        last = trace.pop()
        trace[-1] = last
    return alloc, trace


def optimize_allocation(pairs, budget: int, p_max: int, kind, params: KernelParams,
                        contiguous: bool = True) -> AllocationResult:
    """Distribute ``budget`` sketch features over degrees ``1..p_max``.

    With ``contiguous`` (the default) every degree up to the chosen ``p*``
    receives at least one feature.  Otherwise any subset of degrees may be
    dropped; this lowers the objective on wide data but can leave the low
    degrees empty, which ruins predictions near a localization center.

    The objective (mean squared bias plus variance of the random kernel over
    ``pairs``) splits into a bias term fixed by the set of degrees that get
    any features and a sum of per-degree variance curves.  For every
    candidate set the features are placed incrementally, always where the
    objective drops fastest; the best set wins.  ``objective_trace`` follows
    the incremental steps of the winning set, starting from one feature per
    active degree.
    """
    if int(budget) != budget or budget < 1:
        raise InputError("feature budget must be a positive integer")
    if p_max < 1:
        raise InputError("p_max must be at least 1")
    pairs = np.asarray(pairs, dtype=float)
    if pairs.size == 0:
        raise InputError("need at least one input pair")
    budget = int(budget)
    objective = _Objective(pairs, params, p_max, kind)
    curves = _degree_curves(objective, budget)
    block = objective.dp if objective.kind is SketchKind.TENSOR_SRHT else 1
    w = objective.prefactor**2

    scored = []
    for active in _candidate_sets(p_max, budget, contiguous):
        bias = objective.tail.copy()
        for j in range(p_max):
            if j not in active:
                bias = bias + objective.series[:, j]
        scored.append((float(np.mean(w * bias**2)), active))
    scored.sort(key=lambda item: item[0])

    best = None
    for bias_term, active in scored:
        if best is not None and bias_term >= best[0]:
            break
        alloc, trace = _greedy_fill(active, curves, bias_term, budget, block)
        if best is None or trace[-1] < best[0]:
            best = (trace[-1], alloc, trace)
    _, alloc, trace = best
    p_star = max(alloc) + 1
    allocation = tuple(alloc.get(j, 0) for j in range(p_star))
    return AllocationResult(p_star, allocation, trace)


def sample_pairs(X, n_pairs: int = 100, seed=None) -> np.ndarray:
    """Random index pairs of rows of ``X`` stacked as ``(n_pairs, 2, d)``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    rng = np.random.default_rng(seed)
    i = rng.integers(0, X.shape[0], size=n_pairs)
    j = rng.integers(0, X.shape[0], size=n_pairs)
    return np.stack([X[i], X[j]], axis=1)
