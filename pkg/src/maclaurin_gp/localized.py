"""Localized Maclaurin GP predictor built on farthest-point clustering.

Training points are covered greedily: starting from the training mean, the
point farthest from all current centroids becomes a new centroid until every
training point lies closer than ``theta`` to one.  One feature-space GP is
fitted per centroid on the shifted inputs ``X - c``; a test point is shifted
by, and predicted with, its nearest centroid.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError, NumericalError
from .gpr import Dataset, FeatureGPModel, PredictiveGaussian, feature_gpr_fit, feature_gpr_predict
from .kernels import KernelParams
from .maclaurin import (
    AllocationResult,
    MaclaurinFeatureMap,
    build_explicit_map,
    build_random_map,
    featurize,
    optimize_allocation,
    sample_pairs,
)
from .sketches import SketchKind, as_seed_sequence, child_sequence


@dataclass(frozen=True)
class CentroidSet:
    centroids: np.ndarray
    threshold: float
    # training row of each centroid; -1 marks the training mean
    indices: tuple = ()

    def __len__(self):
        return self.centroids.shape[0]

    def assign(self, X) -> np.ndarray:
        """Index of the nearest centroid for each row (ties to the lower index)."""
        X = np.asarray(X, dtype=float)
        d2 = np.sum((X[:, None, :] - self.centroids[None, :, :]) ** 2, axis=-1)
        return np.argmin(d2, axis=1)


def farthest_point_clustering(X, theta: float) -> CentroidSet:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 1:
        raise InputError("need at least one training point")
    if not theta > 0:
        raise InputError(f"clustering threshold must be positive, got {theta!r}")
    centroids = [X.mean(axis=0)]
    indices = [-1]
    dist = np.linalg.norm(X - centroids[0], axis=1)
    while dist.max() >= theta:
        i = int(np.argmax(dist))
        centroids.append(X[i].copy())
        indices.append(i)
        dist = np.minimum(dist, np.linalg.norm(X - X[i], axis=1))
    return CentroidSet(np.array(centroids), float(theta), tuple(indices))


@dataclass(frozen=True)
class FeatureConfig:
    """How the shared Maclaurin feature map is built.

    ``features`` is the total map dimension ``D`` (including the constant).
    One-dimensional inputs use the explicit map of degree ``D - 1`` unless
    ``explicit`` says otherwise; higher dimensions draw ``kind`` sketches
    with an allocation optimized up to ``max_degree``.
    """

    features: int = 100
    kind: SketchKind = SketchKind.TENSOR_SRHT
    max_degree: int = 10
    seed: int = 0
    n_pairs: int = 100
    explicit: Optional[bool] = None
    degree: Optional[int] = None
    contiguous: bool = True

    def __post_init__(self):
        if self.features < 1:
            raise InputError("feature count D must be at least 1")
        object.__setattr__(self, "kind", SketchKind.parse(self.kind))


def build_feature_map(train: Dataset, params: KernelParams, config: FeatureConfig):
    """Shared map plus the allocation that produced it (``None`` if explicit)."""
    explicit = config.explicit if config.explicit is not None else train.dim == 1
    if explicit:
        if config.degree is not None:
            p = config.degree
        elif train.dim == 1:
            p = config.features - 1
        else:
            raise InputError("explicit maps in d > 1 need an explicit degree")
        return build_explicit_map(params, p, train.dim), None
    ss = as_seed_sequence(config.seed)
    budget = config.features - 1
    if budget < 1:
        return build_random_map(params, (), config.kind, train.dim, child_sequence(ss, 1)), None
    centered = train.inputs - train.inputs.mean(axis=0)
    pairs = sample_pairs(centered, config.n_pairs, np.random.default_rng(child_sequence(ss, 0)))
    alloc = optimize_allocation(pairs, budget, config.max_degree, config.kind, params,
                                config.contiguous)
    fmap = build_random_map(params, alloc.allocation, config.kind, train.dim, child_sequence(ss, 1))
    return fmap, alloc


@dataclass(frozen=True, eq=False)
class LocalizedModel:
    centroid_set: CentroidSet
    local_models: tuple
    feature_map: MaclaurinFeatureMap
    params: KernelParams
    config: FeatureConfig
    allocation: Optional[AllocationResult] = None

    @property
    def n_clusters(self) -> int:
        return len(self.centroid_set)


def fit_centered(train: Dataset, fmap: MaclaurinFeatureMap, center, noise_variance) -> FeatureGPModel:
    F = featurize(fmap, train.inputs, center)
    return feature_gpr_fit(F, train.targets, noise_variance, fmap.params, fmap)


def fit_localized(train: Dataset, params: KernelParams, config: FeatureConfig,
                  theta: float = np.inf, feature_map=None) -> LocalizedModel:
    """Cluster the training inputs and fit one local predictor per centroid.

    ``theta = inf`` yields the single-cluster (training mean) predictor.
    """
    if feature_map is None:
        feature_map, alloc = build_feature_map(train, params, config)
    else:
        alloc = None
    clusters = farthest_point_clustering(train.inputs, theta)
    models = []
    for k, c in enumerate(clusters.centroids):
        try:
            models.append(fit_centered(train, feature_map, c, params.noise_variance))
        except NumericalError as err:
            raise NumericalError(f"centroid {k}: {err}", condition=err.condition) from err
    return LocalizedModel(clusters, tuple(models), feature_map, params, config, alloc)


def predict_localized(model: LocalizedModel, test_inputs) -> PredictiveGaussian:
    X = np.asarray(test_inputs, dtype=float)
    d = model.feature_map.input_dim
    if X.ndim == 1:
        X = X[:, None] if d == 1 else X[None, :]
    if X.shape[1] != d:
        raise InputError(f"expected inputs of dimension {d}, got shape {X.shape}")
    owner = model.centroid_set.assign(X)
    mean = np.empty(X.shape[0])
    var = np.empty(X.shape[0])
    for k in np.unique(owner):
        rows = owner == k
        c = model.centroid_set.centroids[k]
        pred = feature_gpr_predict(model.local_models[k], featurize(model.feature_map, X[rows], c))
        mean[rows] = pred.mean
        var[rows] = pred.variance
    return PredictiveGaussian(mean, var)


def predict_pointwise(train: Dataset, params: KernelParams, feature_map: MaclaurinFeatureMap,
                      test_inputs) -> PredictiveGaussian:
    """Reference mode: re-center the whole predictor on every test point.

    Costs one ``D x D`` factorization per test point.
    """
    X = np.asarray(test_inputs, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if feature_map.input_dim == 1 else X[None, :]
    mean = np.empty(X.shape[0])
    var = np.empty(X.shape[0])
    for i, x in enumerate(X):
        local = fit_centered(train, feature_map, x, params.noise_variance)
        pred = feature_gpr_predict(local, featurize(feature_map, x[None, :], x))
        mean[i] = pred.mean[0]
        var[i] = pred.variance[0]
    return PredictiveGaussian(mean, var)
