"""Gaussian process regression in kernel space and in feature space.

Kernel space (N x N system)::

    mu  = k_f*^T (K + s_n I)^{-1} y
    var = k_** - k_f*^T (K + s_n I)^{-1} k_f*

Feature space (D x D system, ``A = Phi^T Phi / s_n + I``)::

    mu  = phi*^T A^{-1} Phi^T y / s_n
    var = phi*^T A^{-1} phi*

Both agree when ``k(x, y) = phi(x)^T phi(y)``.  Variances are for the latent
function value; add the noise variance for observation variances.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import linalg, optimize

from .errors import InputError, NumericalError
from .kernels import KernelParams, gaussian_gram, median_heuristic, squared_distances

JITTER_START = 1e-10
JITTER_MAX = 1e-6
EXACT_LML_LIMIT = 10_000
RESTART_FACTORS = (0.1, 0.3, 1.0, 3.0, 10.0)


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.inputs, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.targets, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] < 1:
            raise InputError("inputs must be a non-empty N x d array")
        if X.shape[0] != y.shape[0]:
            raise InputError(f"{X.shape[0]} input rows but {y.shape[0]} targets")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InputError("dataset contains non-finite values")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.inputs[idx], self.targets[idx])


@dataclass(frozen=True, eq=False)
class PredictiveGaussian:
    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self):
        if np.shape(self.mean) != np.shape(self.variance):
            raise InputError("mean and variance lengths differ")


def cholesky_jittered(A: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, adding trace-scaled jitter if needed."""
    try:
        return linalg.cholesky(A, lower=True)
    except linalg.LinAlgError:
        pass
    scale = np.trace(A) / A.shape[0]
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            return linalg.cholesky(A + jitter * scale * np.eye(A.shape[0]), lower=True)
        except linalg.LinAlgError:
            jitter *= 10
    cond = np.linalg.cond(A)
    raise NumericalError(
        f"matrix of size {A.shape[0]} is not positive definite "
        f"(condition number {cond:.3e}) even with jitter {JITTER_MAX:g}",
        condition=cond,
    )


def _as_inputs(X, d):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if d == 1 else X[None, :]
    if X.ndim != 2 or X.shape[1] != d:
        raise InputError(f"expected inputs of dimension {d}, got shape {X.shape}")
    return X


def exact_gpr_predict(train: Dataset, test_inputs, params: KernelParams,
                      kernel: Optional[Callable] = None) -> PredictiveGaussian:
    """Kernel-space predictor.

    ``kernel(X, Y)`` must return a kernel matrix; the Gaussian kernel of
    ``params`` is used when it is omitted.
    """
    Xs = _as_inputs(test_inputs, train.dim)
    if kernel is None:
        def kernel(A, B):
            return gaussian_gram(A, B, params)
        kss = np.full(Xs.shape[0], params.kernel_variance)
    else:
        kss = np.array([kernel(x[None, :], x[None, :])[0, 0] for x in Xs])
    K = kernel(train.inputs, train.inputs)
    K = K + params.noise_variance * np.eye(train.n)
    L = cholesky_jittered(K)
    Kf = kernel(train.inputs, Xs)
    alpha = linalg.cho_solve((L, True), train.targets)
    V = linalg.solve_triangular(L, Kf, lower=True)
    mean = Kf.T @ alpha
    var = kss - np.sum(V**2, axis=0)
    return PredictiveGaussian(mean, np.maximum(var, 0.0))


@dataclass(frozen=True, eq=False)
class FeatureGPModel:
    """Factorized feature-space system ``A = L L^T``.

    ``whitened_targets`` is ``L^{-1} Phi^T y``; predictions need only one
    triangular solve per batch of test features.
    """

    system_factor: np.ndarray
    projected_targets: np.ndarray
    whitened_targets: np.ndarray
    noise_variance: float
    params: Optional[KernelParams] = None
    feature_map: object = None

    @property
    def dim(self) -> int:
        return self.system_factor.shape[0]


def feature_gpr_fit(features, targets, noise_variance: float, params: Optional[KernelParams] = None,
                    feature_map=None) -> FeatureGPModel:
    Phi = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float).ravel()
    if Phi.ndim != 2 or Phi.shape[0] != y.shape[0]:
        raise InputError("features must be N x D with one row per target")
    if not np.all(np.isfinite(Phi)):
        raise InputError("features contain non-finite values")
    if not noise_variance > 0:
        raise InputError("noise variance must be positive")
    A = Phi.T @ Phi / noise_variance + np.eye(Phi.shape[1])
    L = cholesky_jittered(A)
    proj = Phi.T @ y
    w = linalg.solve_triangular(L, proj, lower=True)
    return FeatureGPModel(L, proj, w, float(noise_variance), params, feature_map)


def feature_gpr_predict(model: FeatureGPModel, test_features) -> PredictiveGaussian:
    F = np.asarray(test_features, dtype=float)
    if F.ndim == 1:
        F = F[None, :]
    if F.shape[1] != model.dim:
        raise InputError(f"test features have width {F.shape[1]}, model expects {model.dim}")
    V = linalg.solve_triangular(model.system_factor, F.T, lower=True)
    mean = V.T @ model.whitened_targets / model.noise_variance
    var = np.sum(V**2, axis=0)
    return PredictiveGaussian(mean, var)


# --- marginal likelihood -------------------------------------------------------


def log_marginal_likelihood(train: Dataset, params: KernelParams, gradient: bool = True):
    """Log evidence and its gradient in ``(log l, log s2, log s2_noise)``.

    Returns ``value`` or ``(value, grad)``.
    """
    sq = squared_distances(train.inputs, train.inputs)
    l2 = params.lengthscale**2
    K = params.kernel_variance * np.exp(-sq / (2 * l2))
    Ky = K + params.noise_variance * np.eye(train.n)
    L = cholesky_jittered(Ky)
    alpha = linalg.cho_solve((L, True), train.targets)
    value = (
        -0.5 * train.targets @ alpha
        - np.sum(np.log(np.diag(L)))
        - 0.5 * train.n * math.log(2 * math.pi)
    )
    if not gradient:
        return float(value)
    Kinv = linalg.cho_solve((L, True), np.eye(train.n))
    W = np.outer(alpha, alpha) - Kinv
    dK_dlogl = K * sq / l2
    grad = 0.5 * np.array([
        np.sum(W * dK_dlogl),
        np.sum(W * K),
        params.noise_variance * np.trace(W),
    ])
    return float(value), grad


@dataclass
class HyperparameterFit:
    params: KernelParams
    log_likelihood: float
    converged: bool
    restarts: list = field(default_factory=list)


def _from_log(theta, fixed_noise=None):
    return KernelParams(
        float(np.exp(theta[0])),
        float(np.exp(theta[1])),
        float(fixed_noise if fixed_noise is not None else np.exp(theta[2])),
    )


def fit_hyperparameters(train: Dataset, init: KernelParams, iters: int = 200, seed=None,
                        fit_noise: bool = True, restart_factors=RESTART_FACTORS,
                        return_info: bool = False):
    """Maximize the log marginal likelihood over the Gaussian kernel parameters.

    Each restart starts from the median-heuristic length scale times one of
    ``restart_factors`` with ``init``'s variances, and runs L-BFGS-B on the
    negative evidence in log-parameter space.  The best restart is returned;
    a ``ConvergenceWarning`` is issued if none of them converged.
    """
    data = train
    if train.n > EXACT_LML_LIMIT:
        rng = np.random.default_rng(seed)
        data = train.subset(rng.choice(train.n, size=EXACT_LML_LIMIT, replace=False))
    scale = median_heuristic(data.inputs, rng=seed) if data.n > 1 else init.lengthscale
    if scale <= 0:
        scale = init.lengthscale
    fixed_noise = None if fit_noise else init.noise_variance

    log_bounds = [
        (math.log(scale * 1e-4), math.log(scale * 1e4)),
        (math.log(1e-8), math.log(1e8)),
        (math.log(1e-8), math.log(1e8)),
    ]
    if not fit_noise:
        log_bounds = log_bounds[:2]

    def objective(theta):
        try:
            value, grad = log_marginal_likelihood(data, _from_log(theta, fixed_noise))
        except Exception:
            return np.inf, np.zeros_like(theta)
        grad = grad if fit_noise else grad[:2]
        return -value, -grad

    restarts = []
    for factor in restart_factors:
        theta0 = [math.log(scale * factor), math.log(init.kernel_variance)]
        if fit_noise:
            theta0.append(math.log(init.noise_variance))
        theta0 = np.clip(theta0, [b[0] for b in log_bounds], [b[1] for b in log_bounds])
        start_value = -objective(theta0)[0]
        res = optimize.minimize(objective, theta0, jac=True, method="L-BFGS-B",
                                bounds=log_bounds, options={"maxiter": iters})
        value = -float(res.fun)
        theta = res.x
        if not value >= start_value:
            value, theta = start_value, theta0
        restarts.append({
            "start": _from_log(theta0, fixed_noise).to_dict(),
            "start_lml": start_value,
            "params": _from_log(theta, fixed_noise).to_dict(),
            "lml": value,
            "converged": bool(res.success),
        })

    best = max(range(len(restarts)), key=lambda i: restarts[i]["lml"])
    info = HyperparameterFit(
        KernelParams(**restarts[best]["params"]),
        restarts[best]["lml"],
        any(r["converged"] for r in restarts),
        restarts,
    )
    if not info.converged:
        warnings.warn("hyperparameter optimization did not converge", ConvergenceWarning)
    return info if return_info else info.params
