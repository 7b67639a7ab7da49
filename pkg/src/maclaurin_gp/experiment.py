"""Experiment pipeline: reference GP, approximate methods, reports on disk.

A run is described by a flat :class:`RunConfig`.  Replicate ``r`` uses seed
``seed + r`` both to draw synthetic data and to sample random features; a
CSV source is split once with ``split_seed``.  Every replicate fits the
exact reference GP, runs the configured approximation with the reference
hyperparameters and is scored by per-point KL and RMSE.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import platform
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
import scipy

from .data import GENERATORS, SincSpec, generate_2d, generate_sinc, load_csv, train_test_split
from .errors import InputError
from .gpr import (
    Dataset,
    PredictiveGaussian,
    exact_gpr_predict,
    feature_gpr_fit,
    feature_gpr_predict,
    fit_hyperparameters,
)
from .kernels import KernelParams, median_heuristic
from .localized import FeatureConfig, build_feature_map, fit_localized, predict_localized, predict_pointwise
from .metrics import KL_DIRECTIONS, REFERENCE_FIRST, EvalReport
from .rff import apply_rff, sample_rff
from .sketches import SketchKind

METHODS = ("exact", "rff", "rff-orthogonal", "maclaurin-explicit", "maclaurin-vanilla",
           "maclaurin-localized")
LOCALIZATION_MODES = ("cluster", "pointwise")


@dataclass
class RunConfig:
    """Flat run description; mirrors the JSON config file key for key.

    ``data`` is ``"sinc"``, ``"ridges"``, ``"smooth"`` or a CSV path.
    ``theta`` is the clustering threshold as a multiple of the fitted length
    scale; ``None`` means a single cluster.  ``hyperparameters`` is
    ``"fit"`` or a mapping with ``lengthscale``, ``kernel_variance`` and
    ``noise_variance``.
    """

    data: str = "sinc"
    method: str = "maclaurin-localized"
    features: int = 10
    degree: Optional[int] = None
    max_degree: int = 10
    kind: str = "tensorsrht"
    contiguous_degrees: bool = True
    theta: Optional[float] = None
    localization: str = "cluster"
    hyperparameters: Union[str, dict] = "fit"
    fit_noise: bool = True
    seeds: int = 1
    seed: int = 0
    out: Optional[str] = None
    kl_direction: str = REFERENCE_FIRST
    kl_variance: str = "function"
    variance_floor: float = 1e-12
    n_pairs: int = 100
    # synthetic sources
    n_points: int = 50
    noise_variance: float = 0.01
    n_test: int = 200
    sinc_normalized: bool = True
    # CSV sources
    target: Union[str, int] = -1
    standardize: bool = True
    train_fraction: float = 0.8
    split_seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.method not in METHODS:
            raise InputError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if int(self.features) != self.features or self.features < 1:
            raise InputError("features (D) must be a positive integer")
        if self.method.startswith("rff") and self.features % 2:
            raise InputError("random Fourier features need an even D")
        if self.seeds < 1:
            raise InputError("seeds must be at least 1")
        if self.localization not in LOCALIZATION_MODES:
            raise InputError(f"localization must be one of {LOCALIZATION_MODES}")
        if self.theta is not None and not self.theta > 0:
            raise InputError("theta must be positive (or null for a single cluster)")
        if self.method == "maclaurin-localized" and self.localization == "cluster" and self.theta is None:
            raise InputError("maclaurin-localized with cluster localization needs theta")
        if self.degree is not None and self.degree < 0:
            raise InputError("degree must be nonnegative")
        if self.kl_variance not in ("function", "observation"):
            raise InputError('kl_variance must be "function" or "observation"')
        if self.kl_direction not in KL_DIRECTIONS:
            raise InputError(f"kl_direction must be one of {KL_DIRECTIONS}")
        SketchKind.parse(self.kind)
        if isinstance(self.hyperparameters, str):
            if self.hyperparameters != "fit":
                raise InputError('hyperparameters must be "fit" or an object')
        else:
            KernelParams(**self.hyperparameters)
        if self.data not in ("sinc",) + tuple(GENERATORS) and not str(self.data).endswith(".csv") \
                and not os.path.exists(str(self.data)):
            raise InputError(f"data source {self.data!r} is neither a generator nor an existing file")

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        if not isinstance(obj, dict):
            raise InputError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise InputError(f"unknown config keys: {unknown}")
        try:
            return cls(**obj)
        except TypeError as err:
            raise InputError(str(err)) from None

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                obj = json.load(fh)
        except FileNotFoundError:
            raise InputError(f"no such config file: {path}") from None
        except json.JSONDecodeError as err:
            raise InputError(f"{path}: invalid JSON ({err})") from None
        return cls.from_dict(obj)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# --- data -------------------------------------------------------------------


def _is_generator(config: RunConfig) -> bool:
    return config.data == "sinc" or config.data in GENERATORS


def replicate_data(config: RunConfig, seed: int):
    """Train and test sets for one replicate."""
    if config.data == "sinc":
        spec = SincSpec(n_points=config.n_points, noise_variance=config.noise_variance,
                        normalized=config.sinc_normalized)
        rng = np.random.default_rng(seed)
        train = generate_sinc(spec, rng)
        # evaluation grid over the sampling interval
        xs = np.linspace(*spec.interval, config.n_test)
        ys = spec.target(xs) + rng.normal(0.0, math.sqrt(spec.noise_variance), size=xs.size)
        return train, Dataset(xs[:, None], ys)
    if config.data in GENERATORS:
        rng = np.random.default_rng(seed)
        train = generate_2d(config.data, config.n_points, rng, config.noise_variance)
        test = generate_2d(config.data, config.n_test, rng, config.noise_variance)
        return train, test
    table = load_csv(config.data, config.target, config.standardize)
    return train_test_split(table.dataset, config.train_fraction, config.split_seed)


def fit_reference(train: Dataset, config: RunConfig, seed=None) -> KernelParams:
    """Reference hyperparameters: fixed from the config or fitted by evidence maximization."""
    if not isinstance(config.hyperparameters, str):
        return KernelParams(**config.hyperparameters)
    var_y = float(np.var(train.targets)) or 1.0
    noise = config.noise_variance if _is_generator(config) else 0.1 * var_y
    init = KernelParams(median_heuristic(train.inputs, rng=seed), var_y, noise)
    return fit_hyperparameters(train, init, seed=seed, fit_noise=config.fit_noise)


# --- methods ----------------------------------------------------------------


def _feature_config(config: RunConfig, dim: int, seed: int) -> FeatureConfig:
    explicit = True if config.method == "maclaurin-explicit" else None
    degree = config.degree
    if explicit and degree is None and dim > 1:
        raise InputError("maclaurin-explicit in d > 1 needs a degree")
    return FeatureConfig(features=config.features, kind=SketchKind.parse(config.kind),
                         max_degree=config.max_degree, seed=seed, n_pairs=config.n_pairs,
                         explicit=explicit, degree=degree,
                         contiguous=config.contiguous_degrees)


def run_method(config: RunConfig, train: Dataset, test_inputs, params: KernelParams, seed: int):
    """Approximate predictive distribution plus method diagnostics."""
    method = config.method
    if method == "exact":
        return exact_gpr_predict(train, test_inputs, params), {}
    if method.startswith("rff"):
        fmap = sample_rff(train.dim, config.features, params,
                          structured=method == "rff-orthogonal", seed=seed)
        model = feature_gpr_fit(apply_rff(fmap, train.inputs), train.targets, params.noise_variance)
        return feature_gpr_predict(model, apply_rff(fmap, test_inputs)), {"feature_dim": fmap.total_dim}

    fconf = _feature_config(config, train.dim, seed)
    fmap, alloc = build_feature_map(train, params, fconf)
    diag = {"feature_dim": fmap.total_dim}
    if alloc is not None:
        diag["optimal_degree"] = alloc.optimal_degree
        diag["allocation"] = list(alloc.allocation)
    if method == "maclaurin-localized" and config.localization == "pointwise":
        diag["n_clusters"] = None
        return predict_pointwise(train, params, fmap, test_inputs), diag
    if method == "maclaurin-vanilla" or config.theta is None:
        theta = math.inf
    else:
        theta = config.theta * params.lengthscale
    model = fit_localized(train, params, fconf, theta, feature_map=fmap)
    diag["n_clusters"] = model.n_clusters
    return predict_localized(model, test_inputs), diag


# --- runs -------------------------------------------------------------------


@dataclass
class ReplicateResult:
    seed: int
    params: KernelParams
    report: EvalReport
    reference: PredictiveGaussian
    approximation: PredictiveGaussian
    test: Dataset
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = self.report.to_dict()
        out.update(seed=self.seed, params=self.params.to_dict(), diagnostics=self.diagnostics)
        return out


def _quantiles(values):
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"median": float(med), "iqr": float(q3 - q1), "min": float(v.min()), "max": float(v.max())}


@dataclass
class ExperimentResult:
    config: RunConfig
    replicates: list

    @property
    def median_kl(self) -> float:
        return float(np.median([r.report.mean_kl for r in self.replicates]))

    @property
    def median_rmse(self) -> float:
        return float(np.median([r.report.rmse for r in self.replicates]))

    def summary(self) -> dict:
        out = {
            "mean_kl": _quantiles([r.report.mean_kl for r in self.replicates]),
            "sum_kl": _quantiles([r.report.sum_kl for r in self.replicates]),
            "rmse": _quantiles([r.report.rmse for r in self.replicates]),
            "lengthscale": _quantiles([r.params.lengthscale for r in self.replicates]),
        }
        clusters = [r.diagnostics.get("n_clusters") for r in self.replicates]
        if all(c is not None for c in clusters):
            out["n_clusters"] = _quantiles(clusters)
        return out

    def to_dict(self) -> dict:
        return {
            "method": self.config.method,
            "seeds": [r.seed for r in self.replicates],
            "summary": self.summary(),
            "replicates": [r.to_dict() for r in self.replicates],
        }


def run_replicate(config: RunConfig, seed: int, data=None, params=None) -> ReplicateResult:
    train, test = data if data is not None else replicate_data(config, seed)
    if params is None:
        params = fit_reference(train, config, seed)
    ref = exact_gpr_predict(train, test.inputs, params)
    approx, diag = run_method(config, train, test.inputs, params, seed)
    # approximate variances can collapse to zero far from a center
    floor = config.variance_floor
    extra = params.noise_variance if config.kl_variance == "observation" else 0.0
    report = EvalReport.from_predictions(
        ref.mean, np.maximum(ref.variance + extra, floor),
        approx.mean, np.maximum(approx.variance + extra, floor),
        test.targets, config.kl_direction, config.to_dict(),
    )
    return ReplicateResult(seed, params, report, ref, approx, test, diag)


def run_experiment(config: RunConfig, out: Optional[str] = None) -> ExperimentResult:
    """Run every replicate and, if an output directory is given, write artifacts.

    Artifacts are ``report.json`` (per-replicate reports plus the median and
    interquartile range over replicates), ``predictions.csv`` for the first
    replicate (``predictions_<seed>.csv`` for the others) and
    ``manifest.json`` with the config, seeds and library versions.
    """
    out = out if out is not None else config.out
    cached = None
    replicates = []
    for r in range(config.seeds):
        seed = config.seed + r
        try:
            if _is_generator(config):
                rep = run_replicate(config, seed)
            else:
                if cached is None:
                    data = replicate_data(config, seed)
                    cached = (data, fit_reference(data[0], config, config.split_seed))
                rep = run_replicate(config, seed, *cached)
        except (InputError, ArithmeticError) as err:
            raise type(err)(f"[{config.method}, seed {seed}] {err}") from err
        replicates.append(rep)
    result = ExperimentResult(config, replicates)
    if out:
        write_artifacts(result, out)
    return result


def _versions() -> dict:
    from . import __version__
    return {"package": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def write_predictions(path, rep: ReplicateResult) -> None:
    X = rep.test.inputs
    names = ["x"] if X.shape[1] == 1 else [f"x{i + 1}" for i in range(X.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["ref_mean", "ref_var", "approx_mean", "approx_var", "target", "kl"])
        for i in range(X.shape[0]):
            row = list(X[i]) + [rep.reference.mean[i], rep.reference.variance[i],
                                 rep.approximation.mean[i], rep.approximation.variance[i],
                                 rep.test.targets[i], rep.report.per_point_kl[i]]
            w.writerow([repr(float(v)) for v in row])


def write_artifacts(result: ExperimentResult, out) -> None:
    os.makedirs(out, exist_ok=True)
    report = result.to_dict()
    report["config_echo"] = result.config.to_dict()
    with open(os.path.join(out, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    for k, rep in enumerate(result.replicates):
        name = "predictions.csv" if k == 0 else f"predictions_{rep.seed}.csv"
        write_predictions(os.path.join(out, name), rep)
    manifest = {
        "config": result.config.to_dict(),
        "seeds": [r.seed for r in result.replicates],
        "reference_params": [r.params.to_dict() for r in result.replicates],
        "versions": _versions(),
    }
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)


SWEEP_COLUMNS = ("value", "median_mean_kl", "iqr_mean_kl", "median_rmse", "median_clusters")


def sweep(config: RunConfig, param: str, values, out: Optional[str] = None):
    """Run ``config`` once per value of ``param``; returns ``[(value, ExperimentResult)]``.

    With an output directory each run goes to ``<out>/<param>=<value>`` and a
    ``sweep.csv`` summary is written next to them.
    """
    if param not in {f.name for f in dataclasses.fields(RunConfig)}:
        raise InputError(f"cannot sweep unknown config key {param!r}")
    out = out if out is not None else config.out
    results = []
    for v in values:
        sub = config.replace(**{param: v, "out": None})
        sub.validate()
        run_dir = os.path.join(out, f"{param}={v}") if out else None
        results.append((v, run_experiment(sub, run_dir)))
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "sweep.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow((param,) + SWEEP_COLUMNS[1:])
            for v, res in results:
                s = res.summary()
                clusters = s.get("n_clusters", {}).get("median", "")
                w.writerow([v, s["mean_kl"]["median"], s["mean_kl"]["iqr"], s["rmse"]["median"], clusters])
    return results
