"""Datasets for the experiment harness: synthetic generators, CSV I/O and splits."""
from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InputError
from .gpr import Dataset


def sinc(z, normalized: bool = True):
    """``sin(pi z) / (pi z)`` (or ``sin(z) / z``) with ``sinc(0) = 1``."""
    z = np.asarray(z, dtype=float)
    if normalized:
        return np.sinc(z)
    return np.sinc(z / np.pi)


@dataclass(frozen=True)
class SincSpec:
    n_points: int = 50
    interval: tuple = (-1.5, 1.5)
    noise_variance: float = 0.01
    frequency: float = 5.0
    normalized: bool = True

    def __post_init__(self):
        if self.n_points < 1:
            raise InputError("n_points must be positive")
        lo, hi = self.interval
        if not hi > lo:
            raise InputError(f"empty interval {self.interval}")
        if self.noise_variance < 0:
            raise InputError("noise variance must be nonnegative")

    def target(self, x):
        return sinc(self.frequency * np.asarray(x, dtype=float), self.normalized)


def generate_sinc(spec: SincSpec = SincSpec(), rng=None) -> Dataset:
    """``y = sinc(5 x) + eps`` with ``x`` uniform on the interval."""
    rng = np.random.default_rng(rng)
    lo, hi = spec.interval
    x = rng.uniform(lo, hi, size=spec.n_points)
    noise = rng.normal(0.0, math.sqrt(spec.noise_variance), size=spec.n_points)
    return Dataset(x[:, None], spec.target(x) + noise)


# 2-D synthetic sets. The ridge directions and widths are fixed so that a
# seed only changes the sample, not the function.
_RIDGE_ANGLES = (0.3, 1.4, 2.4)
_RIDGE_FREQUENCY = 4.0


def ridge_function(X):
    """Sum of sinc ridges: high-frequency structure along three directions."""
    X = np.asarray(X, dtype=float)
    out = np.zeros(X.shape[0])
    for a in _RIDGE_ANGLES:
        w = np.array([math.cos(a), math.sin(a)])
        out += np.sinc(_RIDGE_FREQUENCY * (X @ w))
    return out


def smooth_function(X):
    X = np.asarray(X, dtype=float)
    return np.sin(X[:, 0]) + 0.5 * np.cos(0.8 * X[:, 1])


GENERATORS = {
    "ridges": ridge_function,
    "smooth": smooth_function,
}


def generate_2d(name: str, n_points: int, rng=None, noise_variance: float = 0.01,
                extent: float = 1.5) -> Dataset:
    """Uniform inputs on ``[-extent, extent]^2`` with a named target function."""
    if name not in GENERATORS:
        raise InputError(f"unknown generator {name!r}; expected one of {sorted(GENERATORS)}")
    if n_points < 1:
        raise InputError("n_points must be positive")
    rng = np.random.default_rng(rng)
    X = rng.uniform(-extent, extent, size=(n_points, 2))
    y = GENERATORS[name](X) + rng.normal(0.0, math.sqrt(noise_variance), size=n_points)
    return Dataset(X, y)


# --- CSV --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Standardization:
    """Per-column affine map ``z = (x - mean) / scale``."""

    mean: np.ndarray
    scale: np.ndarray

    def apply(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def invert(self, Z):
        return np.asarray(Z, dtype=float) * self.scale + self.mean

    @classmethod
    def fit(cls, X) -> "Standardization":
        X = np.asarray(X, dtype=float)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        if np.any(scale == 0):
            warnings.warn("constant input column left unscaled", UserWarning)
            scale = np.where(scale == 0, 1.0, scale)
        return cls(mean, scale)


@dataclass(frozen=True, eq=False)
class TabularData:
    dataset: Dataset
    feature_names: tuple
    target_name: str
    scaling: Optional[Standardization] = None


def load_csv(path, target_column: Union[str, int] = -1, standardize: bool = False) -> TabularData:
    """Read a headered, comma-separated numeric file.

    ``target_column`` is a header name or a (possibly negative) column index;
    every other column is an input.  With ``standardize`` the inputs are
    shifted and scaled to zero mean and unit variance per column and the
    transform is kept in ``scaling``.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise InputError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                bad = next(c for c in row if not _is_float(c))
                raise InputError(f"{path}:{lineno}: non-numeric cell {bad!r}") from None
    if not rows:
        raise InputError(f"{path}: no data rows")
    if len(header) < 2:
        raise InputError(f"{path}: need at least one input column and a target column")
    if isinstance(target_column, str) and not _is_int(target_column):
        if target_column not in header:
            raise InputError(f"{path}: target column {target_column!r} not in header {header}")
        t = header.index(target_column)
    else:
        t = int(target_column)
        if not -len(header) <= t < len(header):
            raise InputError(f"{path}: target column index {t} out of range")
        t %= len(header)
    table = np.array(rows)
    inputs = np.delete(table, t, axis=1)
    scaling = None
    if standardize:
        scaling = Standardization.fit(inputs)
        inputs = scaling.apply(inputs)
    names = tuple(h for i, h in enumerate(header) if i != t)
    return TabularData(Dataset(inputs, table[:, t]), names, header[t], scaling)


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def _is_int(s):
    try:
        int(s)
        return True
    except ValueError:
        return False


def save_csv(path, dataset: Dataset, feature_names: Optional[Sequence[str]] = None,
             target_name: str = "y") -> None:
    """Write ``dataset`` with a header; floats are written with full precision."""
    names = list(feature_names) if feature_names is not None else (
        ["x"] if dataset.dim == 1 else [f"x{i + 1}" for i in range(dataset.dim)])
    if len(names) != dataset.dim:
        raise InputError("feature_names length does not match input dimension")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + [target_name])
        for x, y in zip(dataset.inputs, dataset.targets):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def train_test_split(data: Dataset, train_fraction: float = 0.8, rng=None):
    """Random split; both parts are non-empty."""
    if not 0 < train_fraction < 1:
        raise InputError("train_fraction must lie strictly between 0 and 1")
    if data.n < 2:
        raise InputError("need at least two points to split")
    rng = np.random.default_rng(rng)
    perm = rng.permutation(data.n)
    n_train = min(max(int(round(train_fraction * data.n)), 1), data.n - 1)
    return data.subset(np.sort(perm[:n_train])), data.subset(np.sort(perm[n_train:]))
