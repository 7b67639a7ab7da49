"""Evaluation functionals: per-point Gaussian KL divergence and RMSE."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

REFERENCE_FIRST = "ref||approx"
APPROX_FIRST = "approx||ref"
KL_DIRECTIONS = (REFERENCE_FIRST, APPROX_FIRST)


def _kl(p_mean, p_var, q_mean, q_var):
    return 0.5 * (np.log(q_var / p_var) + (p_var + (p_mean - q_mean) ** 2) / q_var - 1.0)


def kl_gaussian(ref_mean, ref_var, approx_mean, approx_var, direction: str = REFERENCE_FIRST):
    """KL divergence between univariate Gaussians, elementwise.

    With the default direction the reference distribution ``p`` comes first::

        KL(p || q) = 0.5 * [log(q_var / p_var) + (p_var + (p_mean - q_mean)**2) / q_var - 1]

    Returns a float for scalar input and an array otherwise.
    """
    arrays = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in
                                   (ref_mean, ref_var, approx_mean, approx_var)))
    pm, pv, qm, qv = arrays
    if np.any(~(pv > 0)) or np.any(~(qv > 0)):
        raise InputError("variances must be positive for the KL divergence")
    if direction == REFERENCE_FIRST:
        out = _kl(pm, pv, qm, qv)
    elif direction == APPROX_FIRST:
        out = _kl(qm, qv, pm, pv)
    else:
        raise InputError(f"unknown KL direction {direction!r}; expected one of {KL_DIRECTIONS}")
    # rounding can leave tiny negatives
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def rmse(predictions, targets) -> float:
    predictions = np.asarray(predictions, dtype=float).ravel()
    targets = np.asarray(targets, dtype=float).ravel()
    if predictions.size == 0:
        raise InputError("rmse of an empty set is undefined")
    if predictions.shape != targets.shape:
        raise InputError(f"length mismatch: {predictions.size} predictions, {targets.size} targets")
    return float(np.sqrt(np.mean((predictions - targets) ** 2)))


@dataclass
class EvalReport:
    """Approximation quality of one run against the reference GP."""

    mean_kl: float
    sum_kl: float
    rmse: float
    per_point_kl: np.ndarray
    config_echo: dict = field(default_factory=dict)

    @classmethod
    def from_predictions(cls, ref_mean, ref_var, approx_mean, approx_var, targets,
                         direction: str = REFERENCE_FIRST, config_echo=None) -> "EvalReport":
        kl = np.atleast_1d(kl_gaussian(ref_mean, ref_var, approx_mean, approx_var, direction))
        return cls(float(np.mean(kl)), float(np.sum(kl)), rmse(approx_mean, targets), kl,
                   dict(config_echo or {}))

    def to_dict(self) -> dict:
        return {
            "mean_kl": self.mean_kl,
            "sum_kl": self.sum_kl,
            "rmse": self.rmse,
            "per_point_kl": [float(v) for v in self.per_point_kl],
            "config_echo": self.config_echo,
        }
