"""Gaussian process regression with localized truncated-Maclaurin feature maps."""
from .errors import CapacityError, InputError, NumericalError
from .kernels import (
    KernelParams,
    gaussian_gram,
    gaussian_kernel,
    localized_truncated_kernel,
    median_heuristic,
    truncated_maclaurin_kernel,
)
from .sketches import PolynomialSketch, SketchKind, apply_sketch, fwht, sample_sketch, sketch_variance
from .maclaurin import (
    AllocationResult,
    MaclaurinFeatureMap,
    build_explicit_map,
    build_random_map,
    featurize,
    optimize_allocation,
)
from .rff import FourierFeatureMap, apply_rff, sample_rff
from .gpr import (
    Dataset,
    FeatureGPModel,
    PredictiveGaussian,
    exact_gpr_predict,
    feature_gpr_fit,
    feature_gpr_predict,
    fit_hyperparameters,
    log_marginal_likelihood,
)
from .localized import (
    CentroidSet,
    FeatureConfig,
    LocalizedModel,
    farthest_point_clustering,
    fit_localized,
    predict_localized,
)
from .metrics import EvalReport, kl_gaussian, rmse

__version__ = "0.1.0"
