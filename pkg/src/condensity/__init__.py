"""Conditional density estimation through a single kernel-target regression."""

from .errors import CondensityError, DegenerateTarget, Exhausted, TooFewSamples, WidthMismatch
from .estimator import (
    DensityCurve,
    FitConfig,
    FittedEstimator,
    IseReport,
    density_quantile,
    density_summaries,
    fit,
    grid_search,
    ise,
    predict_density,
    predict_raw,
    to_original_units,
    trapezoid,
)
from .kernel import kernel_eval, kernel_mass
from .regress import KnnConfig, MlpConfig, TreeConfig
from .synthetic import MechanismSpec, mechanism, sample, true_density
from .transform import RawDataset

__version__ = "0.1.0"
