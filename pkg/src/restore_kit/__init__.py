"""Brownian-motion restore samplers: standard, minimal and adaptive."""

from .adaptive import AdaptiveConfig, PointMassStore, simulate_adaptive
from .distributions import GaussianReference
from .rates import (
    RateBundle,
    estimate_regen_constant,
    full_rate,
    gaussian_truncation_level,
    partial_rate,
    rate_quantiles,
)
from .restore import (
    RestoreConfig,
    RestoreRun,
    SimulationError,
    estimate_normalizing_constant,
    simulate_minimal_gaussian_demo,
    simulate_standard,
)
from .rwm import RwmConfig, rwm_run, tune_scale
from .targets import (
    Gaussian,
    GaussianMixture2,
    LogGaussianCox,
    LogisticPosterior,
    MultivariateT,
    PumpHierarchical,
    StdGaussian,
    TransformedBeta,
)
from .transform import AffineMap, laplace_approximate, transform_target

__version__ = "0.1.0"
