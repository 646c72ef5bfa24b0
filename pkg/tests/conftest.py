import numpy as np
import pytest

from restore_kit.data import prepare_logistic_dataset, synthetic_logistic_dataset
from restore_kit.targets import (
    Gaussian,
    GaussianMixture2,
    LogGaussianCox,
    MultivariateT,
    PumpHierarchical,
    StdGaussian,
    TransformedBeta,
    logistic_posterior,
)


def small_logistic():
    X, y = synthetic_logistic_dataset(n=120, n_predictors=3, seed=5)
    return logistic_posterior(prepare_logistic_dataset(X, y))


def all_targets():
    return {
        "std_gaussian_1": StdGaussian(1),
        "std_gaussian_3": StdGaussian(3),
        "gaussian": Gaussian([0.5, -1.0], [[2.0, 0.3], [0.3, 0.5]]),
        "transformed_beta": TransformedBeta(),
        "multivariate_t": MultivariateT(nu=10, d=2),
        "gaussian_mixture": GaussianMixture2(),
        "pump": PumpHierarchical(),
        "lgcp": LogGaussianCox(n=3),
        "logistic": small_logistic(),
    }


def typical_states(target, rng, n):
    """States where the target has reasonable mass (pump lives near its mode)."""
    if target.name == "pump":
        centre = np.append(np.log(np.array([0.06, 0.1, 0.09, 0.12, 0.6, 0.6, 0.9, 0.9, 1.6, 2.0])), 0.0)
        return centre + 0.3 * rng.standard_normal((n, target.dim))
    return rng.standard_normal((n, target.dim))


@pytest.fixture(params=list(all_targets()))
def target(request):
    return all_targets()[request.param]
