"""Target distributions with hand-coded energy derivatives.

Every target exposes the unnormalized log density ``log pi~``, the gradient
of the energy ``U = -log pi`` and its Hessian. The Laplacian used by the
partial regeneration rate is the Hessian trace; subclasses override
:meth:`TargetModel.grad_and_laplacian` where a cheaper route exists.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit

__all__ = [
    "TargetModel",
    "Gaussian",
    "StdGaussian",
    "TransformedBeta",
    "MultivariateT",
    "GaussianMixture2",
    "PumpHierarchical",
    "LogGaussianCox",
    "LogisticPosterior",
    "logistic_posterior",
    "PUMP_FAILURES",
    "PUMP_TIMES",
    "LGCP_SEED",
]


class TargetModel:
    """Base class for a target density on R^d.

    Subclasses implement ``log_density``, ``grad_energy`` and
    ``hessian_energy``. Evaluation is pure, so a model may be shared
    between simulations.
    """

    name = "target"

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        self.dim = int(dim)

    def log_density(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad_energy(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian_energy(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def energy(self, x: np.ndarray) -> float:
        """Energy up to the unknown additive constant ``log Z``."""
        return -self.log_density(x)

    def laplacian_energy(self, x: np.ndarray) -> float:
        return float(np.trace(self.hessian_energy(x)))

    def grad_and_laplacian(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        return self.grad_energy(x), self.laplacian_energy(x)

    def grad_and_laplacian_many(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Row-wise gradients ``(n, d)`` and Laplacians ``(n,)`` for states ``xs``."""
        xs = np.asarray(xs, dtype=float).reshape(-1, self.dim)
        grads = np.empty_like(xs)
        laps = np.empty(xs.shape[0])
        for i, x in enumerate(xs):
            g, laps[i] = self.grad_and_laplacian(x)
            grads[i] = g
        return grads, laps

    def check_state(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(
                f"{self.name}: expected a state of shape ({self.dim},), got {x.shape}"
            )
        return x

    def evaluate(self, x) -> tuple[float, np.ndarray, float]:
        """Return ``(log pi~(x), grad U(x), laplacian U(x))``."""
        x = self.check_state(x)
        grad, lap = self.grad_and_laplacian(x)
        return float(self.log_density(x)), grad, float(lap)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class Gaussian(TargetModel):
    """Gaussian target ``exp(log_scale) * exp(-(x-m)' P (x-m) / 2)``.

    ``log_scale`` multiplies the unnormalized density by a constant, which
    is handy for checking normalizing-constant estimators.
    """

    name = "gaussian"

    def __init__(self, mean, cov, log_scale: float = 0.0):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        super().__init__(mean.size)
        if cov.shape != (self.dim, self.dim):
            raise ValueError("covariance shape does not match mean")
        self.mean = mean
        self.cov = cov
        self.precision = np.linalg.inv(cov)
        self.log_scale = float(log_scale)
        self._trace_precision = float(np.trace(self.precision))

    def log_density(self, x):
        r = x - self.mean
        return self.log_scale - 0.5 * float(r @ self.precision @ r)

    def grad_energy(self, x):
        return self.precision @ (x - self.mean)

    def hessian_energy(self, x):
        return self.precision.copy()

    def laplacian_energy(self, x):
        return self._trace_precision

    def grad_and_laplacian_many(self, xs):
        xs = np.asarray(xs, dtype=float).reshape(-1, self.dim)
        return (xs - self.mean) @ self.precision, np.full(xs.shape[0], self._trace_precision)

    @property
    def log_normalizer(self) -> float:
        """``log Z`` for the unnormalized density above."""
        sign, logdet = np.linalg.slogdet(self.cov)
        return self.log_scale + 0.5 * (self.dim * math.log(2 * math.pi) + logdet)


class StdGaussian(Gaussian):
    name = "std_gaussian"

    def __init__(self, d: int = 1, log_scale: float = 0.0):
        super().__init__(np.zeros(d), np.eye(d), log_scale=log_scale)

    def log_density(self, x):
        if self.dim == 1:
            v = float(x[0])
            return self.log_scale - 0.5 * v * v
        return self.log_scale - 0.5 * float(x @ x)

    def grad_energy(self, x):
        return np.array(x, dtype=float)

    def grad_and_laplacian(self, x):
        return np.array(x, dtype=float), float(self.dim)

    def grad_and_laplacian_many(self, xs):
        xs = np.array(xs, dtype=float).reshape(-1, self.dim)
        return xs, np.full(xs.shape[0], float(self.dim))


class TransformedBeta(TargetModel):
    """Logit transform of Beta(2, 2): ``pi(x) = 6 e^{2x} (e^x + 1)^{-4}``.

    The density is normalized, so ``log_density`` is the exact log pdf.
    """

    name = "transformed_beta"

    def __init__(self):
        super().__init__(1)

    def log_density(self, x):
        x0 = float(x[0])
        return math.log(6.0) + 2.0 * x0 - 4.0 * float(np.logaddexp(0.0, x0))

    def grad_energy(self, x):
        return np.array([4.0 * expit(float(x[0])) - 2.0])

    def hessian_energy(self, x):
        s = expit(float(x[0]))
        return np.array([[4.0 * s * (1.0 - s)]])

    def grad_and_laplacian(self, x):
        s = expit(float(x[0]))
        return np.array([4.0 * s - 2.0]), 4.0 * s * (1.0 - s)

    def grad_and_laplacian_many(self, xs):
        s = expit(np.asarray(xs, dtype=float).reshape(-1, 1))
        return 4.0 * s - 2.0, (4.0 * s * (1.0 - s))[:, 0]

    @staticmethod
    def partial_rate_closed_form(x: float) -> float:
        """``(4e^{2x} - 12e^x + 4) / (2 (e^x + 1)^2)``, written in terms of
        ``e^{-|x|}`` so it does not overflow."""
        e = math.exp(-abs(x))
        return (4.0 - 12.0 * e + 4.0 * e * e) / (2.0 * (1.0 + e) ** 2)


class MultivariateT(TargetModel):
    """Multivariate t with ``nu`` degrees of freedom, location ``mean`` and
    scale matrix ``scale``."""

    name = "multivariate_t"

    def __init__(self, nu: float = 10.0, mean=None, scale=None, d: int = 2):
        if mean is not None:
            d = np.atleast_1d(mean).size
        super().__init__(d)
        if nu <= 0:
            raise ValueError("nu must be positive")
        self.nu = float(nu)
        self.mean = np.zeros(d) if mean is None else np.atleast_1d(np.asarray(mean, float))
        self.scale = np.eye(d) if scale is None else np.atleast_2d(np.asarray(scale, float))
        self.precision = np.linalg.inv(self.scale)
        self._c = 0.5 * (self.nu + self.dim)

    def log_density(self, x):
        r = x - self.mean
        q = float(r @ self.precision @ r)
        return -self._c * math.log1p(q / self.nu)

    def grad_energy(self, x):
        pr = self.precision @ (x - self.mean)
        q = float((x - self.mean) @ pr)
        return (2.0 * self._c / (self.nu + q)) * pr

    def hessian_energy(self, x):
        pr = self.precision @ (x - self.mean)
        q = float((x - self.mean) @ pr)
        w = 2.0 * self._c / (self.nu + q)
        return w * self.precision - (2.0 * w / (self.nu + q)) * np.outer(pr, pr)

    def grad_and_laplacian(self, x):
        pr = self.precision @ (x - self.mean)
        q = float((x - self.mean) @ pr)
        w = 2.0 * self._c / (self.nu + q)
        lap = w * float(np.trace(self.precision)) - (2.0 * w / (self.nu + q)) * float(pr @ pr)
        return w * pr, lap

    def grad_and_laplacian_many(self, xs):
        r = np.asarray(xs, dtype=float).reshape(-1, self.dim) - self.mean
        pr = r @ self.precision
        q = np.einsum("ij,ij->i", r, pr)
        w = 2.0 * self._c / (self.nu + q)
        lap = w * float(np.trace(self.precision)) - (2.0 * w / (self.nu + q)) * np.einsum("ij,ij->i", pr, pr)
        return w[:, None] * pr, lap

    @property
    def marginal_variances(self) -> np.ndarray:
        if self.nu <= 2:
            return np.full(self.dim, np.inf)
        return np.diag(self.scale) * self.nu / (self.nu - 2.0)


class GaussianMixture2(TargetModel):
    """Two-component Gaussian mixture, normalized.

    Defaults are the bimodal bivariate example with weights 0.4/0.6 and
    modes at +-(1.05, 1.05).
    """

    name = "gaussian_mixture"

    def __init__(
        self,
        weights=(0.4, 0.6),
        means=((1.05, 1.05), (-1.05, -1.05)),
        covs=(((1.0, -0.1), (-0.1, 1.0)), ((1.0, 0.1), (0.1, 1.0))),
    ):
        means = np.asarray(means, dtype=float)
        covs = np.asarray(covs, dtype=float)
        super().__init__(means.shape[1])
        w = np.asarray(weights, dtype=float)
        if w.shape != (2,) or np.any(w <= 0):
            raise ValueError("need two positive mixture weights")
        self.weights = w / w.sum()
        self.means = means
        self.covs = covs
        self.precisions = np.array([np.linalg.inv(c) for c in covs])
        self._traces = np.trace(self.precisions, axis1=1, axis2=2)
        logdets = np.array([np.linalg.slogdet(c)[1] for c in covs])
        self._log_coef = (
            np.log(self.weights) - 0.5 * logdets - 0.5 * self.dim * math.log(2 * math.pi)
        )

    @property
    def mean(self) -> np.ndarray:
        return self.weights @ self.means

    def _components(self, x):
        r = x - self.means  # (2, d)
        g = -(self.precisions @ r[:, :, None])[:, :, 0]  # grad log N_k
        logs = self._log_coef + 0.5 * (r * g).sum(axis=1)
        top = logs.max()
        w = np.exp(logs - top)
        total = w.sum()
        return top + math.log(total), w / total, g

    def log_density(self, x):
        r = x - self.means
        q = (self.precisions @ r[:, :, None])[:, :, 0]
        logs = self._log_coef - 0.5 * (r * q).sum(axis=1)
        top = logs.max()
        return float(top + math.log(np.exp(logs - top).sum()))

    def grad_energy(self, x):
        _, resp, g = self._components(x)
        return -(resp @ g)

    def hessian_energy(self, x):
        _, resp, g = self._components(x)
        gbar = resp @ g
        h = np.einsum("k,kij->ij", resp, self.precisions)
        h -= np.einsum("k,ki,kj->ij", resp, g, g)
        h += np.outer(gbar, gbar)
        return h

    def grad_and_laplacian(self, x):
        _, resp, g = self._components(x)
        gbar = resp @ g
        lap = float(resp @ self._traces - resp @ (g * g).sum(axis=1) + gbar @ gbar)
        return -gbar, lap

    def grad_and_laplacian_many(self, xs):
        xs = np.asarray(xs, dtype=float).reshape(-1, self.dim)
        r = xs[:, None, :] - self.means  # (n, 2, d)
        g = -np.einsum("kij,nkj->nki", self.precisions, r)
        logs = self._log_coef + 0.5 * (r * g).sum(axis=2)
        w = np.exp(logs - logs.max(axis=1, keepdims=True))
        resp = w / w.sum(axis=1, keepdims=True)
        gbar = np.einsum("nk,nki->ni", resp, g)
        lap = resp @ self._traces - (resp * (g * g).sum(axis=2)).sum(axis=1) + (gbar * gbar).sum(axis=1)
        return -gbar, lap


# Failure counts and observation times (thousands of hours) for ten pumps.
PUMP_FAILURES = np.array([5, 1, 5, 14, 3, 19, 1, 1, 4, 22], dtype=float)
PUMP_TIMES = np.array(
    [94.32, 15.72, 62.88, 125.76, 5.24, 31.44, 1.048, 1.048, 2.096, 10.48]
)


class PumpHierarchical(TargetModel):
    """Pump-failure hierarchical posterior on log scale.

    ``R_i ~ Poisson(lambda_i t_i)``, ``lambda_i ~ Gamma(shape=c1, scale=beta)``,
    ``beta ~ InvGamma(c2, c3)``. The state is ``(log lambda_1..log lambda_10,
    log beta)`` and the log-Jacobian of the exponential map is included.
    """

    name = "pump"

    def __init__(self, failures=PUMP_FAILURES, times=PUMP_TIMES,
                 c1: float = 1.802, c2: float = 2.01, c3: float = 1.01):
        self.failures = np.asarray(failures, dtype=float)
        self.times = np.asarray(times, dtype=float)
        if self.failures.shape != self.times.shape:
            raise ValueError("failures and times must have equal length")
        self.n_pumps = self.failures.size
        super().__init__(self.n_pumps + 1)
        self.c1, self.c2, self.c3 = float(c1), float(c2), float(c3)

    def log_density(self, x):
        lam, b = x[:-1], float(x[-1])
        e = np.exp(lam)
        return float(
            (self.failures + self.c1) @ lam
            - self.times @ e
            - np.exp(lam - b).sum()
            - (self.n_pumps * self.c1 + self.c2) * b
            - self.c3 * math.exp(-b)
        )

    def grad_energy(self, x):
        lam, b = x[:-1], float(x[-1])
        ratio = np.exp(lam - b)
        g = np.empty(self.dim)
        g[:-1] = -(self.failures + self.c1) + self.times * np.exp(lam) + ratio
        g[-1] = -ratio.sum() + self.n_pumps * self.c1 + self.c2 - self.c3 * math.exp(-b)
        return g

    def hessian_energy(self, x):
        lam, b = x[:-1], float(x[-1])
        ratio = np.exp(lam - b)
        h = np.zeros((self.dim, self.dim))
        h[np.arange(self.n_pumps), np.arange(self.n_pumps)] = self.times * np.exp(lam) + ratio
        h[:-1, -1] = -ratio
        h[-1, :-1] = -ratio
        h[-1, -1] = ratio.sum() + self.c3 * math.exp(-b)
        return h

    def grad_and_laplacian(self, x):
        lam, b = x[:-1], float(x[-1])
        ratio = np.exp(lam - b)
        te = self.times * np.exp(lam)
        tail = self.c3 * math.exp(-b)
        g = np.empty(self.dim)
        g[:-1] = -(self.failures + self.c1) + te + ratio
        rs = float(ratio.sum())
        g[-1] = -rs + self.n_pumps * self.c1 + self.c2 - tail
        return g, float(te.sum()) + 2.0 * rs + tail

    def grad_and_laplacian_many(self, xs):
        xs = np.asarray(xs, dtype=float).reshape(-1, self.dim)
        lam, b = xs[:, :-1], xs[:, -1]
        ratio = np.exp(lam - b[:, None])
        te = self.times * np.exp(lam)
        tail = self.c3 * np.exp(-b)
        rs = ratio.sum(axis=1)
        g = np.empty_like(xs)
        g[:, :-1] = -(self.failures + self.c1) + te + ratio
        g[:, -1] = -rs + self.n_pumps * self.c1 + self.c2 - tail
        return g, te.sum(axis=1) + 2.0 * rs + tail


LGCP_SEED = 20220501


def lgcp_covariance(n: int) -> np.ndarray:
    """``exp(-dist / n)`` between cell indices of an n x n grid."""
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    cells = np.column_stack([ii.ravel(), jj.ravel()]).astype(float)
    dist = np.sqrt(((cells[:, None, :] - cells[None, :, :]) ** 2).sum(-1))
    return np.exp(-dist / n)


class LogGaussianCox(TargetModel):
    """Log-Gaussian Cox process posterior on an n x n grid.

    Counts default to a draw from the prior with the fixed seed
    :data:`LGCP_SEED`.
    """

    name = "lgcp"

    def __init__(self, n: int = 5, counts=None, seed: int = LGCP_SEED):
        super().__init__(n * n)
        self.n = int(n)
        self.cov = lgcp_covariance(self.n)
        self.precision = np.linalg.inv(self.cov)
        self._trace_precision = float(np.trace(self.precision))
        self._area = float(self.n ** 2)
        if counts is None:
            counts = self.simulate_counts(self.n, seed)
        self.counts = np.asarray(counts, dtype=float).ravel()
        if self.counts.size != self.dim:
            raise ValueError(f"expected {self.dim} counts, got {self.counts.size}")

    @staticmethod
    def simulate_counts(n: int, seed: int = LGCP_SEED) -> np.ndarray:
        rng = np.random.default_rng(seed)
        cov = lgcp_covariance(n)
        field = rng.multivariate_normal(np.zeros(n * n), cov)
        return rng.poisson(n * n * np.exp(field)).astype(float)

    def log_density(self, x):
        return float(
            self.counts @ x - self._area * np.exp(x).sum() - 0.5 * x @ self.precision @ x
        )

    def grad_energy(self, x):
        return -self.counts + self._area * np.exp(x) + self.precision @ x

    def hessian_energy(self, x):
        return self.precision + np.diag(self._area * np.exp(x))

    def grad_and_laplacian(self, x):
        e = self._area * np.exp(x)
        return -self.counts + e + self.precision @ x, self._trace_precision + float(e.sum())

    def grad_and_laplacian_many(self, xs):
        xs = np.asarray(xs, dtype=float).reshape(-1, self.dim)
        e = self._area * np.exp(xs)
        return -self.counts + e + xs @ self.precision, self._trace_precision + e.sum(axis=1)


class LogisticPosterior(TargetModel):
    """Logistic regression posterior with an isotropic Gaussian prior.

    ``log pi~(b) = -sum_i log(1 + exp(-y_i b.x_i)) - |b|^2 / (2 prior_var)``
    """

    name = "logistic"

    def __init__(self, predictors, responses, prior_var: float = 400.0):
        X = np.asarray(predictors, dtype=float)
        y = np.asarray(responses, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("predictors must be n x d and responses length n")
        if prior_var <= 0:
            raise ValueError("prior_var must be positive")
        super().__init__(X.shape[1])
        self.X = X
        self.y = y
        self._yX = y[:, None] * X
        self._row_sq = np.einsum("ij,ij->i", X, X)
        self.prior_var = float(prior_var)

    def log_density(self, beta):
        z = self._yX @ beta
        return float(-np.logaddexp(0.0, -z).sum() - beta @ beta / (2 * self.prior_var))

    def grad_energy(self, beta):
        z = self._yX @ beta
        return -self._yX.T @ expit(-z) + beta / self.prior_var

    def _weights(self, beta):
        s = expit(self.X @ beta)
        return s * (1.0 - s)

    def hessian_energy(self, beta):
        w = self._weights(beta)
        return (self.X.T * w) @ self.X + np.eye(self.dim) / self.prior_var

    def grad_and_laplacian(self, beta):
        z = self._yX @ beta
        s = expit(z)
        grad = -self._yX.T @ (1.0 - s) + beta / self.prior_var
        w = s * (1.0 - s)
        lap = float(w @ self._row_sq) + self.dim / self.prior_var
        return grad, lap

    def grad_and_laplacian_many(self, xs):
        xs = np.asarray(xs, dtype=float).reshape(-1, self.dim)
        s = expit(xs @ self._yX.T)  # (n, rows)
        grads = -(1.0 - s) @ self._yX + xs / self.prior_var
        return grads, (s * (1.0 - s)) @ self._row_sq + self.dim / self.prior_var

    def basis_grad_and_laplacian(self, factor):
        """Evaluator of ``(grad U(x), trace(L' H(x) L))`` for a fixed ``L``.

        Used by the pre-transform; the row norms of ``X L`` are computed once.
        """
        row_sq = np.einsum("ij,ij->i", self.X @ factor, self.X @ factor)
        prior_term = float((factor * factor).sum()) / self.prior_var
        yX, inv_var = self._yX, 1.0 / self.prior_var

        def evaluate(beta):
            s = expit(yX @ beta)
            grad = -yX.T @ (1.0 - s) + beta * inv_var
            return grad, float((s * (1.0 - s)) @ row_sq) + prior_term

        return evaluate


def logistic_posterior(data, prior_var: float = 400.0) -> LogisticPosterior:
    """Posterior over regression coefficients for a prepared dataset."""
    return LogisticPosterior(data.predictors, data.responses, prior_var=prior_var)
