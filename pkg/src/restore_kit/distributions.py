"""Regeneration distributions: a log-density evaluator plus a sampler."""

from __future__ import annotations

import math

import numpy as np


class GaussianReference:
    """Multivariate normal ``N(mean, cov)`` used as a regeneration law."""

    def __init__(self, mean, cov):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        d = self.mean.size
        cov = np.asarray(cov, dtype=float)
        if cov.ndim == 0:
            cov = float(cov) * np.eye(d)
        elif cov.ndim == 1:
            cov = np.diag(cov)
        if cov.shape != (d, d):
            raise ValueError("covariance shape does not match mean")
        self.cov = cov
        self.dim = d
        self.chol = np.linalg.cholesky(cov)
        self._inv_chol = np.linalg.inv(self.chol)
        self._log_norm = -0.5 * d * math.log(2 * math.pi) - float(np.log(np.diag(self.chol)).sum())
        self._diag = np.allclose(cov, np.diag(np.diag(cov)))
        self._inv_sd = 1.0 / np.sqrt(np.diag(cov))
        self._scalar = (float(self.mean[0]), float(self._inv_sd[0])) if d == 1 else None

    @classmethod
    def isotropic(cls, d: int, var: float = 1.0, mean=0.0):
        return cls(np.broadcast_to(np.asarray(mean, float), (d,)).copy(), var * np.eye(d))

    def logpdf(self, x) -> float:
        if self._scalar is not None:
            z = (float(x[0]) - self._scalar[0]) * self._scalar[1]
            return self._log_norm - 0.5 * z * z
        r = np.asarray(x, dtype=float) - self.mean
        z = r * self._inv_sd if self._diag else self._inv_chol @ r
        return self._log_norm - 0.5 * float(z @ z)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.mean + self.chol @ rng.standard_normal(self.dim)

    def __repr__(self):
        return f"GaussianReference(mean={self.mean.tolist()}, cov={self.cov.tolist()})"
