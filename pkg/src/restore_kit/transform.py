"""Laplace-approximation pre-transformation.

A target is rewritten in coordinates ``x' = L^{-1}(x - m)`` where ``m`` is
the mode and ``L L' = H(m)^{-1}``, so that the transformed target is close
to a standard Gaussian when the original is close to Gaussian.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .targets import TargetModel

__all__ = [
    "LaplaceError",
    "AffineMap",
    "jacobi_eigh",
    "laplace_approximate",
    "transform_target",
    "TransformedTarget",
]


class LaplaceError(RuntimeError):
    """Mode search failed or the Hessian at the mode is not positive definite."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors as columns,
    eigenvalues in ascending order. Sweeps stop once the off-diagonal
    Frobenius norm is below ``tol`` times the matrix norm.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = max(np.linalg.norm(a), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    else:
        raise LaplaceError("Jacobi eigen-decomposition did not converge")
    w = np.diag(a).copy()
    order = np.argsort(w)
    return w[order], v[:, order]


@dataclass
class AffineMap:
    """``x = factor @ x' + mode``."""

    mode: np.ndarray
    factor: np.ndarray
    inverse_factor: np.ndarray
    log_abs_det: float

    @property
    def dim(self) -> int:
        return self.mode.size

    @classmethod
    def identity(cls, d: int) -> "AffineMap":
        return cls(np.zeros(d), np.eye(d), np.eye(d), 0.0)

    @classmethod
    def from_hessian(cls, mode, hessian) -> "AffineMap":
        """Map whose covariance is the inverse of ``hessian``."""
        lam, vecs = jacobi_eigh(hessian)
        if lam[0] <= 0 or not np.all(np.isfinite(lam)):
            raise LaplaceError(
                "Laplace approximation invalid here: Hessian at the mode has "
                f"smallest eigenvalue {lam[0]:.3g}",
                last_iterate=np.asarray(mode, float),
            )
        # Sigma = V diag(1/lam) V', Sigma^{1/2} = V diag(lam^{-1/2})
        factor = vecs / np.sqrt(lam)
        inverse = np.sqrt(lam)[:, None] * vecs.T
        return cls(np.asarray(mode, float).copy(), factor, inverse,
                    float(-0.5 * np.log(lam).sum()))

    @property
    def covariance(self) -> np.ndarray:
        return self.factor @ self.factor.T

    def to_original(self, xp):
        """Map transformed states (one per row, or a single state) back."""
        xp = np.asarray(xp, dtype=float)
        return xp @ self.factor.T + self.mode

    def to_transformed(self, x):
        x = np.asarray(x, dtype=float)
        return (x - self.mode) @ self.inverse_factor.T

    def to_json(self) -> dict:
        d = self.dim
        return {
            "dim": d,
            "mode": self.mode.tolist(),
            "factor": self.factor.ravel().tolist(),
            "inverse_factor": self.inverse_factor.ravel().tolist(),
            "log_abs_det": self.log_abs_det,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AffineMap":
        mode = np.asarray(obj["mode"], dtype=float)
        d = mode.size
        factor = np.asarray(obj["factor"], dtype=float).reshape(d, d)
        if "inverse_factor" in obj:
            inv = np.asarray(obj["inverse_factor"], dtype=float).reshape(d, d)
        else:
            inv = np.linalg.inv(factor)
        return cls(mode, factor, inv, float(obj["log_abs_det"]))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json(), indent=2))

    @classmethod
    def load(cls, path) -> "AffineMap":
        return cls.from_json(json.loads(Path(path).read_text()))


def _find_mode(target: TargetModel, x, grad_tol, max_iter):
    x = np.array(x, dtype=float)
    f = target.energy(x)
    for _ in range(max_iter):
        g = target.grad_energy(x)
        if np.linalg.norm(g) < grad_tol:
            return x
        h = target.hessian_energy(x)
        step = None
        try:
            cand = -np.linalg.solve(h, g)
            if float(cand @ g) < 0:  # descent direction, so H was usable
                step = cand
        except np.linalg.LinAlgError:
            pass
        if step is None:
            step = -g / max(1.0, np.linalg.norm(g))
        slope = float(step @ g)
        alpha = 1.0
        while alpha > 1e-12:
            xn = x + alpha * step
            fn = target.energy(xn)
            if np.isfinite(fn) and fn <= f + 1e-4 * alpha * slope:
                break
            alpha *= 0.5
        else:
            raise LaplaceError("line search failed during mode search", last_iterate=x)
        x, f = xn, fn
    g = target.grad_energy(x)
    if np.linalg.norm(g) < grad_tol:
        return x
    raise LaplaceError(
        f"mode search did not converge in {max_iter} iterations "
        f"(|grad U| = {np.linalg.norm(g):.3g})",
        last_iterate=x,
    )


def laplace_approximate(target: TargetModel, init=None, grad_tol: float = 1e-6,
                        max_iter: int = 200) -> AffineMap:
    """Damped Newton mode search followed by an eigen-decomposition of the
    Hessian at the mode."""
    init = np.zeros(target.dim) if init is None else target.check_state(init)
    mode = _find_mode(target, init, grad_tol, max_iter)
    return AffineMap.from_hessian(mode, target.hessian_energy(mode))


class TransformedTarget(TargetModel):
    """``target`` seen through ``amap``: density of ``x'`` with ``x = L x' + m``."""

    def __init__(self, target: TargetModel, amap: AffineMap):
        if amap.dim != target.dim:
            raise ValueError("affine map and target dimensions differ")
        super().__init__(target.dim)
        self.base = target
        self.map = amap
        self.name = f"transformed_{target.name}"
        self._L = amap.factor
        self._LT = amap.factor.T
        self._identity = (
            amap.log_abs_det == 0.0
            and not np.any(amap.mode)
            and np.array_equal(amap.factor, np.eye(self.dim))
        )
        # targets may supply a cheaper Laplacian for a fixed basis
        hook = getattr(target, "basis_grad_and_laplacian", None)
        self._basis_eval = hook(self._L) if hook is not None and not self._identity else None

    def _x(self, xp):
        return self._L @ xp + self.map.mode

    def log_density(self, xp):
        if self._identity:
            return self.base.log_density(xp)
        return self.base.log_density(self._x(xp)) + self.map.log_abs_det

    def grad_energy(self, xp):
        if self._identity:
            return self.base.grad_energy(xp)
        return self._LT @ self.base.grad_energy(self._x(xp))

    def hessian_energy(self, xp):
        if self._identity:
            return self.base.hessian_energy(xp)
        return self._LT @ self.base.hessian_energy(self._x(xp)) @ self._L

    def grad_and_laplacian(self, xp):
        if self._identity:
            return self.base.grad_and_laplacian(xp)
        x = self._x(xp)
        if self._basis_eval is not None:
            g, lap = self._basis_eval(x)
            return self._LT @ g, lap
        g = self._LT @ self.base.grad_energy(x)
        h = self.base.hessian_energy(x)
        return g, float(np.einsum("ij,ik,kj->", self._L, h, self._L))


def transform_target(target: TargetModel, amap: AffineMap) -> TransformedTarget:
    return TransformedTarget(target, amap)
