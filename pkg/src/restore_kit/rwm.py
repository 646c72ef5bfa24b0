"""Random Walk Metropolis reference sampler."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._random import Buffered, BufferedNormal, spawn_generators

__all__ = ["RwmConfig", "RwmResult", "rwm_run", "tune_scale", "TuningError"]

ACCEPT_BAND = (0.2, 0.3)


class TuningError(RuntimeError):
    pass


@dataclass
class RwmConfig:
    scale: float
    steps: int
    thin: int = 1
    burn_in_steps: int = 0
    seed: int = 0

    def validate(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if int(self.thin) < 1:
            raise ValueError("thin must be at least 1")
        if int(self.steps) < 1 or int(self.burn_in_steps) < 0:
            raise ValueError("steps must be positive and burn_in_steps nonnegative")
        return self


@dataclass
class RwmResult:
    samples: np.ndarray
    acceptance_rate: float
    final_state: np.ndarray


def rwm_run(target, config: RwmConfig, x0=None) -> RwmResult:
    """Isotropic Gaussian random walk Metropolis.

    ``steps`` counts post-burn-in iterations; every ``thin``-th state is
    kept. The acceptance rate is over all iterations including burn-in.
    """
    config.validate()
    d = target.dim
    x = np.zeros(d) if x0 is None else target.check_state(x0).copy()
    g = spawn_generators(config.seed, ("proposal", "accept"))
    normal = BufferedNormal(g["proposal"], d)
    unif = Buffered(g["accept"].random)
    log = math.log
    scale = float(config.scale)
    lp = target.log_density(x)
    burn, steps, thin = int(config.burn_in_steps), int(config.steps), int(config.thin)
    kept = []
    accepted = 0
    for i in range(burn + steps):
        y = x + scale * normal()
        lq = target.log_density(y)
        u = unif()
        if u > 0.0 and log(u) < lq - lp:
            x, lp = y, lq
            accepted += 1
        j = i - burn + 1
        if j > 0 and j % thin == 0:
            kept.append(x)
    samples = np.array(kept, dtype=float).reshape(len(kept), d)
    return RwmResult(samples, accepted / (burn + steps), x)


def tune_scale(target, seed: int = 0, x0=None, initial: float | None = None,
               pilot_steps: int = 2000, max_iter: int = 30) -> float:
    """Find a proposal scale with acceptance in [0.2, 0.3].

    Doubles or halves the scale on 2000-step pilot chains until the
    acceptance rate brackets the band, then bisects geometrically inside
    the bracket. Each pilot continues from the previous chain's end.
    """
    lo_band, hi_band = ACCEPT_BAND
    scale = initial if initial is not None else 2.38 / math.sqrt(target.dim)
    x = None if x0 is None else np.asarray(x0, float)
    small = large = None  # scales known to accept too often / too rarely
    rate = math.nan
    for it in range(max_iter):
        res = rwm_run(target, RwmConfig(scale, pilot_steps, seed=seed * 1000 + it), x0=x)
        x = res.final_state
        rate = res.acceptance_rate
        if lo_band <= rate <= hi_band:
            return scale
        if rate > hi_band:
            small = scale
            scale = scale * 2.0 if large is None else math.sqrt(scale * large)
        else:
            large = scale
            scale = scale / 2.0 if small is None else math.sqrt(scale * small)
    raise TuningError(
        f"no scale with acceptance in {ACCEPT_BAND} after {max_iter} pilot runs "
        f"(last scale {scale:.3g}, acceptance {rate:.3f})"
    )
