"""Seeded random streams for the simulation loops.

Each simulation splits one integer seed into independent Philox streams,
one per sub-sampler, so adding draws to one stream never shifts another.
Draws are generated in blocks and handed out one at a time.
"""

from __future__ import annotations

import numpy as np

_BLOCK = 8192


def spawn_generators(seed: int, names):
    children = np.random.SeedSequence(int(seed)).spawn(len(names))
    return {name: np.random.Generator(np.random.Philox(child)) for name, child in zip(names, children)}


class Buffered:
    """Block-buffered scalar draws: ``draw(size)`` must return an ndarray."""

    __slots__ = ("_draw", "_buf", "_i", "_n")

    def __init__(self, draw, block: int = _BLOCK):
        self._draw = draw
        self._n = block
        self._buf = draw(block).tolist()
        self._i = 0

    def __call__(self) -> float:
        i = self._i
        if i == self._n:
            self._buf = self._draw(self._n).tolist()
            i = 0
        self._i = i + 1
        return self._buf[i]


class BufferedNormal:
    """Block-buffered standard normal vectors of length ``d``."""

    __slots__ = ("_rng", "_d", "_buf", "_i", "_n")

    def __init__(self, rng: np.random.Generator, d: int, block: int = _BLOCK):
        self._rng = rng
        self._d = d
        self._n = max(64, block // d)
        self._buf = rng.standard_normal((self._n, d))
        self._i = 0

    def __call__(self) -> np.ndarray:
        i = self._i
        if i == self._n:
            self._buf = self._rng.standard_normal((self._n, self._d))
            i = 0
        self._i = i + 1
        return self._buf[i]
