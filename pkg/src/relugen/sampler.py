"""Deterministic uniform noise and pushforward sampling.

The noise source is counter-based: draw ``i`` is a pure function of
``(seed, i)`` through a split-mix style 64-bit mixer, so streams are
reproducible across platforms and trivially parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .histogram import HistogramD
from .pwl import PwlCurve, PwlFunction
from .relunet import ReluNetwork, eval_network
from .transport import TransportMap1to2

__all__ = ["NoiseSource", "sample_pushforward", "sample_histogram"]

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix(z: np.ndarray) -> np.ndarray:
    # wraparound modulo 2^64 is the point of the mixer
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class NoiseSource:
    """Seeded counter-based generator of uniforms on ``[0, 1)``.

    Examples
    --------
    >>> src = NoiseSource(seed=7)
    >>> float(src.uniform(0)) == float(src.block(0, 3)[0])
    True
    """

    seed: int

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)

    def uniform(self, i):
        """Draw(s) at index ``i``; scalar in, scalar out."""
        idx = np.asarray(i, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.seed) + (idx + np.uint64(1)) * _GAMMA
        out = (_mix(z) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return float(out) if np.ndim(i) == 0 else out

    def block(self, start: int, count: int) -> np.ndarray:
        """Draws at indices ``start .. start+count-1``."""
        if count < 0:
            raise ValueError(f"count must be non-negative, got {count}")
        return self.uniform(np.arange(start, start + count, dtype=np.uint64))


def sample_pushforward(source: NoiseSource, f, count: int) -> np.ndarray:
    """Push ``count`` uniform draws through a map, network, or callable.

    Returns shape ``(count,)`` for scalar-valued ``f`` and ``(count, d)``
    otherwise; draws use indices ``0 .. count-1`` of the source, so the
    output is order-stable and fully determined by the seed.
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    u = source.block(0, count)
    if isinstance(f, TransportMap1to2):
        return f.evaluate(u)
    if isinstance(f, ReluNetwork):
        return eval_network(f, u)
    if isinstance(f, (PwlFunction, PwlCurve)):
        return np.asarray(f(u))
    if callable(f):
        return np.asarray(f(u))
    raise TypeError(f"cannot push samples through {type(f).__name__}")


def sample_histogram(source: NoiseSource, h: HistogramD, count: int) -> np.ndarray:
    """Exact samples of a histogram distribution.

    Each point spends ``d+1`` draws: one to pick the tile through the
    cumulative tile masses, then one per coordinate for the position inside
    the tile.
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    d = h.dim
    u = source.block(0, (d + 1) * count).reshape(count, d + 1)
    masses = h.weights.reshape(-1) / h.weights.size
    cum = np.cumsum(masses)
    cum[-1] = 1.0
    flat = np.searchsorted(cum, u[:, 0], side="right")
    if d == 1:
        return (flat + u[:, 1]) / h.n
    ix, iy = np.unravel_index(flat, h.weights.shape)
    return np.column_stack([(ix + u[:, 1]) / h.n, (iy + u[:, 2]) / h.n])
