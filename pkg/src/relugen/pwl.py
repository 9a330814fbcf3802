"""Piecewise-linear function calculus on the unit interval.

Two dual representations are used throughout:

- `PwlFunction` is the ReLU combination ``f(x) = sum_i a_i * max(0, x - b_i)``
  with sorted offsets and ``b_0 = 0``.  It lowers directly to a two-layer
  network and is the form produced by the inverse-CDF construction.
- `PwlCurve` is the explicit breakpoint form (knots plus values).  Preimages,
  pushforwards and exact mass queries are computed on curves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._util import compensated_cumsum, merge_intervals, readonly
from .histogram import GeneralHistogram1D, HistogramD

__all__ = [
    "Interval",
    "PwlFunction",
    "PwlCurve",
    "eval_pwl",
    "build_inverse_cdf_pwl",
    "affine_pushforward",
    "pushforward_pwl",
    "preimage_intervals",
]

SNAP = 1e-12


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]`` with ``lo <= hi``."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo <= self.hi):
            raise ValueError(f"invalid interval [{self.lo!r}, {self.hi!r}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class PwlFunction:
    """Continuous piecewise-linear function as a ReLU combination.

    ``f(x) = sum_i a[i] * max(0, x - b[i])`` with ``b`` strictly increasing
    and ``b[0] = 0``, so ``f`` vanishes on ``(-inf, 0]``.

    Examples
    --------
    >>> f = PwlFunction(a=[2.0, -4.0 / 3.0], b=[0.0, 0.25])
    >>> float(f(0.25)), float(f(1.0))
    (0.5, 1.0)
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = readonly(self.a)
        b = readonly(self.b)
        if a.ndim != 1 or a.shape != b.shape or a.size == 0:
            raise ValueError(f"coefficient arrays must be equal-length 1-D, got {a.shape} and {b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("coefficients must be finite")
        if b[0] != 0.0:
            raise ValueError(f"first offset must be 0, got {b[0]!r}")
        if np.any(np.diff(b) <= 0.0):
            raise ValueError("offsets must be strictly increasing")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __call__(self, x):
        return eval_pwl(self, x)

    def knot_values(self) -> np.ndarray:
        """Values ``f(b_i)``, accumulated breakpoint by breakpoint."""
        slopes = np.cumsum(self.a)
        vals = np.empty(self.b.size)
        vals[0] = 0.0
        vals[1:] = compensated_cumsum(slopes[:-1] * np.diff(self.b))[1:]
        return vals

    def to_curve(self, upper: float = 1.0) -> "PwlCurve":
        """Breakpoint form of the restriction to ``[0, upper]``."""
        if upper <= 0.0:
            raise ValueError(f"domain end must be positive, got {upper}")
        keep = self.b < upper
        knots = np.append(self.b[keep], upper)
        vals = self.knot_values()[keep]
        slopes = np.cumsum(self.a)[keep]
        vals = np.append(vals, vals[-1] + slopes[-1] * (upper - knots[-2]))
        return PwlCurve(x=knots, y=vals)

    @classmethod
    def from_curve(cls, curve: "PwlCurve") -> "PwlFunction":
        """Recover the ReLU form of a curve with ``x[0] = 0`` and ``y[0] = 0``."""
        if curve.x[0] != 0.0 or curve.y[0] != 0.0:
            raise ValueError("curve must start at (0, 0) to admit a ReLU combination")
        slopes = np.diff(curve.y) / np.diff(curve.x)
        a = np.diff(slopes, prepend=0.0)
        return cls(a=a, b=curve.x[:-1])

    def to_json(self) -> str:
        return json.dumps({"a": self.a.tolist(), "b": self.b.tolist()}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PwlFunction":
        data = json.loads(text)
        return cls(a=np.asarray(data["a"], dtype=float), b=np.asarray(data["b"], dtype=float))


@dataclass(frozen=True)
class PwlCurve:
    """Piecewise-linear curve given by strictly increasing knots and values."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = readonly(self.x)
        y = readonly(self.y)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise ValueError(f"need at least two knots, got shapes {x.shape} and {y.shape}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("knots and values must be finite")
        if np.any(np.diff(x) <= 0.0):
            raise ValueError("knots must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __call__(self, t):
        return np.interp(t, self.x, self.y)

    @property
    def domain(self) -> Interval:
        return Interval(float(self.x[0]), float(self.x[-1]))

    def pieces(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.x[:-1], self.x[1:], self.y[:-1], self.y[1:]


def eval_pwl(f: PwlFunction, x):
    """Evaluate a ReLU combination; vectorized over ``x``."""
    x_arr = np.asarray(x, dtype=float)
    terms = np.maximum(x_arr[..., None] - f.b, 0.0)
    out = terms @ f.a
    return float(out) if np.isscalar(x) or x_arr.ndim == 0 else out


def build_inverse_cdf_pwl(h) -> PwlFunction:
    """Inverse CDF of a 1-D histogram as a ReLU combination.

    For weights ``w`` on tiles ``[t_i, t_{i+1}]`` the coefficients are
    ``a_0 = 1/w_0``, ``a_i = 1/w_i - 1/w_{i-1}`` and the offsets are the CDF
    values ``b_i = sum_{j<i} (t_{j+1} - t_j) w_j``.  Pushing the uniform
    distribution on ``[0, 1]`` through the result recovers ``h`` exactly.
    """
    if isinstance(h, HistogramD):
        h = h.to_general()
    if not isinstance(h, GeneralHistogram1D):
        raise TypeError(f"expected a 1-D histogram, got {type(h).__name__}")
    w = h.weights
    inv = 1.0 / w
    a = np.diff(inv, prepend=0.0)
    a[0] = inv[0]
    b = compensated_cumsum(np.diff(h.breakpoints) * w)[:-1]
    return PwlFunction(a=a, b=b)


def affine_pushforward(m: float, s: float, source: Interval) -> tuple[Interval, float]:
    """Image interval and density of ``U(source)`` under ``x -> m*x + s``.

    The pushforward of a uniform distribution through a non-degenerate affine
    map is uniform on the image with density ``1 / (|m| * (hi - lo))``.
    """
    if m == 0.0:
        raise ValueError("affine map must have non-zero slope to push a density forward")
    if source.length <= 0.0:
        raise ValueError(f"source interval must have positive length, got {source}")
    ends = sorted((m * source.lo + s, m * source.hi + s))
    return Interval(ends[0], ends[1]), 1.0 / (abs(m) * source.length)


def _as_curve(f) -> PwlCurve:
    if isinstance(f, PwlCurve):
        return f
    if isinstance(f, PwlFunction):
        return f.to_curve(1.0)
    raise TypeError(f"expected PwlFunction or PwlCurve, got {type(f).__name__}")


def pushforward_pwl(f) -> GeneralHistogram1D:
    """Distribution of ``f(U)`` for ``U`` uniform on ``[0, 1]``.

    ``f`` must fix the endpoints (``f(0) = 0``, ``f(1) = 1``) and stay inside
    the unit interval; monotonicity is not required.  Every linear piece
    spreads its share of mass uniformly over its image, so the result is a
    histogram over the sorted image knots.

    Raises
    ------
    ValueError
        If a piece of positive length is flat, which would push mass onto a
        single point.
    """
    curve = _as_curve(f)
    y = curve.y
    if abs(y[0]) > 1e-9 or abs(y[-1] - 1.0) > 1e-9:
        raise ValueError(f"map must fix the endpoints, got f(0)={y[0]!r}, f(1)={y[-1]!r}")
    if np.min(y) < -1e-9 or np.max(y) > 1.0 + 1e-9:
        raise ValueError("map must send [0, 1] into [0, 1]")
    dx = np.diff(curve.x)
    dy = np.diff(y)
    if np.any(dy == 0.0):
        raise ValueError("map has a flat piece of positive length; pushforward is not a histogram")

    # Cluster the image knots, snapping anything within SNAP of 0 or 1.
    raw = np.sort(y)
    knots = [raw[0]]
    for v in raw[1:]:
        if v - knots[-1] > SNAP:
            knots.append(v)
    knots = np.clip(np.asarray(knots), 0.0, 1.0)
    knots[0] = 0.0
    knots[-1] = 1.0

    lo = np.minimum(y[:-1], y[1:])
    hi = np.maximum(y[:-1], y[1:])
    i_lo = _nearest_knot(knots, lo)
    i_hi = _nearest_knot(knots, hi)
    density = dx / (hi - lo)
    delta = np.zeros(knots.size)
    np.add.at(delta, i_lo, density)
    np.add.at(delta, i_hi, -density)
    weights = np.cumsum(delta)[:-1]
    if np.any(weights <= 0.0):
        raise ValueError("image does not cover [0, 1] with positive density")
    return GeneralHistogram1D(breakpoints=knots, weights=weights)


def _nearest_knot(knots: np.ndarray, values: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(knots, values)
    idx = np.clip(idx, 1, knots.size - 1)
    left_closer = np.abs(values - knots[idx - 1]) <= np.abs(knots[idx] - values)
    return np.where(left_closer, idx - 1, idx)


def preimage_intervals(f, target, snap: float = SNAP) -> list[Interval]:
    """Sorted maximal intervals ``{x : f(x) in [lo, hi]}`` within the domain.

    ``f`` may be a `PwlFunction` (domain ``[0, 1]``) or a `PwlCurve`.
    Adjacent solutions closer than ``snap`` are merged, so the result is a
    disjoint list.
    """
    curve = _as_curve(f)
    if isinstance(target, Interval):
        lo, hi = target.lo, target.hi
    else:
        lo, hi = float(target[0]), float(target[1])
    if hi < lo:
        raise ValueError(f"empty target interval [{lo}, {hi}]")
    x0, x1, y0, y1 = curve.pieces()
    dy = y1 - y0
    hits: list[tuple[float, float]] = []
    flat = dy == 0.0
    for i in np.nonzero(flat)[0]:
        if lo <= y0[i] <= hi:
            hits.append((x0[i], x1[i]))
    idx = np.nonzero(~flat)[0]
    t_lo = (lo - y0[idx]) / dy[idx]
    t_hi = (hi - y0[idx]) / dy[idx]
    t_min = np.clip(np.minimum(t_lo, t_hi), 0.0, 1.0)
    t_max = np.clip(np.maximum(t_lo, t_hi), 0.0, 1.0)
    keep = t_max > t_min
    u = x0[idx] + t_min * (x1[idx] - x0[idx])
    v = x0[idx] + t_max * (x1[idx] - x0[idx])
    hits.extend(zip(u[keep], v[keep]))
    # Keep point tangencies as degenerate intervals when nothing wider hits.
    touch = (t_max == t_min) & (t_max > 0.0) & (t_min < 1.0)
    hits.extend(zip(u[touch], u[touch]))
    return [Interval(lo_, hi_) for lo_, hi_ in merge_intervals(hits, snap)]
