"""Densities and histogram models on the unit interval and unit square.

The compilation pipeline starts from a sampled density (`DensitySpec`),
averages it over a regular ``n``-by-``n`` tiling (`quantize_density`) and
hands the resulting `HistogramD` to the transport-map builders.
`GeneralHistogram1D` covers non-uniform tilings of ``[0, 1]``, which arise as
pushforwards of piecewise-linear maps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._util import compensated_cumsum, readonly

__all__ = [
    "DensitySpec",
    "HistogramD",
    "GeneralHistogram1D",
    "Cell",
    "quantize_density",
    "tv_distance",
    "marginal_x",
    "conditional_y",
    "cell_mass_histogram",
]

BUILTIN_DENSITIES = ("uniform", "ramp", "cosine_bump")


@dataclass(frozen=True)
class Cell:
    """Axis-aligned cell of a regular tiling: integer index plus float bounds."""

    index: tuple[int, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.index)

    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))


@dataclass(frozen=True)
class DensitySpec:
    """A target probability density sampled at the centers of a regular grid.

    Parameters
    ----------
    values : ndarray
        Density samples at cell centers.  Shape ``(m,)`` for a density on
        ``[0, 1]`` or ``(m, m)`` for one on ``[0, 1]^2``; the first axis is
        the x direction.
    lipschitz : float
        A Lipschitz constant for the density (Euclidean norm on the square).
    builtin : str, optional
        Set when the spec was produced by `DensitySpec.from_builtin`.

    Examples
    --------
    >>> spec = DensitySpec.from_builtin("ramp", m=8)
    >>> spec.dim, spec.m
    (1, 8)
    """

    values: np.ndarray
    lipschitz: float
    builtin: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = readonly(self.values)
        if vals.ndim not in (1, 2):
            raise ValueError(f"density grid must be 1- or 2-dimensional, got shape {vals.shape}")
        if vals.ndim == 2 and vals.shape[0] != vals.shape[1]:
            raise ValueError(f"2-D density grid must be square, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0.0):
            raise ValueError("density samples must be finite and strictly positive")
        integral = math.fsum(vals.ravel()) / vals.size
        if abs(integral - 1.0) > 1e-6:
            raise ValueError(f"density must integrate to 1 (midpoint rule gave {integral!r})")
        if not (math.isfinite(self.lipschitz) and self.lipschitz >= 0.0):
            raise ValueError(f"lipschitz must be a finite non-negative float, got {self.lipschitz!r}")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.values.ndim

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_builtin(cls, name: str, m: int = 240, **params) -> "DensitySpec":
        """Build one of the named analytic densities sampled on an ``m`` grid.

        ``uniform`` and ``cosine_bump`` live on the unit square, ``ramp``
        (density ``x + 1/2``) on the unit interval.  ``cosine_bump`` takes an
        ``alpha`` in ``(0, 1)`` and is ``1 + alpha*cos(pi x)*cos(pi y)``,
        which integrates to one for every alpha.
        """
        if m < 1:
            raise ValueError(f"grid resolution must be positive, got {m}")
        centers = (np.arange(m) + 0.5) / m
        if name == "uniform":
            vals = np.ones((m, m))
            lip = 0.0
        elif name == "ramp":
            vals = centers + 0.5
            lip = 1.0
        elif name == "cosine_bump":
            alpha = float(params.get("alpha", 0.5))
            if not 0.0 < alpha < 1.0:
                raise ValueError(f"cosine_bump alpha must lie in (0, 1), got {alpha}")
            cx = np.cos(np.pi * centers)
            vals = 1.0 + alpha * np.outer(cx, cx)
            lip = alpha * np.pi
        else:
            raise ValueError(f"unknown builtin density {name!r}, expected one of {BUILTIN_DENSITIES}")
        return cls(values=vals, lipschitz=lip, builtin=name, params=dict(params))

    @classmethod
    def from_json(cls, text: str) -> "DensitySpec":
        data = json.loads(text)
        if "builtin" in data:
            params = dict(data.get("params", {}))
            m = int(params.pop("m", 240))
            return cls.from_builtin(data["builtin"], m=m, **params)
        m = int(data["m"])
        values = np.asarray(data["values"], dtype=float)
        if values.ndim == 1 and values.size == m * m:
            values = values.reshape(m, m)
        return cls(values=values, lipschitz=float(data["lipschitz"]))

    def to_json(self) -> str:
        if self.builtin is not None:
            params = dict(self.params)
            params["m"] = self.m
            return json.dumps({"builtin": self.builtin, "params": params}, sort_keys=True)
        return json.dumps(
            {"m": self.m, "values": self.values.tolist(), "lipschitz": self.lipschitz},
            sort_keys=True,
        )


@dataclass(frozen=True)
class HistogramD:
    """Histogram on a regular ``n``-tiling of ``[0,1]^d`` with unit-mean weights.

    The weight ``w_k`` is the constant density on tile ``k``; tiles have
    volume ``n**-d`` so the weights of a valid histogram sum to ``n**d``.
    The first index is the x direction.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = readonly(self.weights)
        if w.ndim not in (1, 2):
            raise ValueError(f"weights must be 1- or 2-dimensional, got shape {w.shape}")
        if w.ndim == 2 and w.shape[0] != w.shape[1]:
            raise ValueError(f"2-D weights must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("histogram weights must be finite and strictly positive")
        total = math.fsum(w.ravel())
        expected = float(w.size)
        if abs(total - expected) > 1e-9 * expected:
            raise ValueError(f"weights must sum to n**d = {expected}, got {total!r}")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.ndim

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def cell(self, *index: int) -> Cell:
        n = self.n
        for i in index:
            if not 0 <= i < n:
                raise IndexError(f"cell index {index} out of range for n={n}")
        return Cell(
            index=tuple(index),
            lower=tuple(i / n for i in index),
            upper=tuple((i + 1) / n for i in index),
        )

    def cells(self):
        """Iterate over all cells in row-major (x-outer) order."""
        if self.dim == 1:
            for i in range(self.n):
                yield self.cell(i)
        else:
            for i in range(self.n):
                for j in range(self.n):
                    yield self.cell(i, j)

    def to_general(self) -> "GeneralHistogram1D":
        if self.dim != 1:
            raise ValueError("only 1-D histograms convert to the general form")
        t = np.arange(self.n + 1) / self.n
        return GeneralHistogram1D(breakpoints=t, weights=self.weights)


@dataclass(frozen=True)
class GeneralHistogram1D:
    """Histogram on an arbitrary tiling ``0 = t_0 < ... < t_n = 1`` of ``[0,1]``.

    ``weights[k]`` is the density on ``[t_k, t_{k+1}]``; the total mass
    ``sum(w_k * (t_{k+1} - t_k))`` must equal one.
    """

    breakpoints: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        t = np.array(self.breakpoints, dtype=float)
        w = readonly(self.weights)
        if t.ndim != 1 or w.ndim != 1 or t.size != w.size + 1:
            raise ValueError(
                f"need n+1 breakpoints for n weights, got {t.size} and {w.size}"
            )
        if abs(t[0]) > 1e-12 or abs(t[-1] - 1.0) > 1e-12:
            raise ValueError(f"breakpoints must span [0, 1], got [{t[0]!r}, {t[-1]!r}]")
        t[0] = 0.0
        t[-1] = 1.0
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
            raise ValueError("weights must be finite and strictly positive")
        total = math.fsum(np.diff(t) * w)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"histogram mass must be 1, got {total!r}")
        t.flags.writeable = False
        object.__setattr__(self, "breakpoints", t)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.weights.size

    def cdf_knots(self) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints together with the CDF values at them."""
        cum = compensated_cumsum(np.diff(self.breakpoints) * self.weights)
        cum[-1] = 1.0
        return self.breakpoints, cum

    def mass(self, lo: float, hi: float) -> float:
        """Exact mass of ``[lo, hi]`` intersected with ``[0, 1]``."""
        t, w = self.breakpoints, self.weights
        overlap = np.clip(np.minimum(hi, t[1:]) - np.maximum(lo, t[:-1]), 0.0, None)
        return float(overlap @ w)


def quantize_density(spec: DensitySpec, n: int) -> HistogramD:
    """Average a density over the regular ``n`` tiling of its domain.

    The weight of each tile is the mean of the density samples it contains
    (the cell-average value), and the weight vector is rescaled so it sums to
    ``n**d`` exactly.  For an L-Lipschitz density this histogram is within
    total-variation distance ``L*sqrt(d)/(2n)`` of the target.

    Raises
    ------
    ValueError
        If ``n`` does not divide the sample resolution ``m`` or exceeds it.
    """
    m, d = spec.m, spec.dim
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if n > m:
        raise ValueError(f"n={n} exceeds the density grid resolution m={m}")
    if m % n != 0:
        raise ValueError(f"n={n} must divide the density grid resolution m={m}")
    b = m // n
    if d == 1:
        w = spec.values.reshape(n, b).mean(axis=1)
    else:
        w = spec.values.reshape(n, b, n, b).mean(axis=(1, 3))
    w = w * (float(w.size) / math.fsum(w.ravel()))
    return HistogramD(weights=w)


def _grid_values(obj, m: int) -> np.ndarray:
    """Expand a density or uniform-tile histogram onto the midpoint m-grid."""
    if isinstance(obj, DensitySpec):
        values, n = obj.values, obj.m
    else:
        values, n = obj.weights, obj.n
    if m % n != 0:
        raise ValueError(f"resolutions are incompatible: {n} does not divide {m}")
    reps = m // n
    out = np.repeat(values, reps, axis=0)
    if values.ndim == 2:
        out = np.repeat(out, reps, axis=1)
    return out


def tv_distance(a, b) -> float:
    """Total-variation distance, one half of the L1 distance of the densities.

    Accepts any mix of `DensitySpec`, `HistogramD` and `GeneralHistogram1D`
    of equal dimension.  Pairs involving a sampled density are evaluated by
    the midpoint rule on the density's grid; histogram pairs are exact.
    """
    if isinstance(a, GeneralHistogram1D) or isinstance(b, GeneralHistogram1D):
        a = a.to_general() if isinstance(a, HistogramD) else a
        b = b.to_general() if isinstance(b, HistogramD) else b
        if not (isinstance(a, GeneralHistogram1D) and isinstance(b, GeneralHistogram1D)):
            raise TypeError("general 1-D histograms only compare against other 1-D histograms")
        knots = np.union1d(a.breakpoints, b.breakpoints)
        mids = 0.5 * (knots[:-1] + knots[1:])
        da = a.weights[np.searchsorted(a.breakpoints, mids) - 1]
        db = b.weights[np.searchsorted(b.breakpoints, mids) - 1]
        return 0.5 * float(np.abs(da - db) @ np.diff(knots))
    dim_a = a.dim if isinstance(a, (DensitySpec, HistogramD)) else None
    dim_b = b.dim if isinstance(b, (DensitySpec, HistogramD)) else None
    if dim_a is None or dim_b is None:
        raise TypeError(f"cannot compare {type(a).__name__} with {type(b).__name__}")
    if dim_a != dim_b:
        raise ValueError(f"dimension mismatch: {dim_a} vs {dim_b}")
    res_a = a.m if isinstance(a, DensitySpec) else a.n
    res_b = b.m if isinstance(b, DensitySpec) else b.n
    m = res_a * res_b // math.gcd(res_a, res_b)
    ga = _grid_values(a, m)
    gb = _grid_values(b, m)
    return 0.5 * float(np.abs(ga - gb).sum()) / ga.size


def marginal_x(h: HistogramD) -> HistogramD:
    """First-coordinate marginal of a 2-D histogram, as a 1-D histogram."""
    if h.dim != 2:
        raise ValueError("marginal_x expects a 2-D histogram")
    return HistogramD(weights=h.weights.sum(axis=1) / h.n)


def conditional_y(h: HistogramD, i: int) -> HistogramD:
    """Conditional of the second coordinate given x in cell ``i``.

    The conditional weights are ``n * w[i, k] / sum_k' w[i, k']``, which sum
    to ``n`` and therefore form a valid 1-D histogram.
    """
    if h.dim != 2:
        raise ValueError("conditional_y expects a 2-D histogram")
    if not 0 <= i < h.n:
        raise IndexError(f"cell index {i} out of range for n={h.n}")
    row = h.weights[i]
    return HistogramD(weights=h.n * row / math.fsum(row))


def cell_mass_histogram(h: HistogramD, cell) -> float:
    """Exact mass the histogram assigns to a rectangle inside ``[0,1]^d``."""
    if isinstance(cell, Cell):
        lower, upper = np.asarray(cell.lower), np.asarray(cell.upper)
    else:
        lower, upper = (np.asarray(edge, dtype=float).reshape(-1) for edge in cell)
    if lower.size != h.dim or upper.size != h.dim:
        raise ValueError(f"cell dimension {lower.size} does not match histogram dimension {h.dim}")
    if np.any(lower < -1e-12) or np.any(upper > 1 + 1e-12) or np.any(lower > upper):
        raise ValueError(f"cell [{lower}, {upper}] must be a rectangle inside the unit domain")
    n = h.n
    edges = np.arange(n + 1) / n
    axis_overlaps = [
        np.clip(np.minimum(upper[ax], edges[1:]) - np.maximum(lower[ax], edges[:-1]), 0.0, None)
        for ax in range(h.dim)
    ]
    if h.dim == 1:
        return float(axis_overlaps[0] @ h.weights)
    return float(axis_overlaps[0] @ h.weights @ axis_overlaps[1])
