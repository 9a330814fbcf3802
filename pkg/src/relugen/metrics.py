"""Distances between measures.

Exact 1-D Wasserstein distance by CDF integration, exact discrete optimal
transport on small instances, seeded empirical Wasserstein estimates from
sample clouds, and the diameter-times-TV comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment, linprog
from scipy.spatial.distance import cdist

from ._util import readonly
from .histogram import DensitySpec, GeneralHistogram1D, HistogramD, tv_distance

__all__ = [
    "ATOM_BUDGET",
    "AtomicMeasure",
    "OTResult",
    "GibbsReport",
    "wasserstein_1d",
    "solve_discrete_ot",
    "empirical_wasserstein",
    "gibbs_bound_check",
]

ATOM_BUDGET = 4096
_LP_VARIABLE_BUDGET = 1_000_000


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many weighted points carrying total mass one.

    Parameters
    ----------
    points : (N, d) array_like
        Atom locations; a flat array is treated as d=1.
    weights : (N,) array_like
        Positive masses summing to 1 within 1e-9.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError(f"points must be a non-empty (N, d) array, got shape {pts.shape}")
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size != pts.shape[0]:
            raise ValueError(f"{w.size} weights for {pts.shape[0]} points")
        if not np.all(w > 0.0):
            raise ValueError("atom masses must be positive")
        total = math.fsum(w)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"total mass must be 1, got {total!r}")
        object.__setattr__(self, "points", readonly(pts))
        object.__setattr__(self, "weights", readonly(w))

    @classmethod
    def from_points(cls, points) -> "AtomicMeasure":
        """Equal-mass measure on the given points."""
        pts = np.asarray(points, dtype=float)
        n = pts.shape[0]
        return cls(points=pts, weights=np.full(n, 1.0 / n))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


class OTResult(NamedTuple):
    """Optimal transport optimum: total cost and the supporting plan.

    `plan` lists (source index, target index, mass) triples sorted by index;
    `cost` is the sum of mass times Euclidean distance over the plan.
    """

    cost: float
    plan: tuple


def _to_general_1d(obj) -> GeneralHistogram1D:
    if isinstance(obj, GeneralHistogram1D):
        return obj
    if isinstance(obj, HistogramD):
        if obj.dim != 1:
            raise ValueError("only 1-D histograms have a general-form conversion")
        return obj.to_general()
    if isinstance(obj, DensitySpec):
        if obj.dim != 1:
            raise ValueError("only 1-D densities convert to a general histogram")
        m = obj.values.size
        return GeneralHistogram1D(breakpoints=np.linspace(0.0, 1.0, m + 1), weights=obj.values)
    raise TypeError(f"cannot interpret {type(obj).__name__} as a 1-D distribution")


def wasserstein_1d(a, b) -> float:
    """Exact 1-D Wasserstein-1 distance, the integral of |F_a - F_b|.

    Parameters
    ----------
    a, b : GeneralHistogram1D, 1-D HistogramD, or 1-D DensitySpec

    Returns
    -------
    float
        The integral over [0, 1] of the absolute CDF difference, integrated
        piece by piece on the union of the two breakpoint grids with exact
        handling of sign crossings.
    """
    ga, gb = _to_general_1d(a), _to_general_1d(b)
    knots = np.union1d(ga.breakpoints, gb.breakpoints)
    fa = np.interp(knots, *ga.cdf_knots())
    fb = np.interp(knots, *gb.cdf_knots())
    diff = fa - fb
    parts = []
    for t0, t1, d0, d1 in zip(knots[:-1], knots[1:], diff[:-1], diff[1:]):
        dt = t1 - t0
        if d0 * d1 >= 0.0:
            parts.append(0.5 * (abs(d0) + abs(d1)) * dt)
        else:
            # the linear difference crosses zero inside the piece
            parts.append(0.5 * (d0 * d0 + d1 * d1) / abs(d1 - d0) * dt)
    return math.fsum(parts)


def _plan_cost(points_a, points_b, plan) -> float:
    return math.fsum(m * float(np.linalg.norm(points_a[i] - points_b[j])) for i, j, m in plan)


def solve_discrete_ot(mu: AtomicMeasure, nu: AtomicMeasure) -> OTResult:
    """Exact optimal transport between two atomic measures.

    Equal-size equal-weight instances are solved by assignment; the rest go
    through the transportation linear program (dual simplex, which returns a
    vertex plan).  Plan entries are sorted by source then target index.

    Raises
    ------
    ValueError
        If dimensions or total masses differ, or the instance exceeds the
        exact-solver budget.
    """
    if mu.dim != nu.dim:
        raise ValueError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if abs(math.fsum(mu.weights) - math.fsum(nu.weights)) > 1e-9:
        raise ValueError("total masses differ by more than 1e-9")
    if mu.size > ATOM_BUDGET or nu.size > ATOM_BUDGET:
        raise ValueError(f"instance exceeds the {ATOM_BUDGET}-atom exact solver budget")

    dist = cdist(mu.points, nu.points)

    equal = (
        mu.size == nu.size
        and np.all(np.abs(mu.weights - mu.weights[0]) <= 1e-12)
        and np.all(np.abs(nu.weights - mu.weights[0]) <= 1e-12)
    )
    if equal:
        rows, cols = linear_sum_assignment(dist)
        plan = tuple((int(i), int(j), float(mu.weights[i])) for i, j in zip(rows, cols))
        return OTResult(cost=_plan_cost(mu.points, nu.points, plan), plan=plan)

    n, m = mu.size, nu.size
    if n * m > _LP_VARIABLE_BUDGET:
        raise ValueError(f"transportation LP with {n * m} variables exceeds the solver budget")
    # row-sum and column-sum equality constraints over the flattened plan
    var = np.arange(n * m)
    row_of = var // m
    col_of = var % m
    a_eq = sp.vstack(
        [
            sp.csr_matrix((np.ones(n * m), (row_of, var)), shape=(n, n * m)),
            sp.csr_matrix((np.ones(n * m), (col_of, var)), shape=(m, n * m)),
        ]
    )
    scale = math.fsum(mu.weights) / math.fsum(nu.weights)
    b_eq = np.concatenate([mu.weights, nu.weights * scale])
    res = linprog(dist.reshape(-1), A_eq=a_eq, b_eq=b_eq, method="highs-ds")
    if not res.success:
        raise RuntimeError(f"transportation LP failed: {res.message}")
    x = res.x.reshape(n, m)
    keep = np.argwhere(x > 1e-12)
    plan = tuple(
        (int(i), int(j), float(x[i, j])) for i, j in keep[np.lexsort((keep[:, 1], keep[:, 0]))]
    )
    return OTResult(cost=_plan_cost(mu.points, nu.points, plan), plan=plan)


def _as_cloud(samples) -> np.ndarray:
    pts = np.asarray(samples, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("sample sets must be non-empty (N,) or (N, d) arrays")
    if pts.min() < -1e-6 or pts.max() > 1.0 + 1e-6:
        raise ValueError("samples must lie in the unit cube")
    return pts


def empirical_wasserstein(samples_a, samples_b, m: int = 2000, seed: int = 0) -> float:
    """Estimate the Wasserstein distance between two sample clouds.

    Each cloud is subsampled without replacement to a common size of at most
    ``m`` atoms using a generator seeded with ``seed``; the subsamples are
    then compared with the exact discrete solver.  Deterministic given
    (samples, m, seed).
    """
    a = _as_cloud(samples_a)
    b = _as_cloud(samples_b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    size = min(m, a.shape[0], b.shape[0])
    if size < 1:
        raise ValueError("atom budget must be at least 1")
    rng = np.random.default_rng(seed)
    if a.shape[0] > size:
        a = a[rng.choice(a.shape[0], size=size, replace=False)]
    if b.shape[0] > size:
        b = b[rng.choice(b.shape[0], size=size, replace=False)]
    result = solve_discrete_ot(AtomicMeasure.from_points(a), AtomicMeasure.from_points(b))
    return result.cost


class GibbsReport(NamedTuple):
    tv: float
    bound: float
    wasserstein: float
    holds: bool


def _atomize_2d(obj, grid_cap: int = 16) -> AtomicMeasure:
    if isinstance(obj, HistogramD) and obj.dim == 2:
        n = obj.n
        weights = np.asarray(obj.weights)
    elif isinstance(obj, DensitySpec) and obj.dim == 2:
        n = obj.values.shape[0]
        weights = np.asarray(obj.values)
    else:
        raise TypeError(f"cannot atomize {type(obj).__name__} on a square grid")
    group = max(g for g in range(1, n + 1) if n % g == 0 and g <= grid_cap)
    coarse = weights.reshape(group, n // group, group, n // group).mean(axis=(1, 3))
    centers = (np.arange(group) + 0.5) / group
    xs, ys = np.meshgrid(centers, centers, indexing="ij")
    masses = coarse.reshape(-1) / (group * group)
    masses = masses / math.fsum(masses)
    return AtomicMeasure(points=np.column_stack([xs.reshape(-1), ys.reshape(-1)]), weights=masses)


def gibbs_bound_check(p, q, omega_diam: float) -> GibbsReport:
    """Check the inequality W <= diam(support) * TV for a pair of measures.

    1-D pairs are measured exactly via `wasserstein_1d`; 2-D pairs are
    compared through a tile-center atomization (coarsened to at most a 16x16
    grid), which estimates W to within one tile diameter.

    Returns
    -------
    GibbsReport
        Named tuple (tv, bound, wasserstein, holds).
    """
    tv = tv_distance(p, q)
    bound = float(omega_diam) * tv
    one_d = all(
        (isinstance(obj, GeneralHistogram1D))
        or (isinstance(obj, (HistogramD, DensitySpec)) and obj.dim == 1)
        for obj in (p, q)
    )
    if one_d:
        w = wasserstein_1d(p, q)
    else:
        w = solve_discrete_ot(_atomize_2d(p), _atomize_2d(q)).cost
    return GibbsReport(tv=tv, bound=bound, wasserstein=w, holds=bool(w <= bound + 1e-12))
