"""Transport maps from 1-D uniform noise to 2-D histogram targets.

Three constructions are provided, all realized exactly by piecewise-linear
maps ``[0,1] -> [0,1]^2`` and lowered to ReLU networks without changing the
function:

- line-wise: ``x -> (x, f(g_s(x)))`` for targets whose density does not
  depend on the first coordinate;
- standard: ``x -> (f_marg(x), sum_i f_i(g_s(n f_marg(x) - i)))``, which
  matches every tooth-scale sub-cell mass of the target exactly;
- alt: a boustrophedon construction whose first component zigzags through
  the grid columns while scaled sawtooth and ramp terms fill each tile.

Every map carries two independent representations: the defining symbolic
formula and a flattened breakpoint curve per component.  Mass queries are
answered exactly on the curves by preimage interval arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._util import compensated_cumsum
from .histogram import Cell, HistogramD, conditional_y, marginal_x
from .pwl import Interval, PwlCurve, PwlFunction, build_inverse_cdf_pwl, eval_pwl, preimage_intervals
from .relunet import (
    AffineLayer,
    ReluNetwork,
    compose,
    connectivity,
    depth,
    eval_network,
    extend_depth,
    make_gs_network,
    make_identity_network,
    make_pwl_network,
    parallelize,
    sum_networks,
)
from .sawtooth import eval_g_delta, eval_gs, eval_h_delta, h_delta_split

__all__ = [
    "TransportMap1to2",
    "snake_rank",
    "snake_cells",
    "build_linewise_map",
    "build_2d_map",
    "build_alt_2d_map",
    "build_map",
    "map_cell_mass",
    "fine_grid_masses",
    "histogram_grid_masses",
    "check_cell_masses",
    "alt_fine_deviation",
    "lower_to_network",
    "max_forward_error",
    "wasserstein_upper_bound",
    "connectivity_bound",
    "claimed_depth",
]


@dataclass(frozen=True)
class TransportMap1to2:
    """Piecewise-linear map from unit-interval noise to the unit square.

    `first` and `second` are the flattened component curves used for exact
    mass queries; the symbolic fields hold the defining data of the
    construction and drive `evaluate_symbolic`, which is kept independent of
    the curves so the two routes can check each other.
    """

    method: str
    n: int
    s: int
    hist: HistogramD
    first: PwlCurve
    second: PwlCurve
    f_marg: PwlFunction | None = None
    conditionals: tuple[PwlFunction, ...] | None = None
    f_line: PwlFunction | None = None
    alt_terms: tuple[tuple, ...] | None = None

    def __post_init__(self):
        if self.method not in ("linewise", "standard", "alt"):
            raise ValueError(f"unknown method {self.method!r}")
        for curve in (self.first, self.second):
            if curve.x[0] != 0.0 or curve.x[-1] != 1.0:
                raise ValueError("component curves must cover exactly [0, 1]")
            if np.min(curve.y) < -1e-9 or np.max(curve.y) > 1.0 + 1e-9:
                raise ValueError("component values must stay inside the unit interval")
        limit = self.n * 2**self.s * (self.n + 1) + 2
        if self.second.x.size > limit:
            raise ValueError(f"second component has {self.second.x.size} knots, over the {limit} cap")

    def evaluate(self, x) -> np.ndarray:
        """Map evaluation through the flattened curves; shape (N, 2)."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.column_stack([self.first(x_arr), self.second(x_arr)])
        return out[0] if np.ndim(x) == 0 else out

    __call__ = evaluate

    def evaluate_symbolic(self, x) -> np.ndarray:
        """Map evaluation straight from the defining formula; shape (N, 2)."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        if self.method == "linewise":
            fst = x_arr.copy()
            snd = eval_pwl(self.f_line, eval_gs(self.s, x_arr))
        elif self.method == "standard":
            fst = eval_pwl(self.f_marg, x_arr)
            base = self.n * fst
            snd = np.zeros_like(x_arr)
            for i, f_i in enumerate(self.conditionals):
                snd = snd + eval_pwl(f_i, eval_gs(self.s, base - i))
        else:
            fst = np.asarray(self.first(x_arr))
            snd = np.zeros_like(x_arr)
            for kind, a, b, _ix, _iy in self.alt_terms:
                if kind == "g":
                    snd = snd + eval_g_delta(self.s, a, b, self.n, x_arr)
                else:
                    snd = snd + eval_h_delta(self.s, a, b, self.n, x_arr)
        out = np.column_stack([fst, snd])
        return out[0] if np.ndim(x) == 0 else out

    def noise_intervals(self) -> list[Interval]:
        """Noise segments feeding the construction, in traversal order.

        Standard: the intervals mapped onto the x-cells; alt: the snake-cell
        intervals; line-wise: the whole unit interval.
        """
        if self.method in ("standard", "alt"):
            knots = self.first.x
        else:
            knots = np.array([0.0, 1.0])
        return [Interval(float(a), float(b)) for a, b in zip(knots[:-1], knots[1:])]


def snake_rank(n: int, k) -> int:
    """Boustrophedon rank of grid index ``k = (x1, x2)``.

    Rows are taken bottom-up; even rows run left to right, odd rows right to
    left, so consecutive ranks are always edge-adjacent cells.
    """
    x1, x2 = int(k[0]), int(k[1])
    if not (0 <= x1 < n and 0 <= x2 < n):
        raise ValueError(f"index {k} out of range for an {n} by {n} grid")
    return x2 * n + (x1 if x2 % 2 == 0 else n - 1 - x1)


def snake_cells(n: int) -> list[tuple[int, int]]:
    """Grid indices ``(ix, iy)`` listed in snake-rank order."""
    cells = []
    for iy in range(n):
        xs = range(n) if iy % 2 == 0 else range(n - 1, -1, -1)
        cells.extend((ix, iy) for ix in xs)
    return cells


def _composition_knots(s: int, interior: np.ndarray) -> np.ndarray:
    """Knots of ``f(g_s(t))`` on [0, 1] for a pwl ``f`` with the given knots.

    Every half-tooth ``[j/2^s, (j+1)/2^s]`` is affine for ``g_s`` and sweeps
    [0, 1] once, so the composition bends at the half-tooth ends and at the
    preimages ``(j + v)/2^s`` (rising) / ``(j + 1 - v)/2^s`` (falling) of the
    interior knots ``v`` of ``f``.
    """
    half = 2.0**-s
    base = np.arange(2**s + 1) * half
    interior = np.asarray(interior, dtype=float)
    if interior.size == 0:
        return base
    j = np.arange(2**s)
    rise = (j[j % 2 == 0][:, None] + interior) * half
    fall = (j[j % 2 == 1][:, None] + (1.0 - interior)) * half
    return np.unique(np.concatenate([base, rise.ravel(), fall.ravel()]))


def build_linewise_map(h: HistogramD, s: int) -> TransportMap1to2:
    """Map ``x -> (x, f(g_s(x)))`` for a target constant along x.

    ``f`` is the inverse CDF of the second-coordinate marginal, so every
    full-tooth column of every tile receives exactly its target mass.

    Raises
    ------
    ValueError
        If the weights vary along the first axis beyond 1e-12.
    """
    if h.dim != 2:
        raise ValueError("line-wise construction expects a 2-D histogram")
    if s < 1:
        raise ValueError(f"sawtooth order must be at least 1, got {s}")
    if np.max(np.abs(h.weights - h.weights[0])) > 1e-12:
        raise ValueError("line-wise construction requires weights constant in x")
    f = build_inverse_cdf_pwl(HistogramD(weights=h.weights[0].copy()))
    knots = _composition_knots(s, f.b[1:])
    values = eval_pwl(f, eval_gs(s, knots))
    first = PwlCurve(x=np.array([0.0, 1.0]), y=np.array([0.0, 1.0]))
    return TransportMap1to2(
        method="linewise",
        n=h.n,
        s=s,
        hist=h,
        first=first,
        second=PwlCurve(x=knots, y=values),
        f_line=f,
    )


def build_2d_map(h: HistogramD, s: int) -> TransportMap1to2:
    """Standard construction ``x -> (f_marg(x), sum_i f_i(g_s(n f_marg(x) - i)))``.

    ``f_marg`` is the inverse CDF of the x-marginal and ``f_i`` the inverse
    CDF of the conditional of row ``i``; on the noise segment mapped onto
    x-cell ``i`` all terms but the i-th vanish.
    """
    if h.dim != 2:
        raise ValueError("standard construction expects a 2-D histogram")
    if s < 1:
        raise ValueError(f"sawtooth order must be at least 1, got {s}")
    n = h.n
    f_marg = build_inverse_cdf_pwl(marginal_x(h))
    conds = tuple(build_inverse_cdf_pwl(conditional_y(h, i)) for i in range(n))
    bounds = np.append(f_marg.b, 1.0)
    xs = []
    for r in range(n):
        local = _composition_knots(s, conds[r].b[1:])[:-1]
        xs.append(bounds[r] + local * (bounds[r + 1] - bounds[r]))
    knots = np.append(np.concatenate(xs), 1.0)
    tmap = TransportMap1to2(
        method="standard",
        n=n,
        s=s,
        hist=h,
        first=PwlCurve(x=bounds, y=np.arange(n + 1) / n),
        second=PwlCurve(x=knots, y=np.zeros(knots.size)),
        f_marg=f_marg,
        conditionals=conds,
    )
    values = tmap.evaluate_symbolic(knots)[:, 1]
    return TransportMap1to2(
        method="standard",
        n=n,
        s=s,
        hist=h,
        first=tmap.first,
        second=PwlCurve(x=knots, y=values),
        f_marg=f_marg,
        conditionals=conds,
    )


def build_alt_2d_map(h: HistogramD, s: int) -> TransportMap1to2:
    """Boustrophedon construction for power-of-two grids.

    The noise interval splits into snake-ordered segments of length
    ``w_k/n^2`` (the exact tile masses).  The first component traverses each
    segment affinely across its tile's x-extent, alternating direction row
    by row; the second component adds one sawtooth term per tile, with the
    last cell of every row transition carrying a ramp variant that lifts the
    level by ``1/n`` into the next row.

    Raises
    ------
    ValueError
        If ``n`` is not a power of two.
    """
    if h.dim != 2:
        raise ValueError("alt construction expects a 2-D histogram")
    if s < 1:
        raise ValueError(f"sawtooth order must be at least 1, got {s}")
    n = h.n
    if n & (n - 1) != 0:
        raise ValueError(f"alt construction requires n to be a power of two, got {n}")
    cells = snake_cells(n)
    widths = np.array([h.weights[ix, iy] for ix, iy in cells]) / (n * n)
    cum = compensated_cumsum(widths)
    cum[-1] = 1.0
    # last cell of each row except the final one carries the lifting ramp
    lift = {j * n - 1 for j in range(1, n)}
    terms = []
    first_vals = np.empty(n * n + 1)
    for rank, (ix, iy) in enumerate(cells):
        kind = "h" if rank in lift else "g"
        terms.append((kind, float(cum[rank]), float(cum[rank + 1]), ix, iy))
        first_vals[rank] = ix / n if iy % 2 == 0 else (ix + 1) / n
    last_ix, last_iy = cells[-1]
    first_vals[-1] = (last_ix + 1) / n if last_iy % 2 == 0 else last_ix / n

    knot_parts = []
    grid = np.arange(2**s) * 2.0**-s
    for kind, a, b, _ix, _iy in terms:
        if kind == "g":
            knot_parts.append(a + grid * (b - a))
        else:
            bt = h_delta_split(s, a, b)
            knot_parts.append(a + grid * (bt - a))
            knot_parts.append(np.array([bt]))
    knot_parts.append(np.array([1.0]))
    knots = np.unique(np.concatenate(knot_parts))
    tmap = TransportMap1to2(
        method="alt",
        n=n,
        s=s,
        hist=h,
        first=PwlCurve(x=cum, y=first_vals),
        second=PwlCurve(x=knots, y=np.zeros(knots.size)),
        alt_terms=tuple(terms),
    )
    values = tmap.evaluate_symbolic(knots)[:, 1]
    return TransportMap1to2(
        method="alt",
        n=n,
        s=s,
        hist=h,
        first=tmap.first,
        second=PwlCurve(x=knots, y=values),
        alt_terms=tuple(terms),
    )


def build_map(h: HistogramD, s: int, method: str) -> TransportMap1to2:
    """Dispatch to the requested construction."""
    builders = {"linewise": build_linewise_map, "standard": build_2d_map, "alt": build_alt_2d_map}
    if method not in builders:
        raise ValueError(f"unknown method {method!r}")
    return builders[method](h, s)


def _intersection_length(a: list[Interval], b: list[Interval]) -> float:
    parts = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i].lo, b[j].lo)
        hi = min(a[i].hi, b[j].hi)
        if hi > lo:
            parts.append(hi - lo)
        if a[i].hi < b[j].hi:
            i += 1
        else:
            j += 1
    return math.fsum(parts)


def map_cell_mass(tmap: TransportMap1to2, cell) -> float:
    """Exact noise measure of ``{x : M(x) in cell}`` for a rectangle.

    Both component preimages are computed as interval lists on the flattened
    curves and intersected, so the result is exact interval arithmetic, not
    an estimate.
    """
    if isinstance(cell, Cell):
        (x0, y0), (x1, y1) = cell.lower, cell.upper
    else:
        (x0, y0), (x1, y1) = cell
    if not (x0 <= x1 and y0 <= y1):
        raise ValueError(f"degenerate cell [{x0},{x1}] x [{y0},{y1}]")
    pre_x = preimage_intervals(tmap.first, (x0, x1))
    pre_y = preimage_intervals(tmap.second, (y0, y1))
    return _intersection_length(pre_x, pre_y)


def _bin_pieces(curve: PwlCurve, t0: float, t1: float, ny: int, row: np.ndarray) -> None:
    """Distribute the noise measure of ``[t0, t1]`` over ny value bins."""
    x, y = curve.x, curve.y
    i0 = max(int(np.searchsorted(x, t0, side="right")) - 1, 0)
    i1 = min(int(np.searchsorted(x, t1, side="left")) - 1, x.size - 2)
    for p in range(i0, i1 + 1):
        u0 = max(float(x[p]), t0)
        u1 = min(float(x[p + 1]), t1)
        if u1 <= u0:
            continue
        span = x[p + 1] - x[p]
        v0 = y[p] + (y[p + 1] - y[p]) * (u0 - x[p]) / span
        v1 = y[p] + (y[p + 1] - y[p]) * (u1 - x[p]) / span
        lo, hi = (v0, v1) if v0 <= v1 else (v1, v0)
        length = u1 - u0
        if hi - lo <= 1e-15:
            mid = min(max(0.5 * (lo + hi), 0.0), np.nextafter(1.0, 0.0))
            row[int(mid * ny)] += length
            continue
        b0 = max(int(np.floor(lo * ny)), 0)
        b1 = min(int(np.ceil(hi * ny)), ny)
        for b in range(b0, b1):
            overlap = min(hi, (b + 1) / ny) - max(lo, b / ny)
            if overlap > 0.0:
                row[b] += length * overlap / (hi - lo)


def fine_grid_masses(tmap: TransportMap1to2, nx: int, ny: int) -> np.ndarray:
    """Pushforward masses of all cells of a regular nx-by-ny grid.

    One sweep over the second-component pieces per x-column, so the whole
    grid costs about as much as a handful of single-cell queries.
    """
    out = np.zeros((nx, ny))
    for i in range(nx):
        for iv in preimage_intervals(tmap.first, (i / nx, (i + 1) / nx)):
            if iv.length > 0.0:
                _bin_pieces(tmap.second, iv.lo, iv.hi, ny, out[i])
    return out


def histogram_grid_masses(h: HistogramD, nx: int, ny: int) -> np.ndarray:
    """Target masses of the same regular grid, by exact overlap products."""
    if h.dim != 2:
        raise ValueError("expected a 2-D histogram")
    edges = np.arange(h.n + 1) / h.n

    def overlaps(m):
        fine = np.arange(m + 1) / m
        return np.clip(
            np.minimum(fine[None, 1:], edges[1:, None]) - np.maximum(fine[None, :-1], edges[:-1, None]),
            0.0,
            None,
        )

    return overlaps(nx).T @ h.weights @ overlaps(ny)


def check_cell_masses(tmap: TransportMap1to2) -> tuple[float, int]:
    """Max pushforward-vs-target error over the construction's exact grid.

    Standard: tooth-scale grid ``n 2^(s-1)`` squared.  Line-wise: full-tooth
    columns by ``n 2^(s-1)`` rows.  Alt: the n-by-n tile grid (the scale at
    which its masses are exact for every s).
    """
    n, s = tmap.n, tmap.s
    if tmap.method == "standard":
        nx = ny = n * 2 ** (s - 1)
    elif tmap.method == "linewise":
        nx, ny = 2 ** (s - 1), n * 2 ** (s - 1)
    else:
        nx = ny = n
    got = fine_grid_masses(tmap, nx, ny)
    want = histogram_grid_masses(tmap.hist, nx, ny)
    return float(np.max(np.abs(got - want))), got.size


def alt_fine_deviation(tmap: TransportMap1to2) -> float:
    """Max pushforward-vs-target error on the quarter-tile (2n by 2n) grid.

    The alt construction is exact on whole tiles at every order; below tile
    scale the lifting ramps compress their teeth by ``2^s/(1+2^s)``, leaving
    a deviation proportional to ``1/(1+2^s)`` that halves as ``s`` grows.
    """
    if tmap.method != "alt":
        raise ValueError("fine deviation tracking is specific to the alt construction")
    got = fine_grid_masses(tmap, 2 * tmap.n, 2 * tmap.n)
    want = histogram_grid_masses(tmap.hist, 2 * tmap.n, 2 * tmap.n)
    return float(np.max(np.abs(got - want)))


def max_forward_error(tmap: TransportMap1to2, net: ReluNetwork, count: int = 10_000, seed: int = 42) -> float:
    """Worst |network - symbolic map| over random and dyadic grid points."""
    rng = np.random.default_rng(seed)
    x = np.concatenate([rng.random(count), np.arange(2 ** (tmap.s + 2) + 1) / 2 ** (tmap.s + 2)])
    return float(np.max(np.abs(eval_network(net, x) - tmap.evaluate_symbolic(x))))


def _g_delta_network(s: int, a: float, b: float, n: int) -> ReluNetwork:
    """Depth ``s+1`` network for ``g_s((x - a)/(b - a)) / n``.

    The input rescaling is absorbed into the first affine layer and the
    amplitude into the last, so no extra layers are spent.
    """
    w = b - a
    first = AffineLayer(A=[[1.0 / w]] * 3, b=[-a / w, -a / w - 0.5, -a / w - 1.0])
    row = [2.0, -4.0, 2.0]
    middle = AffineLayer(A=[row, row, row], b=[0.0, -0.5, -1.0])
    last = AffineLayer(A=[[2.0 / n, -4.0 / n, 2.0 / n]], b=[0.0])
    return ReluNetwork(layers=(first,) + (middle,) * (s - 1) + (last,))


def _ramp_network(bt: float, b: float, n: int) -> ReluNetwork:
    """Two-layer net for the saturating ramp ``(rho(x-bt) - rho(x-b))/(n(b-bt))``."""
    c = 1.0 / (n * (b - bt))
    first = AffineLayer(A=[[1.0], [1.0]], b=[-bt, -b])
    last = AffineLayer(A=[[c, -c]], b=[0.0])
    return ReluNetwork(layers=(first, last))


def lower_to_network(tmap: TransportMap1to2) -> ReluNetwork:
    """Exact ReLU network realization of a transport map.

    Line-wise maps lower to depth ``s+3``, the standard and alt maps to
    depth ``s+5``; connectivity stays within `connectivity_bound`.
    """
    n, s = tmap.n, tmap.s
    if tmap.method == "linewise":
        branch = compose(make_pwl_network(tmap.f_line), make_gs_network(s))
        branch = extend_depth(branch, s + 3)
        ident = extend_depth(make_identity_network(), s + 3)
        net = parallelize([ident, branch])
    elif tmap.method == "standard":
        branches = []
        for i in range(n):
            inner = make_pwl_network(tmap.f_marg, scale=float(n), shift=float(-i))
            mid = compose(make_gs_network(s), inner)
            branches.append(compose(make_pwl_network(tmap.conditionals[i]), mid))
        second = extend_depth(sum_networks(branches), s + 5)
        first = extend_depth(make_pwl_network(tmap.f_marg), s + 5)
        net = parallelize([first, second])
    else:
        first_fn = PwlFunction.from_curve(tmap.first)
        first = extend_depth(make_pwl_network(first_fn), s + 5)
        term_nets = []
        for kind, a, b, _ix, _iy in tmap.alt_terms:
            if kind == "g":
                term_nets.append(_g_delta_network(s, a, b, n))
            else:
                bt = h_delta_split(s, a, b)
                teeth = _g_delta_network(s, a, bt, n)
                ramp = extend_depth(_ramp_network(bt, b, n), s + 1)
                term_nets.append(sum_networks([teeth, ramp]))
        second = extend_depth(sum_networks(term_nets), s + 5)
        net = parallelize([first, second])
    want_depth = claimed_depth(s, tmap.method)
    if depth(net) != want_depth:
        raise AssertionError(f"lowered to depth {depth(net)}, expected {want_depth}")
    bound = connectivity_bound(n, s, tmap.method)
    if connectivity(net) > bound:
        raise AssertionError(f"connectivity {connectivity(net)} exceeds the bound {bound}")
    return net


def wasserstein_upper_bound(
    n: int, s: int, method: str = "standard", lipschitz: float | None = None, dim: int = 2
) -> float:
    """Closed-form Wasserstein guarantee of a construction.

    "linewise", "standard" and "alt" bound the distance between the network
    pushforward and the histogram; "combined" adds the quantization term
    ``L sqrt(2) / (2n)`` and therefore needs the density's Lipschitz bound.
    """
    if n < 1 or s < 1:
        raise ValueError("parameters must be positive")
    if method == "linewise":
        return 2.0 * math.sqrt(2.0) / 2**s
    if method == "standard":
        return 2.0 * math.sqrt(2.0) / (n * 2**s)
    if method == "alt":
        return math.sqrt(dim) / (n * 2**s)
    if method == "combined":
        if lipschitz is None:
            raise ValueError("the combined bound needs the density's Lipschitz constant")
        return lipschitz * math.sqrt(2.0) / (2.0 * n) + 2.0 * math.sqrt(2.0) / (n * 2**s)
    raise ValueError(f"unknown method {method!r}")


def connectivity_bound(n: int, s: int, method: str) -> int:
    """Connectivity cap the lowered network is checked against."""
    if method == "linewise":
        return 6 * n + 24 * s + 2
    if method in ("standard", "alt"):
        return 88 * (n * n + n * s)
    raise ValueError(f"unknown method {method!r}")


def claimed_depth(s: int, method: str) -> int:
    """Exact depth of the lowered network."""
    if method == "linewise":
        return s + 3
    if method in ("standard", "alt"):
        return s + 5
    raise ValueError(f"unknown method {method!r}")
