"""Tests for the noise-to-square transport maps and their lowerings."""

import math

import numpy as np
import pytest

from relugen import (
    HistogramD,
    PwlCurve,
    TransportMap1to2,
    alt_fine_deviation,
    build_alt_2d_map,
    build_linewise_map,
    build_map,
    build_2d_map,
    cell_mass_histogram,
    check_cell_masses,
    claimed_depth,
    connectivity,
    connectivity_bound,
    depth,
    eval_g_delta,
    eval_gs,
    eval_h_delta,
    fine_grid_masses,
    histogram_grid_masses,
    lower_to_network,
    map_cell_mass,
    max_forward_error,
    snake_cells,
    snake_rank,
    wasserstein_upper_bound,
)
from oracles import sampled_grid_masses


def _random_histogram(rng, n):
    w = rng.uniform(0.2, 2.0, size=(n, n))
    w *= n * n / math.fsum(w.ravel())
    return HistogramD(weights=w)


def _checkerboard():
    return HistogramD(weights=np.array([[0.5, 1.5], [1.5, 0.5]]))


def _identity_pair_map():
    line = PwlCurve(x=np.array([0.0, 1.0]), y=np.array([0.0, 1.0]))
    return TransportMap1to2(
        method="linewise",
        n=1,
        s=1,
        hist=HistogramD(weights=np.ones((1, 1))),
        first=line,
        second=line,
    )


class TestSnakeOrder:
    """Boustrophedon ranking of grid cells."""

    def test_worked_ranks(self):
        assert snake_rank(2, (0, 0)) == 0
        assert snake_rank(2, (1, 0)) == 1
        assert snake_rank(2, (1, 1)) == 2
        assert snake_rank(2, (0, 1)) == 3
        assert snake_rank(3, (2, 1)) == 3

    def test_bijective(self):
        for n in range(1, 17):
            ranks = sorted(snake_rank(n, (i, j)) for i in range(n) for j in range(n))
            assert ranks == list(range(n * n))

    def test_cells_inverse(self):
        for n in (2, 3, 5):
            cells = snake_cells(n)
            assert [snake_rank(n, c) for c in cells] == list(range(n * n))

    def test_adjacent_ranks_are_neighbors(self):
        cells = snake_cells(4)
        for a, b in zip(cells[:-1], cells[1:]):
            assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            snake_rank(2, (2, 0))


class TestLinewiseMap:
    """x -> (x, f(g_s(x))) for targets constant along x."""

    def test_uniform_second_is_sawtooth(self):
        h = HistogramD(weights=np.ones((2, 2)))
        tmap = build_linewise_map(h, s=3)
        x = np.linspace(0.0, 1.0, 2001)
        np.testing.assert_allclose(tmap.second(x), eval_gs(3, x), rtol=0, atol=1e-15)
        np.testing.assert_array_equal(tmap.first(x), x)

    def test_half_split_tooth_masses(self):
        n, s = 2, 4
        h = HistogramD(weights=np.tile([0.5, 1.5], (n, 1)))
        tmap = build_linewise_map(h, s)
        cols = n * 2 ** (s - 1)
        masses = fine_grid_masses(tmap, cols, n)
        expected = np.tile(h.weights[0] / (n * n * 2 ** (s - 1)), (cols, 1))
        np.testing.assert_allclose(masses, expected, rtol=0, atol=1e-12)

    def test_x_varying_weights_rejected(self):
        with pytest.raises(ValueError):
            build_linewise_map(_checkerboard(), s=3)

    def test_symbolic_agrees_with_curves(self):
        h = HistogramD(weights=np.tile([0.5, 1.0, 1.5], (3, 1)))
        tmap = build_linewise_map(h, s=4)
        x = np.linspace(0.0, 1.0, 4001)
        np.testing.assert_allclose(
            tmap.evaluate(x), tmap.evaluate_symbolic(x), rtol=0, atol=1e-12
        )


class TestStandardMap:
    """x -> (f_marg(x), sum_i f_i(g_s(n f_marg(x) - i)))."""

    def test_checkerboard_cell_masses(self):
        n, s = 2, 3
        tmap = build_2d_map(_checkerboard(), s)
        fine = n * 2 ** (s - 1)
        masses = fine_grid_masses(tmap, fine, fine)
        block = np.ones((2 ** (s - 1), 2 ** (s - 1)))
        expected = np.kron(_checkerboard().weights, block) / (2 ** (2 * s - 2) * n * n)
        np.testing.assert_allclose(masses, expected, rtol=0, atol=1e-12)

    def test_check_cell_masses_exact(self):
        rng = np.random.default_rng(42)
        for n, s in ((2, 3), (4, 4)):
            tmap = build_2d_map(_random_histogram(rng, n), s)
            err, count = check_cell_masses(tmap)
            assert count == n * n * 2 ** (2 * s - 2)
            assert err <= 1e-10

    def test_single_cell_reduces_to_linewise(self):
        h = HistogramD(weights=np.ones((1, 1)))
        s = 3
        std = build_2d_map(h, s)
        line = build_linewise_map(h, s)
        x = np.linspace(0.0, 1.0, 3001)
        np.testing.assert_allclose(std.evaluate(x), line.evaluate(x), rtol=0, atol=1e-12)

    def test_symbolic_agrees_with_curves(self):
        rng = np.random.default_rng(42)
        tmap = build_2d_map(_random_histogram(rng, 3), s=3)
        x = np.linspace(0.0, 1.0, 5001)
        np.testing.assert_allclose(
            tmap.evaluate(x), tmap.evaluate_symbolic(x), rtol=0, atol=1e-12
        )

    def test_noise_intervals_match_marginal(self):
        tmap = build_2d_map(_checkerboard(), s=2)
        lengths = [iv.length for iv in tmap.noise_intervals()]
        np.testing.assert_allclose(math.fsum(lengths), 1.0, rtol=0, atol=1e-15)
        np.testing.assert_allclose(lengths[:1], [0.5])

    def test_sampled_mass_oracle(self):
        tmap = build_2d_map(_checkerboard(), s=3)
        exact = fine_grid_masses(tmap, 4, 4)
        approx = sampled_grid_masses(tmap.evaluate, 4, 4, count=1 << 19)
        np.testing.assert_allclose(approx, exact, rtol=0, atol=2e-3)


class TestAltMap:
    """Boustrophedon construction on power-of-two grids."""

    def test_uniform_first_curve_zigzag(self):
        h = HistogramD(weights=np.ones((2, 2)))
        tmap = build_alt_2d_map(h, s=2)
        knots = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        np.testing.assert_allclose(
            tmap.first(knots), [0.0, 0.5, 1.0, 0.5, 0.0], rtol=0, atol=1e-15
        )

    def test_term_layout(self):
        h = HistogramD(weights=np.ones((4, 4)))
        tmap = build_alt_2d_map(h, s=2)
        kinds = [term[0] for term in tmap.alt_terms]
        assert [i for i, k in enumerate(kinds) if k == "h"] == [3, 7, 11]
        assert all(k == "g" for i, k in enumerate(kinds) if i not in (3, 7, 11))

    def test_second_curve_matches_term_sum(self):
        rng = np.random.default_rng(42)
        for h, s in ((HistogramD(weights=np.ones((2, 2))), 3), (_random_histogram(rng, 4), 2)):
            tmap = build_alt_2d_map(h, s)
            x = np.unique(np.concatenate([tmap.second.x, np.linspace(0.0, 1.0, 2003)]))
            manual = np.zeros_like(x)
            for kind, a, b, _ix, _iy in tmap.alt_terms:
                if kind == "g":
                    manual = manual + eval_g_delta(s, a, b, h.n, x)
                else:
                    manual = manual + eval_h_delta(s, a, b, h.n, x)
            np.testing.assert_allclose(tmap.second(x), manual, rtol=0, atol=1e-12)

    def test_uniform_quarter_masses(self):
        h = HistogramD(weights=np.ones((2, 2)))
        for s in (2, 4):
            tmap = build_alt_2d_map(h, s)
            masses = fine_grid_masses(tmap, 2, 2)
            np.testing.assert_allclose(masses, np.full((2, 2), 0.25), rtol=0, atol=1e-12)

    def test_tile_masses_exact_random(self):
        rng = np.random.default_rng(42)
        for n in (2, 4):
            tmap = build_alt_2d_map(_random_histogram(rng, n), s=3)
            err, count = check_cell_masses(tmap)
            assert count == n * n
            assert err <= 1e-12

    def test_fine_deviation_closed_form_uniform(self):
        for n, s in ((2, 2), (4, 3)):
            tmap = build_alt_2d_map(HistogramD(weights=np.ones((n, n))), s)
            dev = alt_fine_deviation(tmap)
            np.testing.assert_allclose(dev, 1.0 / (4 * n * n * (1 + 2**s)), rtol=1e-12)

    def test_fine_deviation_halves(self):
        h = HistogramD(weights=np.ones((2, 2)))
        devs = [alt_fine_deviation(build_alt_2d_map(h, s)) for s in range(2, 6)]
        ratios = np.array(devs[1:]) / np.array(devs[:-1])
        assert np.all(ratios <= 0.6)

    def test_power_of_two_required(self):
        rng = np.random.default_rng(42)
        with pytest.raises(ValueError):
            build_alt_2d_map(_random_histogram(rng, 3), s=2)

    def test_sampled_mass_oracle(self):
        rng = np.random.default_rng(42)
        tmap = build_alt_2d_map(_random_histogram(rng, 2), s=2)
        exact = fine_grid_masses(tmap, 2, 2)
        approx = sampled_grid_masses(tmap.evaluate, 2, 2, count=1 << 19)
        np.testing.assert_allclose(approx, exact, rtol=0, atol=2e-3)


class TestBuildMapDispatch:
    """Method dispatch and validation."""

    def test_dispatch(self):
        h = HistogramD(weights=np.ones((2, 2)))
        assert build_map(h, 2, "linewise").method == "linewise"
        assert build_map(h, 2, "standard").method == "standard"
        assert build_map(h, 2, "alt").method == "alt"

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            build_map(HistogramD(weights=np.ones((2, 2))), 2, "diagonal")

    def test_order_validation(self):
        with pytest.raises(ValueError):
            build_map(HistogramD(weights=np.ones((2, 2))), 0, "standard")


class TestMassQueries:
    """Exact rectangle masses through curve preimages."""

    def test_identity_pair_quarter(self):
        tmap = _identity_pair_map()
        np.testing.assert_allclose(map_cell_mass(tmap, ((0.0, 0.0), (0.5, 0.5))), 0.5)

    def test_identity_pair_off_diagonal(self):
        tmap = _identity_pair_map()
        np.testing.assert_allclose(map_cell_mass(tmap, ((0.5, 0.0), (1.0, 0.5))), 0.0)

    def test_full_square_is_one(self):
        rng = np.random.default_rng(42)
        for method in ("linewise", "standard", "alt"):
            if method == "linewise":
                row = rng.uniform(0.5, 1.5, 2)
                row *= 2.0 / math.fsum(row)
                h = HistogramD(weights=np.tile(row, (2, 1)))
            else:
                h = _random_histogram(rng, 2)
            tmap = build_map(h, 3, method)
            np.testing.assert_allclose(
                map_cell_mass(tmap, ((0.0, 0.0), (1.0, 1.0))), 1.0, rtol=0, atol=1e-12
            )

    def test_coarse_tiles_match_histogram(self):
        rng = np.random.default_rng(42)
        h = _random_histogram(rng, 4)
        tmap = build_2d_map(h, s=3)
        for cell in h.cells():
            got = map_cell_mass(tmap, cell)
            want = cell_mass_histogram(h, cell)
            np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)

    def test_fine_grid_consistent_with_single_queries(self):
        rng = np.random.default_rng(42)
        tmap = build_2d_map(_random_histogram(rng, 2), s=2)
        grid = fine_grid_masses(tmap, 3, 5)
        for i in (0, 2):
            for j in (1, 4):
                cell = ((i / 3, j / 5), ((i + 1) / 3, (j + 1) / 5))
                np.testing.assert_allclose(
                    grid[i, j], map_cell_mass(tmap, cell), rtol=0, atol=1e-14
                )

    def test_histogram_grid_masses(self):
        rng = np.random.default_rng(42)
        h = _random_histogram(rng, 4)
        grid = histogram_grid_masses(h, 3, 7)
        for i in (0, 1, 2):
            for j in (0, 3, 6):
                cell = ((i / 3, j / 7), ((i + 1) / 3, (j + 1) / 7))
                np.testing.assert_allclose(
                    grid[i, j], cell_mass_histogram(h, cell), rtol=0, atol=1e-14
                )


class TestLowering:
    """Transport maps compiled to explicit ReLU networks."""

    def test_linewise_lowering(self):
        h = HistogramD(weights=np.tile([0.5, 1.5], (2, 1)))
        for s in (2, 4):
            tmap = build_linewise_map(h, s)
            net = lower_to_network(tmap)
            assert depth(net) == claimed_depth(s, "linewise") == s + 3
            assert connectivity(net) <= connectivity_bound(2, s, "linewise")
            assert max_forward_error(tmap, net, count=2000) <= 1e-9

    def test_standard_lowering(self):
        rng = np.random.default_rng(42)
        for n, s in ((2, 3), (4, 4)):
            tmap = build_2d_map(_random_histogram(rng, n), s)
            net = lower_to_network(tmap)
            assert depth(net) == claimed_depth(s, "standard") == s + 5
            assert connectivity(net) <= connectivity_bound(n, s, "standard")
            assert max_forward_error(tmap, net, count=2000) <= 1e-9

    def test_alt_lowering(self):
        rng = np.random.default_rng(42)
        for n, s in ((2, 2), (4, 3)):
            tmap = build_alt_2d_map(_random_histogram(rng, n), s)
            net = lower_to_network(tmap)
            assert depth(net) == claimed_depth(s, "alt") == s + 5
            assert connectivity(net) <= connectivity_bound(n, s, "alt")
            assert max_forward_error(tmap, net, count=2000) <= 1e-9


class TestBounds:
    """Closed-form guarantees reported alongside compiled networks."""

    def test_wasserstein_worked_values(self):
        np.testing.assert_allclose(
            wasserstein_upper_bound(4, 6, "standard"), 2.0 * math.sqrt(2.0) / 256.0
        )
        np.testing.assert_allclose(
            wasserstein_upper_bound(4, 6, "linewise"), 2.0 * math.sqrt(2.0) / 64.0
        )
        np.testing.assert_allclose(
            wasserstein_upper_bound(4, 6, "alt"), math.sqrt(2.0) / 256.0
        )

    def test_combined_bound(self):
        lip = 0.5 * math.pi
        want = lip * math.sqrt(2.0) / 8.0 + 2.0 * math.sqrt(2.0) / 256.0
        np.testing.assert_allclose(
            wasserstein_upper_bound(4, 6, "combined", lipschitz=lip), want
        )

    def test_combined_needs_lipschitz(self):
        with pytest.raises(ValueError):
            wasserstein_upper_bound(4, 6, "combined")

    def test_connectivity_bounds(self):
        assert connectivity_bound(2, 3, "linewise") == 6 * 2 + 24 * 3 + 2
        assert connectivity_bound(8, 8, "standard") == 88 * (64 + 64) == 11264
        assert connectivity_bound(4, 6, "alt") == 88 * (16 + 24)

    def test_claimed_depths(self):
        assert claimed_depth(6, "linewise") == 9
        assert claimed_depth(6, "standard") == 11
        assert claimed_depth(6, "alt") == 11
