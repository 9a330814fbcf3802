"""Tests for density specs, quantization, and histogram mass bookkeeping."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relugen import (
    DensitySpec,
    GeneralHistogram1D,
    HistogramD,
    cell_mass_histogram,
    conditional_y,
    marginal_x,
    quantize_density,
    tv_distance,
)
from oracles import ramp_quantization_tv, ramp_quantized_weights


def _random_density_2d(rng, m=24, lipschitz=50.0):
    values = rng.uniform(0.2, 2.0, size=(m, m))
    values /= values.mean()
    return DensitySpec(values=values, lipschitz=lipschitz)


class TestDensitySpec:
    """Built-in densities and their invariants."""

    def test_uniform(self):
        spec = DensitySpec.from_builtin("uniform", m=16)
        assert spec.dim == 2
        assert spec.lipschitz == 0.0
        np.testing.assert_array_equal(spec.values, np.ones((16, 16)))

    def test_ramp(self):
        spec = DensitySpec.from_builtin("ramp", m=10)
        assert spec.dim == 1
        assert spec.lipschitz == 1.0
        centers = (np.arange(10) + 0.5) / 10
        np.testing.assert_allclose(spec.values, centers + 0.5, rtol=0, atol=1e-15)

    def test_cosine_bump(self):
        spec = DensitySpec.from_builtin("cosine_bump", m=48, alpha=0.5)
        assert spec.dim == 2
        np.testing.assert_allclose(spec.lipschitz, 0.5 * np.pi)
        assert np.min(spec.values) > 0.0
        assert abs(np.mean(spec.values) - 1.0) < 1e-6

    def test_cosine_bump_alpha_range(self):
        with pytest.raises(ValueError):
            DensitySpec.from_builtin("cosine_bump", alpha=1.2)

    def test_unknown_builtin(self):
        with pytest.raises(ValueError):
            DensitySpec.from_builtin("volcano")

    def test_unnormalized_rejected(self):
        with pytest.raises(ValueError):
            DensitySpec(values=np.full((8, 8), 1.5), lipschitz=0.0)

    def test_json_round_trip(self):
        spec = DensitySpec.from_builtin("cosine_bump", m=12, alpha=0.25)
        back = DensitySpec.from_json(spec.to_json())
        np.testing.assert_array_equal(back.values, spec.values)
        assert back.lipschitz == spec.lipschitz


class TestQuantizeDensity:
    """Block-mean quantization onto an n-tiling."""

    def test_ramp_closed_form(self):
        spec = DensitySpec.from_builtin("ramp", m=240)
        h = quantize_density(spec, 2)
        np.testing.assert_allclose(h.weights, [0.75, 1.25], rtol=0, atol=1e-12)
        for n in (4, 8, 16):
            h = quantize_density(spec, n)
            np.testing.assert_allclose(
                h.weights, ramp_quantized_weights(n), rtol=0, atol=1e-12
            )

    def test_uniform_fixed_point(self):
        h = quantize_density(DensitySpec.from_builtin("uniform", m=32), 8)
        np.testing.assert_array_equal(h.weights, np.ones((8, 8)))

    def test_grid_divisibility(self):
        spec = DensitySpec.from_builtin("ramp", m=240)
        with pytest.raises(ValueError):
            quantize_density(spec, 7)

    def test_mass_preserved(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            spec = _random_density_2d(rng)
            h = quantize_density(spec, 8)
            assert abs(math.fsum(h.weights.ravel()) - 64.0) < 1e-9


class TestTvDistance:
    """Total variation between densities and histograms."""

    def test_half_split_example(self):
        uni = GeneralHistogram1D(np.array([0.0, 1.0]), np.array([1.0]))
        two = GeneralHistogram1D(np.array([0.0, 0.5, 1.0]), np.array([0.5, 1.5]))
        np.testing.assert_allclose(tv_distance(uni, two), 0.25)
        np.testing.assert_allclose(tv_distance(two, uni), 0.25)

    def test_self_distance_zero(self):
        two = GeneralHistogram1D(np.array([0.0, 0.5, 1.0]), np.array([0.5, 1.5]))
        assert tv_distance(two, two) == 0.0

    def test_ramp_quantization_closed_form(self):
        # 32 | m puts every kink of |p - p_tilde| on a midpoint-grid boundary,
        # so the quadrature is exact for the piecewise linear integrand.
        spec = DensitySpec.from_builtin("ramp", m=480)
        for n in (4, 8, 16):
            tv = tv_distance(spec, quantize_density(spec, n))
            np.testing.assert_allclose(tv, ramp_quantization_tv(n), rtol=0, atol=1e-12)

    def test_ramp_quantization_default_grid(self):
        spec = DensitySpec.from_builtin("ramp", m=240)
        for n in (4, 8, 16):
            tv = tv_distance(spec, quantize_density(spec, n))
            np.testing.assert_allclose(tv, ramp_quantization_tv(n), rtol=0, atol=1e-4)

    def test_quantization_bound_2d(self):
        rng = np.random.default_rng(42)
        spec = _random_density_2d(rng, m=24, lipschitz=60.0)
        for n in (4, 8):
            tv = tv_distance(spec, quantize_density(spec, n))
            assert 0.0 <= tv <= spec.lipschitz * math.sqrt(2.0) / (2 * n) + 1e-12


class TestHistogramD:
    """Uniform-tiling histogram validation and cell iteration."""

    def test_weight_sum_enforced(self):
        with pytest.raises(ValueError):
            HistogramD(weights=np.array([1.0, 2.0]))

    def test_positive_weights_enforced(self):
        with pytest.raises(ValueError):
            HistogramD(weights=np.array([[2.0, 0.0], [1.0, 1.0]]))

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            HistogramD(weights=np.ones((2, 3)))

    def test_cells_cover_unit_square(self):
        h = HistogramD(weights=np.ones((3, 3)))
        cells = list(h.cells())
        assert len(cells) == 9
        np.testing.assert_allclose(math.fsum(c.volume() for c in cells), 1.0)

    def test_to_general_masses(self):
        h = HistogramD(weights=np.array([0.5, 1.5]))
        g = h.to_general()
        np.testing.assert_allclose(g.mass(0.0, 0.5), 0.25)
        np.testing.assert_allclose(g.mass(0.5, 1.0), 0.75)


class TestGeneralHistogram1D:
    """Histograms on arbitrary breakpoint grids."""

    def test_cdf_knots(self):
        g = GeneralHistogram1D(np.array([0.0, 0.25, 1.0]), np.array([2.0, 2.0 / 3.0]))
        t, c = g.cdf_knots()
        np.testing.assert_array_equal(t, [0.0, 0.25, 1.0])
        np.testing.assert_allclose(c, [0.0, 0.5, 1.0], rtol=0, atol=1e-15)
        assert c[-1] == 1.0

    def test_mass_query(self):
        g = GeneralHistogram1D(np.array([0.0, 0.5, 1.0]), np.array([0.5, 1.5]))
        np.testing.assert_allclose(g.mass(0.0, 0.5), 0.25)
        np.testing.assert_allclose(g.mass(0.25, 0.75), 0.5)
        np.testing.assert_allclose(g.mass(-1.0, 2.0), 1.0)

    def test_span_validation(self):
        with pytest.raises(ValueError):
            GeneralHistogram1D(np.array([0.0, 0.5, 0.9]), np.array([1.0, 1.0]))

    def test_mass_validation(self):
        with pytest.raises(ValueError):
            GeneralHistogram1D(np.array([0.0, 0.5, 1.0]), np.array([1.0, 2.0]))


class TestMarginalConditional:
    """Row marginal and per-row conditionals of a 2-D histogram."""

    def test_checkerboard_example(self):
        h = HistogramD(weights=np.array([[0.5, 1.5], [1.5, 0.5]]))
        np.testing.assert_allclose(marginal_x(h).weights, [1.0, 1.0])
        np.testing.assert_allclose(conditional_y(h, 0).weights, [0.5, 1.5])
        np.testing.assert_allclose(conditional_y(h, 1).weights, [1.5, 0.5])

    def test_factorization_identity(self):
        rng = np.random.default_rng(42)
        w = rng.uniform(0.2, 2.0, size=(4, 4))
        w *= 16.0 / math.fsum(w.ravel())
        h = HistogramD(weights=w)
        marg = marginal_x(h).weights
        for i in range(4):
            cond = conditional_y(h, i).weights
            np.testing.assert_allclose(marg[i] * cond, w[i], rtol=0, atol=1e-12)

    @given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=10**9))
    @settings(max_examples=25, deadline=None)
    def test_conditional_is_histogram(self, n, seed):
        rng = np.random.default_rng(seed)
        w = rng.uniform(0.1, 3.0, size=(n, n))
        w *= n * n / math.fsum(w.ravel())
        h = HistogramD(weights=w)
        for i in range(n):
            cond = conditional_y(h, i)
            assert abs(math.fsum(cond.weights) - n) < 1e-9


class TestCellMassHistogram:
    """Exact rectangle masses under a tiled histogram."""

    def test_checkerboard_quarter(self):
        h = HistogramD(weights=np.array([[0.5, 1.5], [1.5, 0.5]]))
        np.testing.assert_allclose(
            cell_mass_histogram(h, ((0.0, 0.0), (0.5, 0.5))), 0.125
        )

    def test_full_square(self):
        h = HistogramD(weights=np.array([[0.5, 1.5], [1.5, 0.5]]))
        np.testing.assert_allclose(cell_mass_histogram(h, ((0.0, 0.0), (1.0, 1.0))), 1.0)

    def test_matches_direct_sum(self):
        rng = np.random.default_rng(42)
        w = rng.uniform(0.2, 2.0, size=(5, 5))
        w *= 25.0 / math.fsum(w.ravel())
        h = HistogramD(weights=w)
        for _ in range(25):
            lo = rng.uniform(0.0, 0.8, size=2)
            hi = lo + rng.uniform(0.05, 1.0 - np.max(lo), size=2)
            direct = 0.0
            for i in range(5):
                for j in range(5):
                    ox = max(0.0, min(hi[0], (i + 1) / 5) - max(lo[0], i / 5))
                    oy = max(0.0, min(hi[1], (j + 1) / 5) - max(lo[1], j / 5))
                    direct += w[i, j] * ox * oy
            got = cell_mass_histogram(h, (tuple(lo), tuple(hi)))
            np.testing.assert_allclose(got, direct, rtol=0, atol=1e-14)

    def test_out_of_domain_rejected(self):
        h = HistogramD(weights=np.ones((2, 2)))
        with pytest.raises(ValueError):
            cell_mass_histogram(h, ((0.0, 0.0), (1.5, 1.0)))
