"""Spectral core: derivatives, means, antiderivatives, inner products."""

import numpy as np
import pytest

import screwbif as sb
from screwbif.errors import GridMismatchError, MeanError, ParityError
from screwbif.spectral import (
    ScalarField,
    cos_coefficients,
    field_from_cos,
    field_from_sin,
    mode_amplitudes,
    random_field,
    sin_coefficients,
)


@pytest.fixture
def grid():
    return sb.Grid(1.0, 256)


def cos_mode(grid, l, amp=1.0):
    return ScalarField(grid, amp * np.cos(l * grid.s / grid.R), "even",
                       mean_free=(l > 0))


def sin_mode(grid, l, amp=1.0):
    return ScalarField(grid, amp * np.sin(l * grid.s / grid.R), "odd")


class TestDifferentiate:
    def test_single_mode(self, grid):
        for l in (1, 5, 12):
            d = sb.differentiate(cos_mode(grid, l))
            ref = -(l / grid.R) * np.sin(l * grid.s / grid.R)
            assert np.max(np.abs(d.values - ref)) < 1e-12 * l

    def test_mode_on_wide_circle(self):
        grid = sb.Grid(2.0, 128)
        d = sb.differentiate(cos_mode(grid, 3))
        ref = -(3 / 2.0) * np.sin(3 * grid.s / 2.0)
        assert np.max(np.abs(d.values - ref)) < 1e-13

    def test_constant(self, grid):
        f = ScalarField(grid, 3.0 * np.ones(grid.N), "even")
        assert sb.sup_norm(sb.differentiate(f)) == 0.0

    def test_circle_component_second_derivative(self, grid):
        # x'' = -(1/R^2) x for the first circle component
        x = sb.circle_profile(grid).components[0]
        d2 = sb.differentiate(x, 2)
        assert sb.sup_norm(d2 + x) < 1e-11

    def test_order_cap(self, grid):
        f = cos_mode(grid, 1)
        with pytest.raises(ValueError):
            sb.differentiate(f, 5)
        with pytest.raises(ValueError):
            sb.differentiate(f, 0)

    def test_parity_flip_and_mean(self, grid):
        f = cos_mode(grid, 2)
        d = sb.differentiate(f)
        assert d.parity == "odd"
        assert sb.differentiate(d).parity == "even"
        assert sb.differentiate(f, 2).mean_free
        d = sb.differentiate(f)
        # the zeroth spectral coefficient is zeroed exactly; the nodal mean
        # sees only summation rounding
        assert abs(np.fft.rfft(d.values)[0]) < 1e-13
        assert abs(sb.mean(d)) < 1e-15


class TestMean:
    def test_constant(self, grid):
        f = ScalarField(grid, 3.0 * np.ones(grid.N))
        assert sb.mean(f) == pytest.approx(3.0, abs=0)

    @pytest.mark.parametrize("k", [1, 2, 7])
    def test_zero_mean_harmonic(self, grid, k):
        assert abs(sb.mean(cos_mode(grid, k))) < 1e-15

    def test_kernel_quadratic_mean(self, grid):
        # mean of (first kernel component) * d/ds(second) = k^2 sqrt(k^2-1)/(2R)
        kern = sb.kernel_vector(2, grid)
        f = sb.product(kern.v_perp, sb.differentiate(kern.w))
        assert sb.mean(f) == pytest.approx(2.0 * np.sqrt(3.0), rel=1e-14)


class TestAntiderivative:
    def test_single_mode(self, grid):
        for l in (1, 4):
            g = sb.antiderivative(cos_mode(grid, l))
            ref = (grid.R / l) * np.sin(l * grid.s / grid.R)
            assert np.max(np.abs(g.values - ref)) < 1e-14
            assert g.parity == "odd"

    def test_zero(self, grid):
        z = ScalarField.zeros(grid, "even", mean_free=True)
        assert sb.sup_norm(sb.antiderivative(z)) == 0.0

    def test_kernel_first_order_relation(self, grid):
        # (1/R) * antiderivative of the first kernel component is sin(ks/R):
        # the leading-order tangential reparameterization of the branch
        kern = sb.kernel_vector(2, grid)
        u = sb.antiderivative(kern.v_perp / grid.R)
        assert np.max(np.abs(u.values - np.sin(2 * grid.s))) < 1e-14

    def test_errors(self, grid):
        not_mean_free = ScalarField(grid, 1.0 + np.cos(grid.s), "even")
        with pytest.raises(MeanError):
            sb.antiderivative(not_mean_free)
        odd = sin_mode(grid, 2)
        with pytest.raises(ParityError):
            sb.antiderivative(odd)


class TestH2Inner:
    def test_kernel_norm(self, grid):
        # int k^2 cos^2 + (k^2-1) sin^2 = pi R (2k^2-1), each derivative
        # multiplies by (k/R)^2: norm = pi R (2k^2-1)(1 + k^2/R^2 + k^4/R^4);
        # k=2, R=1 gives 147 pi
        kern = sb.kernel_vector(2, grid)
        val = sb.h2_inner((kern.v_perp, kern.w), (kern.v_perp, kern.w))
        assert val == pytest.approx(147.0 * np.pi, rel=1e-13)

    def test_zero_pair(self, grid):
        z = ScalarField.zeros(grid)
        g1, g2 = cos_mode(grid, 3), sin_mode(grid, 5)
        assert sb.h2_inner((z, z), (g1, g2)) == 0.0

    def test_transversality_pairing_value(self, grid):
        kern = sb.kernel_vector(2, grid)
        lp = sb.apply_linearized_domega(kern.v_perp, kern.w)
        val = sb.h2_inner(lp, (kern.v_perp, kern.w))
        assert val == pytest.approx(-168.0 * np.sqrt(3.0) * np.pi, rel=1e-13)

    def test_grid_mismatch(self, grid):
        other = sb.Grid(1.0, 128)
        f = cos_mode(grid, 1)
        g = cos_mode(other, 1)
        with pytest.raises(GridMismatchError):
            sb.h2_inner((f, f), (g, g))

    def test_symmetric_positive(self, grid):
        rng = np.random.default_rng(7)
        f = (random_field(grid, rng, 30), random_field(grid, rng, 30))
        g = (random_field(grid, rng, 30), random_field(grid, rng, 30))
        assert sb.h2_inner(f, g) == pytest.approx(sb.h2_inner(g, f), rel=1e-12)
        assert sb.h2_inner(f, f) > 0.0
        z = (ScalarField.zeros(grid), ScalarField.zeros(grid))
        assert sb.h2_inner(z, z) == 0.0


class TestInvariants:
    def test_derivative_antiderivative_roundtrip(self, grid):
        rng = np.random.default_rng(11)
        for _ in range(5):
            f = random_field(grid, rng, grid.N // 6, parity="even",
                             mean_free=True)
            back = sb.differentiate(sb.antiderivative(f))
            assert sb.sup_norm(back - f) < 1e-12

    def test_parity_algebra(self, grid):
        rng = np.random.default_rng(13)
        f = random_field(grid, rng, 30, parity="odd")
        g = random_field(grid, rng, 30, parity="odd")
        h = random_field(grid, rng, 30, parity="even")
        assert sb.product(f, g).parity == "even"
        assert sb.product(f, h).parity == "odd"
        assert sb.product(h, h).parity == "even"
        assert sb.differentiate(h).parity == "odd"

    def test_dealias_truncation(self, grid):
        m = grid.dealias_max
        f = cos_mode(grid, m)
        p = sb.product(f, f)  # raw product has mode 2m, above the cutoff
        amps = mode_amplitudes(p)
        assert np.all(amps[m + 1:] < 1e-15)
        assert amps[0] == pytest.approx(0.5, abs=1e-12)

    def test_shift_is_translation(self, grid):
        f = cos_mode(grid, 3)
        g = sb.shift(f, 0.37)
        ref = np.cos(3 * (grid.s + 0.37))
        assert np.max(np.abs(g.values - ref)) < 1e-13


class TestScalarField:
    def test_parity_validation(self, grid):
        with pytest.raises(ParityError):
            ScalarField(grid, np.sin(grid.s), "even")
        with pytest.raises(ParityError):
            ScalarField(grid, np.cos(grid.s), "odd")

    def test_mean_validation(self, grid):
        with pytest.raises(MeanError):
            ScalarField(grid, 1.0 + np.cos(grid.s), "even", mean_free=True)

    def test_odd_forces_mean_free(self, grid):
        f = ScalarField(grid, np.sin(grid.s), "odd")
        assert f.mean_free

    def test_values_read_only(self, grid):
        f = cos_mode(grid, 1)
        with pytest.raises(ValueError):
            f.values[0] = 1.0

    def test_coefficient_roundtrip(self, grid):
        rng = np.random.default_rng(3)
        a = rng.standard_normal(10)
        f = field_from_cos(grid, a)
        assert np.allclose(cos_coefficients(f, 10), a, atol=1e-14)
        b = rng.standard_normal(10)
        g = field_from_sin(grid, b)
        assert np.allclose(sin_coefficients(g, 10), b, atol=1e-14)


def test_grid_validation():
    with pytest.raises(ValueError):
        sb.Grid(1.0, 15)
    with pytest.raises(ValueError):
        sb.Grid(1.0, 17)
    with pytest.raises(ValueError):
        sb.Grid(-1.0, 64)
    g = sb.Grid(1.0, 256)
    assert g.max_mode == 127
    assert g.dealias_max == 85
