"""Circle geometry, residual fields, screw evaluation, orbit distance."""

import math

import numpy as np
import pytest

import screwbif as sb
from screwbif.geometry import _derivative_array, read_curve_csv, write_curve_csv
from screwbif.spectral import ScalarField, random_field


@pytest.fixture
def grid():
    return sb.Grid(1.0, 256)


def random_perturbation(grid, rng, scale=0.1, max_mode=None):
    m = max_mode or grid.N // 8
    return sb.FramePerturbation(
        u=scale * random_field(grid, rng, m, parity="odd"),
        v0=scale * 0.3,
        v_perp=scale * random_field(grid, rng, m, parity="even", mean_free=True),
        w=scale * random_field(grid, rng, m, parity="odd"))


class TestCircleAndFrame:
    def test_circle_at_origin_of_parameter(self, grid):
        x0 = sb.circle_profile(grid).array
        assert np.allclose(x0[:, 0], [1.0, 0.0, 0.0], atol=1e-15)

    def test_circle_radius(self):
        grid = sb.Grid(2.0, 128)
        x0 = sb.circle_profile(grid).array
        assert np.max(np.abs(np.sqrt((x0 ** 2).sum(axis=0)) - 2.0)) < 1e-14

    def test_circle_tangent(self, grid):
        xs = _derivative_array(grid, sb.circle_profile(grid).array)
        assert np.allclose(xs[:, 0], [0.0, 1.0, 0.0], atol=1e-13)

    def test_frame_values_at_zero(self, grid):
        t, n, b = sb.frenet_frame(grid)
        assert np.allclose(t.array[:, 0], [0.0, 1.0, 0.0], atol=1e-15)
        assert np.allclose(n.array[:, 0], [-1.0, 0.0, 0.0], atol=1e-15)
        assert np.allclose(b.array[:, 0], [0.0, 0.0, 1.0], atol=1e-15)

    def test_frame_orthonormal(self, grid):
        t, n, b = (f.array for f in sb.frenet_frame(grid))
        for a, c in ((t, n), (t, b), (n, b)):
            assert np.max(np.abs((a * c).sum(axis=0))) < 1e-14
        for a in (t, n, b):
            assert np.max(np.abs((a * a).sum(axis=0) - 1.0)) < 1e-14

    def test_right_handed(self, grid):
        t, n, b = (f.array for f in sb.frenet_frame(grid))
        assert np.max(np.abs(np.cross(t, n, axis=0) - b)) < 1e-14

    def test_frame_derivative_relations(self, grid):
        # t' = n/R, n' = -t/R, b' = 0
        t, n, b = sb.frenet_frame(grid)
        R = grid.R
        worst = 0.0
        for i in range(3):
            worst = max(worst, sb.sup_norm(
                sb.differentiate(t.components[i]) - n.components[i] / R))
            worst = max(worst, sb.sup_norm(
                sb.differentiate(n.components[i]) + t.components[i] / R))
            assert sb.sup_norm(b.components[i]) in (0.0, 1.0)
        assert worst < 1e-12


class TestAssembleCurve:
    def test_zero_perturbation(self, grid):
        p = sb.FramePerturbation.zeros(grid)
        y = sb.assemble_curve(p, grid)
        assert np.max(np.abs(y.array - sb.circle_profile(grid).array)) < 1e-15

    def test_normal_mean_offset_rescales_circle(self, grid):
        # n points inward, so v0 = -eps inflates the radius to R + eps
        eps = 0.125
        p = sb.FramePerturbation(
            u=ScalarField.zeros(grid, "odd"), v0=-eps,
            v_perp=ScalarField.zeros(grid, "even", mean_free=True),
            w=ScalarField.zeros(grid, "odd"))
        y = sb.assemble_curve(p, grid).array
        radius = np.sqrt((y ** 2).sum(axis=0))
        assert np.max(np.abs(radius - (grid.R + eps))) < 1e-14

    def test_kernel_lift_is_first_order_shape(self, grid):
        # u = lam sin(ks/R), v_perp = lam k cos(ks/R), w = lam sqrt(k^2-1)
        # sin(ks/R) is arclength-preserving to first order
        k, lam = 2, 1e-3
        kern = sb.kernel_vector(k, grid)
        p = sb.FramePerturbation(
            u=lam * sb.antiderivative(kern.v_perp / grid.R), v0=0.0,
            v_perp=lam * kern.v_perp, w=lam * kern.w)
        y = sb.assemble_curve(p, grid)
        ys = _derivative_array(grid, y.array)
        speed_defect = np.max(np.abs(np.sqrt((ys ** 2).sum(axis=0)) - 1.0))
        assert speed_defect < 10.0 * lam ** 2
        assert np.max(np.abs(y.array[2] - p.w.values)) < 1e-15


class TestResiduals:
    def test_trivial_branch(self, grid):
        p = sb.FramePerturbation.zeros(grid)
        for omega in (0.0, 1.0, np.sqrt(3.0)):
            r = sb.residuals(p, omega, 0.0)
            for f in (r.tangential, r.normal, r.binormal, r.arclength):
                assert sb.sup_norm(f) == 0.0

    def test_axial_speed_offset_feeds_normal_residual(self, grid):
        p = sb.FramePerturbation.zeros(grid)
        r = sb.residuals(p, 1.3, 0.25)
        assert np.allclose(r.normal.values, 0.25, atol=1e-16)
        for f in (r.tangential, r.binormal, r.arclength):
            assert sb.sup_norm(f) == 0.0

    def test_parity_tags(self, grid):
        rng = np.random.default_rng(5)
        p = random_perturbation(grid, rng)
        r = sb.residuals(p, 1.1, 0.05)
        assert r.tangential.parity == "odd"
        assert r.normal.parity == "even"
        assert r.binormal.parity == "odd"
        assert r.arclength.parity == "even"
        assert r.quadratic.parity == "even"

    def test_speed_identity(self, grid):
        # |y_s|^2 = 1 + 2 * arclength residual, for any perturbation
        rng = np.random.default_rng(17)
        for _ in range(3):
            p = random_perturbation(grid, rng)
            y = sb.assemble_curve(p, grid)
            ys = _derivative_array(grid, y.array)
            r = sb.residuals(p, 0.7, 0.03, dealias=False)
            defect = np.max(np.abs((ys ** 2).sum(axis=0)
                                   - 1.0 - 2.0 * r.arclength.values))
            assert defect < 1e-9

    def test_identity_defect_trivial(self, grid):
        p = sb.FramePerturbation.zeros(grid)
        assert sb.tangential_identity_defect(p, 1.0, 0.0) == 0.0

    def test_identity_defect_off_shell(self, grid):
        rng = np.random.default_rng(23)
        for scale in (0.3, 0.05):
            p = random_perturbation(grid, rng, scale=scale)
            defect = sb.tangential_identity_defect(p, 1.7, 0.04)
            assert defect < 1e-9 * max(1.0, scale)


class TestSlipVelocity:
    def test_circle_at_critical_rotation(self, grid):
        y = sb.circle_profile(grid)
        om = sb.critical_omega(2, 1.0)
        c, variation = sb.slip_velocity(y, om, 1.0)
        assert c == pytest.approx(-np.sqrt(3.0), rel=1e-13)
        assert variation < 1e-12

    def test_circle_no_rotation(self, grid):
        c, variation = sb.slip_velocity(sb.circle_profile(grid), 0.0, 0.77)
        assert abs(c) < 1e-14
        assert variation < 1e-13

    def test_warns_on_bad_parameterization(self, grid):
        y = sb.Curve3.from_array(grid, 1.5 * sb.circle_profile(grid).array)
        with pytest.warns(UserWarning):
            sb.slip_velocity(y, 1.0, 1.0)


class TestScrewEvaluate:
    def test_time_zero(self, grid):
        y = sb.circle_profile(grid)
        sp = sb.ScrewParams(1.0, 1.3, -0.2, 0.9)
        assert np.max(np.abs(sb.screw_evaluate(y, sp, 0.0).array - y.array)) \
            < 1e-15

    @pytest.mark.parametrize("omega", [0.0, 0.9, -2.0])
    def test_circle_screw_is_vertical_translation(self, grid, omega):
        # with c = -R*omega and V = 1/R the rotation cancels against the
        # parameter slip and the circle climbs at speed 1/R
        y = sb.circle_profile(grid)
        sp = sb.ScrewParams(1.0, omega, -grid.R * omega, 1.0 / grid.R)
        for t in (0.5, 2.0):
            moved = sb.screw_evaluate(y, sp, t).array
            ref = y.array + np.array([[0.0], [0.0], [t / grid.R]])
            assert np.max(np.abs(moved - ref)) < 1e-12

    def test_semigroup(self, grid):
        rng = np.random.default_rng(29)
        p = random_perturbation(grid, rng, scale=0.05)
        y = sb.assemble_curve(p, grid)
        sp = sb.ScrewParams(1.0, 1.1, -0.8, 0.95)
        one = sb.screw_evaluate(sb.screw_evaluate(y, sp, 0.7), sp, 0.4)
        two = sb.screw_evaluate(y, sp, 1.1)
        assert np.max(np.abs(one.array - two.array)) < 1e-12


class TestOrbitDistance:
    def test_translates_of_circle(self, grid):
        x = sb.Curve3.from_array(
            grid, sb.circle_profile(grid).array + np.array([[0.4], [-1.0], [3.0]]))
        assert sb.orbit_distance(x).dist < 1e-10

    def test_rotation_recovered(self, grid):
        a0 = 0.7
        rot = np.array([[math.cos(a0), -math.sin(a0), 0.0],
                        [math.sin(a0), math.cos(a0), 0.0],
                        [0.0, 0.0, 1.0]])
        x = sb.Curve3.from_array(grid, rot @ sb.circle_profile(grid).array)
        res = sb.orbit_distance(x)
        assert res.dist < 1e-10
        assert res.alpha == pytest.approx(a0, abs=1e-10)

    def test_invariances(self, grid):
        rng = np.random.default_rng(31)
        arr = sb.circle_profile(grid).array + 0.05 * np.vstack(
            [random_field(grid, rng, 20).values for _ in range(3)])
        x = sb.Curve3.from_array(grid, arr)
        d0 = sb.orbit_distance(x).dist
        moved = sb.Curve3.from_array(grid, arr + np.array([[1.0], [0.2], [-0.7]]))
        a0 = 2.1
        rot = np.array([[math.cos(a0), -math.sin(a0), 0.0],
                        [math.sin(a0), math.cos(a0), 0.0],
                        [0.0, 0.0, 1.0]])
        rotated = sb.Curve3.from_array(grid, rot @ arr)
        shifted = x.shifted(0.41)
        for other in (moved, rotated, shifted):
            assert abs(sb.orbit_distance(other).dist - d0) < 1e-9

    def test_screw_motion_distance_constant(self, grid):
        # holds for any screw ansatz curve, solution of the flow or not
        rng = np.random.default_rng(37)
        p = random_perturbation(grid, rng, scale=0.05)
        y = sb.assemble_curve(p, grid)
        sp = sb.ScrewParams(1.0, 1.9, -1.2, 1.05)
        d0 = sb.orbit_distance(y).dist
        for t in (0.3, 1.7, 6.0):
            dt = sb.orbit_distance(sb.screw_evaluate(y, sp, t)).dist
            assert abs(dt - d0) < 1e-9


def test_curve_csv_roundtrip(tmp_path, grid):
    rng = np.random.default_rng(41)
    p = random_perturbation(grid, rng, scale=0.07)
    y = sb.assemble_curve(p, grid)
    path = tmp_path / "curve.csv"
    write_curve_csv(path, y, header_comments=["demo = 1"])
    back = read_curve_csv(path)
    assert back.grid.N == grid.N
    assert back.grid.R == pytest.approx(grid.R, rel=1e-12)
    assert np.max(np.abs(back.array - y.array)) < 1e-15


def test_curve_length(grid):
    assert sb.curve_length(sb.circle_profile(grid)) == pytest.approx(
        2.0 * np.pi, rel=1e-14)
