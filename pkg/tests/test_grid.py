"""Grid, interpolation, quadrature and norm tests.

Derived expected values come from closed-form oracles:
|grad h_{3/2}|^2 = (9/4)|x| (checked by finite differences), hence
int_{B_1} = 3*pi/2; int_0^{2pi} cos^2(3 phi/2) dtheta = pi.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thinfb.errors import DomainError, ResolutionError
from thinfb.grid import (
    Ball,
    BallQuadrature,
    Grid,
    GridField,
    Sphere,
    ball_volume,
    dirichlet_energy,
    interpolate,
    ladder_radii,
    norm_l2_avg,
    norm_l2_tilde,
    sample_function,
    sphere_area,
)
from thinfb.profiles import model_cone, sample


def h32_field(h=2**-8):
    return sample(model_cone(1), Grid(1, h))


class TestGrid:
    def test_plane_and_origin_are_nodes(self):
        g = Grid(1, 2**-4)
        assert g.npts % 2 == 1
        assert g.axis_coords()[g.plane_index] == 0.0

    def test_invalid_spacing_rejected(self):
        with pytest.raises(ValueError):
            Grid(1, 0.3)

    def test_invalid_dimension_rejected(self):
        with pytest.raises(ValueError):
            Grid(3, 2**-4)

    def test_field_shape_mismatch(self):
        g = Grid(1, 2**-2)
        with pytest.raises(ValueError):
            GridField(g, np.zeros((3, 3)))

    def test_nonfinite_rejected(self):
        g = Grid(1, 2**-2)
        vals = np.zeros(g.shape)
        vals[0, 0] = np.nan
        with pytest.raises(ValueError):
            GridField(g, vals)


class TestInterpolate:
    def test_constant(self):
        g = Grid(1, 2**-4)
        fld = GridField(g, np.ones(g.shape))
        assert interpolate(fld, (0.123, -0.456)) == pytest.approx(1.0)

    def test_linear_exactness(self):
        g = Grid(1, 2**-4)
        fld = sample_function(g, lambda p: p[:, 1])
        assert interpolate(fld, (0.3, 0.25)) == pytest.approx(0.25, abs=1e-14)

    def test_h32_value(self):
        # oracle: Re(0.5+0.5i)^{3/2} = 0.2275449302811...
        fld = h32_field()
        assert interpolate(fld, (0.5, 0.5)) == pytest.approx(0.22754493028111375, abs=5e-4)

    def test_outside_cube_raises(self):
        fld = GridField(Grid(1, 2**-2), np.ones((9, 9)))
        with pytest.raises(DomainError):
            interpolate(fld, (1.5, 0.0))

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=2, max_size=2),
           st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
    def test_multilinear_exact(self, pt, a, b, c, d):
        g = Grid(1, 2**-3)
        fld = sample_function(
            g, lambda p: a + b * p[:, 0] + c * p[:, 1] + d * p[:, 0] * p[:, 1])
        x, y = pt
        expect = a + b * x + c * y + d * x * y
        assert interpolate(fld, (x, y)) == pytest.approx(expect, abs=1e-12)


class TestQuadrature:
    @pytest.mark.parametrize("n,r", [(1, 0.5), (1, 0.25), (2, 0.5), (2, 0.25)])
    def test_weight_sums(self, n, r):
        g = Grid(n, 2**-5)
        q = BallQuadrature.build(g, (0.0,) * g.dim, r)
        assert np.sum(q.interior_weights) == pytest.approx(
            ball_volume(g.dim, r), rel=1e-10)
        assert np.sum(q.surface_weights) == pytest.approx(
            sphere_area(g.dim, r), rel=1e-10)

    @pytest.mark.parametrize("n", [1, 2])
    def test_nodes_inside_cube(self, n):
        g = Grid(n, 2**-5)
        center = (0.4,) + (0.0,) * (g.dim - 1)
        q = BallQuadrature.build(g, center, 0.5)
        assert np.all(np.abs(q.interior_nodes) <= 1.0 + 1e-12)
        assert np.all(np.abs(q.surface_nodes) <= 1.0 + 1e-12)

    @pytest.mark.parametrize("n", [1, 2])
    def test_degree_two_exactness(self, n):
        # rule applied to exact polynomial values: x1^2 over B_r
        g = Grid(n, 2**-6)
        r = 16 * g.h
        q = BallQuadrature.build(g, (0.0,) * g.dim, r)
        approx = np.dot(q.interior_weights, q.interior_nodes[:, 0] ** 2)
        exact = ball_volume(g.dim, r) * r**2 / (g.dim + 2)
        assert approx == pytest.approx(exact, rel=1e-6)

    def test_ball_outside_cube_raises(self):
        g = Grid(1, 2**-5)
        with pytest.raises(DomainError):
            BallQuadrature.build(g, (0.9, 0.0), 0.5)

    def test_small_radius_raises(self):
        g = Grid(1, 2**-5)
        with pytest.raises(ResolutionError):
            BallQuadrature.build(g, (0.0, 0.0), 4 * g.h)


class TestNorms:
    def test_zero_field(self):
        g = Grid(1, 2**-5)
        fld = GridField(g, np.zeros(g.shape))
        assert norm_l2_tilde(fld, Sphere((0.0, 0.0), 0.5)) == 0.0

    def test_constant_on_unit_circle(self):
        g = Grid(1, 2**-6)
        fld = GridField(g, np.ones(g.shape))
        got = norm_l2_tilde(fld, Sphere((0.0, 0.0), 1.0))
        assert got == pytest.approx((2 * np.pi) ** -0.5, rel=1e-9)

    def test_h32_on_unit_circle(self):
        # oracle: int_0^{2pi} cos^2(3 phi/2) dtheta = pi
        fld = h32_field()
        got = norm_l2_tilde(fld, Sphere((0.0, 0.0), 1.0))
        assert got == pytest.approx(np.sqrt(np.pi) / (2 * np.pi), rel=1e-3)

    def test_avg_norm_reproduces_constants(self):
        g = Grid(1, 2**-5)
        fld = GridField(g, np.full(g.shape, 3.0))
        assert norm_l2_avg(fld, Ball((0.0, 0.0), 0.5)) == pytest.approx(3.0, rel=1e-10)
        assert norm_l2_avg(fld, Sphere((0.0, 0.0), 0.5)) == pytest.approx(3.0, rel=1e-10)

    def test_reflection_equivariance(self):
        fld = sample_function(Grid(1, 2**-6), lambda p: p[:, 0] + 0.3 * p[:, 1] ** 2)
        refl = fld.reflected()
        for region in (Ball((0.2, 0.0), 0.25), Sphere((0.2, 0.0), 0.25)):
            assert norm_l2_tilde(fld, region) == pytest.approx(
                norm_l2_tilde(refl, region), rel=1e-12)
        assert dirichlet_energy(fld, Ball((0.2, 0.0), 0.25)) == pytest.approx(
            dirichlet_energy(refl, Ball((0.2, 0.0), 0.25)), rel=1e-12)

    @pytest.mark.parametrize("kappa_profile", ["cone", "linear"])
    def test_homogeneous_scaling_of_avg_norm(self, kappa_profile):
        # r^kappa law on spheres for the measure-averaged norm
        g = Grid(1, 2**-7)
        if kappa_profile == "cone":
            fld, kappa = sample(model_cone(1), g), 1.5
        else:
            fld, kappa = sample_function(g, lambda p: p[:, 1]), 1.0
        base = norm_l2_avg(fld, Sphere((0.0, 0.0), 1.0))
        for r in [0.5, 0.25, 8 * g.h]:
            got = norm_l2_avg(fld, Sphere((0.0, 0.0), r))
            assert got == pytest.approx(r**kappa * base, rel=0.01)


class TestDirichletEnergy:
    def test_linear_field(self):
        g = Grid(1, 2**-6)
        a = np.array([0.7, -0.4])
        fld = sample_function(g, lambda p: p @ a)
        expect = float(a @ a) * ball_volume(2, 1.0)
        assert dirichlet_energy(fld, Ball((0.0, 0.0), 1.0)) == pytest.approx(
            expect, rel=1e-8)

    def test_h32_energy(self):
        # oracle: |grad h|^2 = (9/4)|x|, integral over B_1 = 3*pi/2
        fld = h32_field()
        got = dirichlet_energy(fld, Ball((0.0, 0.0), 1.0))
        assert got == pytest.approx(1.5 * np.pi, rel=0.02)

    def test_abs_xn_energy(self):
        # |grad| = 1 a.e.; the plane trace uses the mean of one-sided squares
        g = Grid(1, 2**-7)
        fld = sample_function(g, lambda p: np.abs(p[:, 1]))
        got = dirichlet_energy(fld, Ball((0.0, 0.0), 1.0))
        assert got == pytest.approx(np.pi, rel=0.02)


def test_ladder_radii_bounds():
    g = Grid(1, 2**-7)
    radii = ladder_radii(g)
    assert radii[0] == 0.5
    assert radii[-1] >= g.min_radius() - 1e-12
    assert np.all(np.diff(radii) < 0)
    assert len(radii) >= 6
