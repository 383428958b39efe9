"""Coefficient synthesis, normalization and seminorm measurement."""

import numpy as np
import pytest

from thinfb.coefficients import (
    CoefficientField,
    check_condition_N,
    constant_coefficients,
    estimate_seminorm,
    generate_field,
    identity_coefficients,
    normalize_at_origin,
    total_seminorm,
)
from thinfb.errors import EllipticityError
from thinfb.grid import Grid, GridField, sample_function


GRID = Grid(1, 2**-6)


class TestConditionN:
    def test_identity_passes(self):
        report = check_condition_N(identity_coefficients(GRID))
        assert report["pass"]
        assert all(v == 0.0 for v in report["violations"].values())

    def test_offdiagonal_violation_detected(self):
        c = identity_coefficients(GRID)
        c.a[0, 1] += 0.1
        c.a[1, 0] += 0.1
        report = check_condition_N(c)
        assert not report["pass"]
        assert report["violations"]["off-diagonal on plane"] == pytest.approx(0.1)

    def test_generated_field_passes(self):
        c = generate_field(0.75, 0.05, seed=7, grid=GRID)
        report = check_condition_N(c)
        assert report["pass"]
        # plane clause holds exactly, not just to tolerance
        p = GRID.plane_index
        assert np.max(np.abs(c.a[0, 1][:, p])) == 0.0


class TestNormalize:
    def test_idempotent_on_normalized(self):
        c = identity_coefficients(GRID)
        out = normalize_at_origin(c)
        assert np.array_equal(out.a, c.a)
        assert np.array_equal(out.g, c.g)

    def test_constant_diagonal_rescale(self):
        c = constant_coefficients(GRID, np.diag([4.0, 1.0]))
        out = normalize_at_origin(c)
        d = GRID.dim
        for i in range(d):
            for j in range(d):
                expect = 1.0 if i == j else 0.0
                assert np.allclose(out.a[i, j], expect, atol=1e-12)

    def test_congruence_of_varying_field(self):
        # oracle: pointwise congruence A(0)^{-1/2} a A(0)^{-1/2}
        a0 = np.array([[2.0, 0.0], [0.0, 1.0]])
        def build(grid):
            x1, x2 = grid.node_coords()
            a = np.zeros((2, 2) + grid.shape)
            a[0, 0] = a0[0, 0] + 0.1 * x1
            a[1, 1] = a0[1, 1] + 0.05 * x2**2
            a[0, 1] = a[1, 0] = 0.02 * x1 * x2
            g = np.zeros((2,) + grid.shape)
            g[0] = 0.3 + 0.1 * x1
            return CoefficientField(grid, a, g, alpha=0.75)
        c = build(GRID)
        out = normalize_at_origin(c)
        origin = (GRID.plane_index, GRID.plane_index)
        assert np.allclose(
            [[out.a[i, j][origin] for j in range(2)] for i in range(2)],
            np.eye(2), atol=1e-12)
        assert all(abs(out.g[i][origin]) < 1e-12 for i in range(2))
        # interior congruence oracle: the raw entries are multilinear or
        # on-node along the stretched coordinate, so closed-form values at
        # the stretched argument x = A(0)^{1/2} y are exact
        inv_root = np.diag([2.0**-0.5, 1.0])
        root = np.diag([2.0**0.5, 1.0])
        y = np.array([0.25, 0.125])
        x = root @ y
        raw = np.array([
            [a0[0, 0] + 0.1 * x[0], 0.02 * x[0] * x[1]],
            [0.02 * x[0] * x[1], a0[1, 1] + 0.05 * x[1] ** 2],
        ])
        expect = inv_root @ raw @ inv_root
        iy = int(round((y[0] + 1) / GRID.h))
        jy = int(round((y[1] + 1) / GRID.h))
        got = np.array([[out.a[i, j][iy, jy] for j in range(2)] for i in range(2)])
        assert np.allclose(got, expect, atol=1e-12)

    def test_non_spd_rejected(self):
        c = constant_coefficients(GRID, np.diag([1.0, 1.0]))
        c.a[0, 0] -= 2.0  # a(0) = diag(-1, 1)
        with pytest.raises(EllipticityError):
            normalize_at_origin(c)


class TestGenerateField:
    def test_zero_budget_is_identity(self):
        c = generate_field(0.75, 0.0, seed=1, grid=GRID)
        assert np.allclose(c.a[0, 0], 1.0) and np.allclose(c.a[0, 1], 0.0)
        assert np.allclose(c.g, 0.0)

    def test_measured_seminorm_matches_budget(self):
        c = generate_field(0.75, 0.05, seed=7, grid=GRID)
        got = total_seminorm(c)
        assert 0.0475 <= got <= 0.0525

    def test_determinism(self):
        c1 = generate_field(0.6, 0.05, seed=11, grid=GRID)
        c2 = generate_field(0.6, 0.05, seed=11, grid=GRID)
        assert np.array_equal(c1.a, c2.a)
        assert np.array_equal(c1.g, c2.g)

    def test_large_budget_rejected(self):
        with pytest.raises(ValueError):
            generate_field(0.75, 0.3, seed=0, grid=GRID)

    def test_ellipticity_preserved(self):
        c = generate_field(0.75, 0.05, seed=3, grid=GRID)
        lam, Lam = c.ellipticity()
        assert 0.5 < lam <= Lam < 2.0

    def test_three_dimensional_field(self):
        g3 = Grid(2, 2**-4)
        c = generate_field(0.75, 0.02, seed=5, grid=g3)
        assert check_condition_N(c)["pass"]
        assert c.is_elliptic()


class TestSeminorm:
    def test_constant_field(self):
        fld = GridField(GRID, np.ones(GRID.shape))
        assert estimate_seminorm(fld, 0.5).seminorm == 0.0

    def test_cusp_field(self):
        # pairs straddling x1 = 0 realize ratio ~ 1
        alpha = 0.6
        fld = sample_function(GRID, lambda p: np.abs(p[:, 0]) ** alpha)
        assert estimate_seminorm(fld, alpha).seminorm >= 0.9

    def test_linear_field_half_exponent(self):
        # |x - y| / |x - y|^{1/2} maximal at large separation
        fld = sample_function(GRID, lambda p: p[:, 0])
        assert estimate_seminorm(fld, 0.5).seminorm >= 1.0

    def test_monotone_in_pair_count(self):
        fld = sample_function(GRID, lambda p: np.sin(3 * p[:, 0]) * p[:, 1])
        small = estimate_seminorm(fld, 0.5, min_pairs=10_000).seminorm
        large = estimate_seminorm(fld, 0.5, min_pairs=200_000).seminorm
        assert large >= small


def test_asymmetric_matrix_rejected():
    a = np.zeros((2, 2) + GRID.shape)
    a[0, 0] = a[1, 1] = 1.0
    a[0, 1] = 0.1
    g = np.zeros((2,) + GRID.shape)
    with pytest.raises(EllipticityError):
        CoefficientField(GRID, a, g, alpha=0.5)
