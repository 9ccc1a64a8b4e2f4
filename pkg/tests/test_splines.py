"""Spline basis, quadrature and benchmark geometry checks."""

import numpy as np
import pytest

from tftmembrane.splines import (
    DomainError,
    InvalidArgumentError,
    KnotVector,
    QuadratureRule,
    SplineSurface,
    benchmark_geometry,
    circle_control_points,
    load_surface,
    make_uniform_knots,
    save_surface,
    surface_area,
)

RNG = np.random.default_rng(20240901)


class TestKnotVectors:
    def test_linear_single_element(self):
        kv = make_uniform_knots(1, 1, periodic=False)
        np.testing.assert_allclose(kv.knots, [0, 0, 1, 1])
        assert kv.n_basis == 2

    def test_quadratic_two_elements(self):
        kv = make_uniform_knots(2, 2, periodic=False)
        np.testing.assert_allclose(kv.knots, [0, 0, 0, 0.5, 1, 1, 1])
        assert kv.n_basis == 4

    def test_periodic_counts(self):
        kv = make_uniform_knots(2, 4, periodic=True)
        assert kv.n_basis == 4
        assert kv.n_elements == 4

    def test_zero_elements_rejected(self):
        with pytest.raises(InvalidArgumentError):
            make_uniform_knots(2, 0)

    def test_periodic_partition_of_unity(self):
        kv = make_uniform_knots(2, 4, periodic=True)
        for x in RNG.uniform(0, 1, 100):
            idx, ders = kv.eval_basis(float(x), 1)
            assert abs(ders[0].sum() - 1.0) < 1e-12
            assert abs(ders[1].sum()) < 1e-10
            assert np.unique(idx).size == idx.size

    def test_clamped_partition_of_unity_and_derivative_sum(self):
        kv = make_uniform_knots(3, 5)
        for x in np.linspace(0, 1, 33):
            _, ders = kv.eval_basis(float(x), 2)
            assert abs(ders[0].sum() - 1.0) < 1e-12
            assert abs(ders[1].sum()) < 1e-9
            assert abs(ders[2].sum()) < 1e-8


class TestBasisDerivatives:
    def test_corner_interpolation(self):
        surf = benchmark_geometry("unit_square", degree=2, elements=(3, 3))
        idx, vals, _, _ = surf.eval_basis((0.0, 0.0), 0)
        assert vals.max() == pytest.approx(1.0, abs=1e-14)
        corner = idx[np.argmax(vals)]
        assert corner == 0

    def test_partition_of_unity_surface(self):
        surf = benchmark_geometry("annulus", degree=2, elements=(3, 8),
                                  R_i=0.0625, R_o=0.25)
        for _ in range(50):
            xi = RNG.uniform(0, 1, 2)
            _, vals, grads, _ = surf.eval_basis(xi, 1)
            assert abs(vals.sum() - 1.0) < 1e-12
            np.testing.assert_allclose(grads.sum(axis=0), 0.0, atol=1e-9)

    def test_first_derivatives_against_central_differences(self):
        surfaces = [
            benchmark_geometry("unit_square", degree=3, elements=(4, 3)),
            benchmark_geometry("cylinder", degree=2, elements=(3, 8), R=0.25, L=1.0),
        ]
        h = 1e-6
        for surf in surfaces:
            for _ in range(20):
                xi = RNG.uniform(2 * h, 1 - 2 * h, 2)
                x, dx = surf.point(xi, order=1)
                for d in range(2):
                    xp = xi.copy()
                    xm = xi.copy()
                    xp[d] += h
                    xm[d] -= h
                    fd = (surf.point(xp) - surf.point(xm)) / (2 * h)
                    err = np.linalg.norm(fd - dx[d]) / max(np.linalg.norm(dx[d]), 1e-12)
                    assert err < 1e-6

    def test_second_derivatives_against_central_differences(self):
        surf = benchmark_geometry("annulus", degree=3, elements=(3, 8),
                                  R_i=0.0625, R_o=0.25)
        h = 1e-5
        for _ in range(10):
            xi = RNG.uniform(2 * h, 1 - 2 * h, 2)
            x, dx, ddx = surf.point(xi, order=2)
            for c, (a, b) in enumerate(((0, 0), (1, 1), (0, 1))):
                xpp = xi.copy(); xpp[a] += h; xpp[b] += h
                xpm = xi.copy(); xpm[a] += h; xpm[b] -= h
                xmp = xi.copy(); xmp[a] -= h; xmp[b] += h
                xmm = xi.copy(); xmm[a] -= h; xmm[b] -= h
                fd = (surf.point(xpp) - surf.point(xpm) - surf.point(xmp)
                      + surf.point(xmm)) / (4 * h * h)
                err = np.linalg.norm(fd - ddx[c]) / max(np.linalg.norm(ddx[c]), 1.0)
                assert err < 1e-4

    def test_outside_domain_raises(self):
        surf = benchmark_geometry("unit_square", degree=2, elements=(2, 2))
        with pytest.raises(DomainError):
            surf.eval_basis((1.5, 0.5), 0)


class TestGeometries:
    def test_unit_square_area(self):
        surf = benchmark_geometry("unit_square", degree=2, elements=(4, 4), L=1.0, W=1.0)
        assert surface_area(surf) == pytest.approx(1.0, abs=1e-12)

    def test_square_diag_edge(self):
        surf = benchmark_geometry("square_diag", degree=2, elements=(2, 2), L=1.2)
        edge = np.sqrt(1.2**2 / 2) / 2
        np.testing.assert_allclose(surf.point((1.0, 1.0)), [edge, edge, 0.0], atol=1e-14)

    def test_annulus_area(self):
        R_i, R_o = 62.5e-3, 250e-3
        surf = benchmark_geometry("annulus", degree=2, elements=(4, 8), R_i=R_i, R_o=R_o)
        exact = np.pi * (R_o**2 - R_i**2)
        area = surface_area(surf, n_gauss=12)
        assert abs(area - exact) / exact < 1e-10

    def test_cylinder_area(self):
        R, L = 250e-3, 1.0
        surf = benchmark_geometry("cylinder", degree=3, elements=(4, 8), R=R, L=L)
        exact = 2 * np.pi * R * L
        area = surface_area(surf, n_gauss=12)
        assert abs(area - exact) / exact < 1e-10

    def test_circle_points_on_circle(self):
        for degree in (2, 3):
            for nel in (4, 8, 32):
                surf = benchmark_geometry("annulus", degree=degree, elements=(2, nel),
                                          R_i=1.0, R_o=2.0)
                for v in np.linspace(0, 1, 41, endpoint=False):
                    x = surf.point((0.0, v))
                    assert abs(np.hypot(x[0], x[1]) - 1.0) < 1e-12
                    x = surf.point((1.0, v))
                    assert abs(np.hypot(x[0], x[1]) - 2.0) < 1e-12

    def test_periodic_seam_continuity(self):
        """Geometry and its derivatives wrap smoothly across the seam."""
        for degree, nel in ((2, 4), (2, 8), (3, 16)):
            surf = benchmark_geometry("cylinder", degree=degree, elements=(2, nel),
                                      R=0.25, L=1.0)
            eps = 1e-9
            for u in (0.0, 0.37, 1.0):
                xa, dxa, ddxa = surf.point((u, eps), order=2)
                xb, dxb, ddxb = surf.point((u, 1.0 - eps + 1.0 - 1.0), order=2)
                xb, dxb, ddxb = surf.point((u, 1.0 - eps), order=2)
                assert np.linalg.norm(xa - xb) < 1e-7   # eps apart along the seam
                # evaluate exactly at the wrap from both sides via tiny offsets
            x0, d0, dd0 = surf.point((0.5, 1e-12), order=2)
            x1, d1, dd1 = surf.point((0.5, 1.0 - 1e-12), order=2)
            np.testing.assert_allclose(x0, x1, atol=1e-10)
            np.testing.assert_allclose(d0, d1, atol=1e-9 * max(1, np.abs(d0).max()))
            np.testing.assert_allclose(dd0, dd1, atol=1e-7 * max(1, np.abs(dd0).max()))

    def test_refinement_reproduces_geometry(self):
        """h-refined surfaces reproduce the coarse geometry map pointwise."""
        coarse = benchmark_geometry("annulus", degree=2, elements=(1, 4),
                                    R_i=0.0625, R_o=0.25)
        fine = benchmark_geometry("annulus", degree=2, elements=(4, 16),
                                  R_i=0.0625, R_o=0.25)
        for _ in range(100):
            xi = RNG.uniform(0, 1, 2)
            # same (radius, angle) parameterisation for both meshes
            np.testing.assert_allclose(coarse.point(xi), fine.point(xi), atol=1e-12)

    def test_nonpositive_dimensions_rejected(self):
        with pytest.raises(InvalidArgumentError):
            benchmark_geometry("annulus", degree=2, elements=(2, 4), R_i=0.3, R_o=0.2)
        with pytest.raises(InvalidArgumentError):
            benchmark_geometry("unit_square", degree=2, elements=(2, 2), L=-1.0)

    def test_circle_weights_positive(self):
        for degree in (2, 3):
            _, H = circle_control_points(degree, 16)
            assert np.all(H[:, 2] > 0)


class TestQuadrature:
    def test_weights_sum_to_element_area(self):
        rule = QuadratureRule.gauss(3)
        pts, wts = rule.on_element(0.25, 0.5, 0.0, 0.125)
        assert wts.sum() == pytest.approx(0.25 * 0.125, rel=1e-14)
        assert np.all(wts > 0)

    def test_polynomial_exactness(self):
        rule = QuadratureRule.gauss(4)
        pts, wts = rule.on_element(0.0, 1.0, 0.0, 1.0)
        val = np.sum(wts * pts[:, 0] ** 5 * pts[:, 1] ** 3)
        assert val == pytest.approx(1.0 / 6.0 / 4.0, rel=1e-13)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        surf = benchmark_geometry("cylinder", degree=2, elements=(2, 8), R=0.25, L=1.0)
        path = tmp_path / "surface.txt"
        save_surface(surf, path)
        back = load_surface(path)
        np.testing.assert_array_equal(back.control_points, surf.control_points)
        np.testing.assert_array_equal(back.weights, surf.weights)
        for _ in range(10):
            xi = RNG.uniform(0, 1, 2)
            np.testing.assert_allclose(back.point(xi), surf.point(xi), atol=1e-15)
