"""Frame construction, Green-Lagrange strain and discrete variations."""

import numpy as np
import pytest

from tftmembrane.kinematics import (
    frame_at,
    frame_from_bases,
    green_lagrange,
    normal_and_variation,
    strain_second_variation,
    strain_variation,
)
from tftmembrane.splines import SingularGeometryError, benchmark_geometry

RNG = np.random.default_rng(7)


def _rotation(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = np.array([[0, -axis[2], axis[1]],
                  [axis[2], 0, -axis[0]],
                  [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def _square(degree=2, elements=(3, 3)):
    return benchmark_geometry("unit_square", degree=degree, elements=elements)


class TestFrames:
    def test_zero_displacement_metrics_match(self):
        surf = _square()
        u = np.zeros(3 * surf.n_cp)
        for _ in range(5):
            fr = frame_at(surf, u, RNG.uniform(0, 1, 2))
            np.testing.assert_array_equal(fr.a_met, fr.a0_met)
            np.testing.assert_allclose(fr.a0_con @ fr.a0_met, np.eye(2), atol=1e-12)

    def test_rigid_translation_keeps_metric(self):
        surf = _square()
        u = np.tile([0.3, -0.2, 1.7], surf.n_cp)
        fr = frame_at(surf, u, (0.431, 0.77))
        np.testing.assert_allclose(fr.a_met, fr.a0_met, atol=1e-14)

    def test_uniform_stretch_metric(self):
        surf = _square()
        lam = 1.37
        u = np.zeros((surf.n_cp, 3))
        u[:, 0] = (lam - 1.0) * surf.control_points[:, 0]
        fr = frame_at(surf, u.ravel(), (0.3, 0.62))
        assert fr.a_met[0, 0] == pytest.approx(lam**2 * fr.a0_met[0, 0], rel=1e-13)
        assert fr.a_met[1, 1] == pytest.approx(fr.a0_met[1, 1], rel=1e-13)

    def test_normal_and_invariants(self):
        surf = _square()
        u = 0.05 * RNG.standard_normal(3 * surf.n_cp)
        fr = frame_at(surf, u, (0.5, 0.25))
        assert np.linalg.norm(fr.normal) == pytest.approx(1.0, abs=1e-13)
        assert abs(fr.normal @ fr.a_cov[0]) < 1e-12
        assert abs(fr.normal @ fr.a_cov[1]) < 1e-12

    def test_degenerate_geometry_raises(self):
        a0 = np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])  # parallel tangents
        with pytest.raises(SingularGeometryError):
            frame_from_bases(a0, a0)


class TestStrain:
    def test_zero_strain_at_rest(self):
        surf = _square()
        fr = frame_at(surf, np.zeros(3 * surf.n_cp), (0.2, 0.9))
        np.testing.assert_array_equal(green_lagrange(fr), np.zeros(3))

    def test_uniform_stretch_strain(self):
        surf = _square()
        lam = 1.21
        u = np.zeros((surf.n_cp, 3))
        u[:, 0] = (lam - 1.0) * surf.control_points[:, 0]
        ev = green_lagrange(frame_at(surf, u.ravel(), (0.4, 0.4)))
        np.testing.assert_allclose(ev, [0.5 * (lam**2 - 1), 0.0, 0.0], atol=1e-13)

    def test_rigid_rotation_objectivity(self):
        surf = _square()
        R = _rotation([0.3, -1.0, 0.77], 0.9)
        u = surf.control_points @ R.T - surf.control_points
        u += np.array([0.1, 0.2, -0.3])
        for _ in range(5):
            ev = green_lagrange(frame_at(surf, u.ravel(), RNG.uniform(0, 1, 2)))
            np.testing.assert_allclose(ev, 0.0, atol=1e-12)


class TestVariations:
    def test_unsupported_dof_gives_zero_row(self):
        surf = _square(degree=2, elements=(4, 4))
        u = 0.02 * RNG.standard_normal(3 * surf.n_cp)
        fr = frame_at(surf, u, (0.05, 0.05))
        far_dof = 3 * (surf.n_cp - 1)  # opposite corner control point
        np.testing.assert_array_equal(strain_variation(surf, fr, (0.05, 0.05), far_dof),
                                      np.zeros(3))

    def test_strain_variation_at_rest_is_base_dot_gradient(self):
        surf = _square()
        xi = (0.33, 0.71)
        fr = frame_at(surf, np.zeros(3 * surf.n_cp), xi)
        idx, _, grads, _ = surf.eval_basis(xi, 1)
        k = int(idx[3])
        dE = strain_variation(surf, fr, xi, 3 * k + 0)  # x-component dof
        assert dE[0] == pytest.approx(fr.a0_cov[0, 0] * grads[3, 0], rel=1e-13)

    def test_strain_variation_matches_central_differences(self):
        surf = _square()
        xi = (0.47, 0.18)
        eps = 1e-6
        for trial in range(20):
            u = 0.1 * RNG.standard_normal(3 * surf.n_cp)
            fr = frame_at(surf, u, xi)
            idx, _, _, _ = surf.eval_basis(xi, 1)
            r = 3 * int(RNG.choice(idx)) + int(RNG.integers(0, 3))
            up = u.copy(); up[r] += eps
            um = u.copy(); um[r] -= eps
            fd = (green_lagrange(frame_at(surf, up, xi))
                  - green_lagrange(frame_at(surf, um, xi))) / (2 * eps)
            dE = strain_variation(surf, fr, xi, r)
            np.testing.assert_allclose(dE, fd, rtol=1e-6, atol=1e-9)

    def test_second_variation_symmetric_and_constant(self):
        surf = _square()
        xi = (0.6, 0.6)
        idx, _, _, _ = surf.eval_basis(xi, 1)
        r = 3 * int(idx[0]) + 1
        s = 3 * int(idx[4]) + 1
        d2_a = strain_second_variation(surf, xi, r, s)
        d2_b = strain_second_variation(surf, xi, s, r)
        np.testing.assert_array_equal(d2_a, d2_b)

    def test_second_variation_zero_for_mixed_components(self):
        surf = _square()
        xi = (0.6, 0.3)
        idx, _, _, _ = surf.eval_basis(xi, 1)
        r = 3 * int(idx[0]) + 0
        s = 3 * int(idx[0]) + 2
        np.testing.assert_array_equal(strain_second_variation(surf, xi, r, s), np.zeros(3))

    def test_second_variation_matches_fd_of_first(self):
        surf = _square()
        xi = (0.25, 0.8)
        eps = 1e-6
        u = 0.05 * RNG.standard_normal(3 * surf.n_cp)
        idx, _, _, _ = surf.eval_basis(xi, 1)
        for trial in range(10):
            r = 3 * int(RNG.choice(idx)) + int(RNG.integers(0, 3))
            s = 3 * int(RNG.choice(idx)) + int(RNG.integers(0, 3))
            up = u.copy(); up[s] += eps
            um = u.copy(); um[s] -= eps
            fd = (strain_variation(surf, frame_at(surf, up, xi), xi, r)
                  - strain_variation(surf, frame_at(surf, um, xi), xi, r)) / (2 * eps)
            d2 = strain_second_variation(surf, xi, r, s)
            np.testing.assert_allclose(d2, fd, rtol=1e-6, atol=1e-9)


class TestNormalVariation:
    def test_flat_square_normal(self):
        surf = _square()
        fr = frame_at(surf, np.zeros(3 * surf.n_cp), (0.5, 0.5))
        np.testing.assert_allclose(fr.normal, [0, 0, 1], atol=1e-15)

    def test_variation_orthogonal_to_normal(self):
        surf = _square()
        xi = (0.3, 0.55)
        u = 0.2 * RNG.standard_normal(3 * surf.n_cp)
        fr = frame_at(surf, u, xi)
        idx, _, _, _ = surf.eval_basis(xi, 1)
        for k in idx:
            for c in range(3):
                n, dn = normal_and_variation(surf, fr, xi, 3 * int(k) + c)
                assert abs(n @ dn) < 1e-12

    def test_variation_matches_central_differences(self):
        surf = _square()
        xi = (0.62, 0.41)
        eps = 1e-6
        u = 0.1 * RNG.standard_normal(3 * surf.n_cp)
        fr = frame_at(surf, u, xi)
        idx, _, _, _ = surf.eval_basis(xi, 1)
        for trial in range(10):
            r = 3 * int(RNG.choice(idx)) + int(RNG.integers(0, 3))
            up = u.copy(); up[r] += eps
            um = u.copy(); um[r] -= eps
            fd = (frame_at(surf, up, xi).normal - frame_at(surf, um, xi).normal) / (2 * eps)
            _, dn = normal_and_variation(surf, fr, xi, r)
            np.testing.assert_allclose(dn, fd, rtol=1e-6, atol=1e-8)
