"""Tension-field classification, wrinkle-angle root finding, modified tensors."""

import numpy as np
import pytest

from tftmembrane.kinematics import frame_from_bases, inv22, metric_from_strain
from tftmembrane.materials import MaterialModel, stress_and_tangent_batch, \
    tangent_strain_derivative_batch
from tftmembrane.wrinkling import (
    RootNotFoundError,
    TensionState,
    angle_residual,
    classify,
    classify_batch,
    direction_vectors,
    evaluate_point,
    find_wrinkle_angle,
    find_wrinkle_angle_batch,
    gamma,
    modified_stress,
    modified_tangent_elastic,
    modified_tangent_hyperelastic,
    wrinkle_solution,
)

RNG = np.random.default_rng(2718)

T = 1e-3
SVK = MaterialModel.svk_from_E_nu(E=3.5e6, nu=0.3, thickness=T)
NH = MaterialModel.nh_incompressible(mu=1.5e6, thickness=T)
MODELS = [
    SVK,
    NH,
    MaterialModel.nh_compressible(mu=1.5e6, bulk=14.5e6, thickness=T),
    MaterialModel.mr_incompressible(c1=7 / 8 * 1.5e6, c2=1 / 8 * 1.5e6, thickness=T),
    MaterialModel.mr_compressible(c1=7 / 8 * 1.5e6, c2=1 / 8 * 1.5e6, bulk=14.5e6,
                                  thickness=T),
]

EYE = np.eye(2)


def sc_at(model, ev, g=None):
    """Stress/tangent of a single strain state in a (default Cartesian) frame."""
    g = EYE if g is None else g
    gi = inv22(g)
    a = metric_from_strain(g, ev)
    S, C = stress_and_tangent_batch(model, g[None], gi[None], a[None])
    return S[0], C[0]


def wrinkled_states(model, n, scale=0.12, g=None):
    """Random strain states classified wrinkled for the model (Cartesian frame)."""
    g = EYE if g is None else g
    gi = inv22(g)
    out = []
    while len(out) < n:
        ev = RNG.uniform(-scale, scale, 3)
        ev[0] = abs(ev[0]) + 0.02          # one stretched direction
        ev[1] = -abs(ev[1]) - 0.02         # one compressed direction
        a = metric_from_strain(g, ev)
        S, C = stress_and_tangent_batch(model, g[None], gi[None], a[None])
        state = classify_batch(S, ev[None], a[None], gi[None], model.mu)[0]
        if state == int(TensionState.WRINKLED):
            out.append((ev, S[0], C[0]))
    return out


class TestClassify:
    def test_zero_state_is_slack(self):
        fr = frame_from_bases(np.eye(2, 3), np.eye(2, 3))
        assert classify(np.zeros(3), np.zeros(3), fr, SVK.mu) is TensionState.SLACK

    def test_equibiaxial_tension_is_taut(self):
        ev = np.array([0.02, 0.02, 0.0])
        S, _ = sc_at(SVK, ev)
        a = metric_from_strain(EYE, ev)
        code = classify_batch(S[None], ev[None], a[None], EYE[None], SVK.mu)[0]
        assert code == int(TensionState.TAUT)

    def test_mixed_state_is_wrinkled(self):
        ev = np.array([0.01, -0.02, 0.0])
        S, _ = sc_at(SVK, ev)
        assert S[1] < 0 < S[0]
        a = metric_from_strain(EYE, ev)
        code = classify_batch(S[None], ev[None], a[None], EYE[None], SVK.mu)[0]
        assert code == int(TensionState.WRINKLED)

    def test_strain_and_stress_criteria(self):
        ev = np.array([0.01, -0.02, 0.0])
        S, _ = sc_at(SVK, ev)
        a = metric_from_strain(EYE, ev)
        for crit in ("strain", "stress"):
            code = classify_batch(S[None], ev[None], a[None], EYE[None], SVK.mu,
                                  criterion=crit)[0]
            assert code == int(TensionState.WRINKLED)
        # pure compression is slack under all criteria
        ev = np.array([-0.02, -0.01, 0.0])
        S, _ = sc_at(SVK, ev)
        a = metric_from_strain(EYE, ev)
        for crit in ("mixed", "strain", "stress"):
            code = classify_batch(S[None], ev[None], a[None], EYE[None], SVK.mu,
                                  criterion=crit)[0]
            assert code == int(TensionState.SLACK)


class TestGammaAndResidual:
    def test_gamma_zero_when_uniaxial_condition_met(self):
        ev = np.array([0.03, -0.03, 0.0])
        S, C = sc_at(SVK, ev)
        th, g = find_wrinkle_angle(S, C, ev)
        Sp = modified_stress(S, C, th, g)
        n1 = direction_vectors(th)[0]
        assert gamma(th, Sp, C) == pytest.approx(0.0, abs=1e-12)

    def test_gamma_substitution_zeroes_first_condition(self):
        for ev, S, C in wrinkled_states(SVK, 5):
            th = RNG.uniform(0, np.pi)
            g = gamma(th, S, C)
            n1 = direction_vectors(th)[0]
            resid = S @ n1 + g * (n1 @ C @ n1)
            assert abs(resid) < 1e-12 * np.linalg.norm(S)

    def test_gamma_homogeneous_in_stress(self):
        ev, S, C = wrinkled_states(SVK, 1)[0]
        th = 0.7
        assert gamma(th, 3.5 * S, C) == pytest.approx(3.5 * gamma(th, S, C), rel=1e-13)

    def test_residual_zero_at_principal_axis(self):
        ev = np.array([0.02, -0.025, 0.0])
        S, C = sc_at(SVK, ev)
        assert S[0] > 0 > S[1]
        assert angle_residual(np.pi / 2, S, C) == pytest.approx(0.0, abs=1e-9)

    def test_residual_pi_periodic(self):
        ev, S, C = wrinkled_states(SVK, 1)[0]
        for th in RNG.uniform(0, np.pi, 100):
            f1 = angle_residual(th, S, C)
            f2 = angle_residual(th + np.pi, S, C)
            assert f1 == pytest.approx(f2, rel=1e-12, abs=1e-9)

    def test_sign_change_in_scan_brackets(self):
        ev, S, C = wrinkled_states(SVK, 1)[0]
        grid = np.linspace(0, np.pi, 17)
        f = np.array([angle_residual(t, S, C) for t in grid])
        assert np.any(f[:-1] * f[1:] < 0)


def grid_scan_root(S, C, Ev, n=10_000):
    """Brute-force oracle: densely scan f, bisect sign changes, filter feasibility."""
    grid = np.linspace(0, np.pi, n + 1)
    f = np.array([angle_residual(t, S, C) for t in grid])
    roots = [float(t) for t, v in zip(grid, f) if v == 0.0]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], f[:-1], f[1:]):
        if fa * fb < 0:
            lo, hi, flo = a, b, fa
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                fm = angle_residual(mid, S, C)
                if flo * fm <= 0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            roots.append(0.5 * (lo + hi))
    feas = []
    for t in sorted(np.mod(roots, np.pi)):
        g = gamma(t, S, C)
        n1, _, _, n4 = direction_vectors(t)
        if (Ev + g * n1) @ n4 > 0:
            feas.append(t)
    return feas[0]


class TestRootFinding:
    def test_axis_aligned_state_root_is_half_pi(self):
        ev = np.array([0.02, -0.02, 0.0])
        S, C = sc_at(SVK, ev)
        th, g = find_wrinkle_angle(S, C, ev)
        assert th == pytest.approx(np.pi / 2, abs=1e-12)
        assert g > 0

    def test_swapped_axes_root_is_zero(self):
        ev = np.array([-0.02, 0.02, 0.0])
        S, C = sc_at(SVK, ev)
        th, _ = find_wrinkle_angle(S, C, ev)
        assert th == pytest.approx(0.0, abs=1e-12)

    def test_rotation_equivariance(self):
        ev = np.array([0.02, -0.02, 0.0])
        S0, C0 = sc_at(SVK, ev)
        th0, _ = find_wrinkle_angle(S0, C0, ev)
        phi = np.pi / 4
        c, s = np.cos(phi), np.sin(phi)
        Q = np.array([[c, -s], [s, c]])
        Em = np.array([[ev[0], ev[2] / 2], [ev[2] / 2, ev[1]]])
        Em_r = Q @ Em @ Q.T
        ev_r = np.array([Em_r[0, 0], Em_r[1, 1], 2 * Em_r[0, 1]])
        S_r, C_r = sc_at(SVK, ev_r)
        th_r, _ = find_wrinkle_angle(S_r, C_r, ev_r)
        assert (th_r - th0) % np.pi == pytest.approx(phi, abs=1e-10)

    def test_brent_matches_grid_scan(self):
        for model in (SVK, NH):
            for ev, S, C in wrinkled_states(model, 10):
                th, _ = find_wrinkle_angle(S, C, ev)
                assert th == pytest.approx(grid_scan_root(S, C, ev), abs=1e-6)

    def test_batch_matches_scalar(self):
        states = wrinkled_states(SVK, 40) + wrinkled_states(NH, 40)
        S = np.array([s for _, s, _ in states])
        C = np.array([c for _, _, c in states])
        Ev = np.array([e for e, _, _ in states])
        th_b, g_b = find_wrinkle_angle_batch(S, C, Ev)
        for k in range(len(states)):
            th, g = find_wrinkle_angle(S[k], C[k], Ev[k])
            assert th_b[k] == pytest.approx(th, abs=1e-12)
            assert g_b[k] == pytest.approx(g, rel=1e-10, abs=1e-14)

    def test_determinism_and_canonical_range(self):
        for ev, S, C in wrinkled_states(NH, 10):
            a = find_wrinkle_angle(S, C, ev)
            b = find_wrinkle_angle(S, C, ev)
            assert a == b
            assert 0.0 <= a[0] < np.pi

    def test_no_root_raises_with_samples(self):
        # biaxial compression: every root of f violates the stretch condition
        ev = np.array([-0.05, -0.03, 0.0])
        S, C = sc_at(SVK, ev)
        with pytest.raises(RootNotFoundError) as exc:
            find_wrinkle_angle(S, C, ev)
        assert exc.value.samples is not None


class TestModifiedStress:
    def test_zero_gamma_passthrough(self):
        ev, S, C = wrinkled_states(SVK, 1)[0]
        np.testing.assert_array_equal(modified_stress(S, C, 0.3, 0.0), S)

    def test_svk_uniaxial_oracle(self):
        nu, E = 0.3, 3.5e6
        e1 = 0.02
        e2 = -0.5 * nu * e1 - 0.015   # below -nu*e1: transverse compression
        ev = np.array([e1, e2, 0.0])
        S, C = sc_at(SVK, ev)
        th, g = find_wrinkle_angle(S, C, ev)
        Sp = modified_stress(S, C, th, g)
        assert Sp[0] == pytest.approx(E * e1, rel=1e-12)
        assert abs(Sp[1]) < 1e-9 * np.linalg.norm(S)
        assert abs(Sp[2]) < 1e-9 * np.linalg.norm(S)

    def test_uniaxial_conditions_all_materials(self):
        for model in MODELS:
            for ev, S, C in wrinkled_states(model, 20):
                sol = wrinkle_solution(S, C, ev)
                ns = np.linalg.norm(S)
                assert abs(sol.stress @ sol.n1) < 1e-9 * ns
                assert abs(sol.stress @ sol.n2) < 1e-9 * ns
                assert (ev + sol.gamma * sol.n1) @ sol.n4 > 0

    def test_direction_vector_identities(self):
        th = 0.456
        n1, n2, n3, n4 = direction_vectors(th)
        h = 1e-7
        n1p = direction_vectors(th + h)[0]
        n1m = direction_vectors(th - h)[0]
        np.testing.assert_allclose((n1p - n1m) / (2 * h), 2 * n2, rtol=1e-7)
        n2p = direction_vectors(th + h)[1]
        n2m = direction_vectors(th - h)[1]
        np.testing.assert_allclose((n2p - n2m) / (2 * h), n3, rtol=1e-6, atol=1e-8)
        np.testing.assert_allclose(n4, n3 + n1, atol=1e-15)


def sprime_map(model, g, ev, hyperelastic):
    """Full wrinkling stress map E -> S' with the angle re-solved (FD oracle)."""
    gi = inv22(g)
    a = metric_from_strain(g, ev)
    S, C = stress_and_tangent_batch(model, g[None], gi[None], a[None])
    th, gm = find_wrinkle_angle(S[0], C[0], ev)
    return modified_stress(S[0], C[0], th, gm)


def fd_cprime(model, g, ev, hyperelastic, h=1e-7):
    out = np.empty((3, 3))
    for k in range(3):
        d = np.zeros(3)
        d[k] = h
        out[:, k] = (sprime_map(model, g, ev + d, hyperelastic)
                     - sprime_map(model, g, ev - d, hyperelastic)) / (2 * h)
    return out


class TestModifiedTangent:
    def test_rank_deficiency_at_zero_gamma(self):
        ev = np.array([0.03, -0.03, 0.0])
        S, C = sc_at(SVK, ev)
        th, g = find_wrinkle_angle(S, C, ev)
        Sp = modified_stress(S, C, th, g)
        Cp = modified_tangent_elastic(Sp, C, th, 0.0)
        n1 = direction_vectors(th)[0]
        np.testing.assert_allclose(Cp @ n1, 0.0, atol=1e-9 * np.abs(C).max())

    def test_svk_uniaxial_tangent_entry(self):
        ev = np.array([0.02, -0.03, 0.0])
        S, C = sc_at(SVK, ev)
        th, g = find_wrinkle_angle(S, C, ev)
        Cp = modified_tangent_elastic(S, C, th, g)
        assert Cp[0, 0] == pytest.approx(SVK.young, rel=1e-6)

    def test_elastic_tangent_matches_fd(self):
        for ev, S, C in wrinkled_states(SVK, 20):
            th, g = find_wrinkle_angle(S, C, ev)
            Cp = modified_tangent_elastic(S, C, th, g)
            Cfd = fd_cprime(SVK, EYE, ev, hyperelastic=False)
            np.testing.assert_allclose(Cp, Cfd, rtol=0, atol=1e-4 * np.abs(Cp).max())

    def test_svk_through_hyperelastic_path_identical(self):
        for ev, S, C in wrinkled_states(SVK, 10):
            th, g = find_wrinkle_angle(S, C, ev)
            Ce = modified_tangent_elastic(S, C, th, g)
            dC = np.zeros((3, 3, 3))
            Ch = modified_tangent_hyperelastic(S, C, dC, th, g)
            err = np.abs(Ce - Ch).max()
            assert err <= 1e-13 * np.abs(Ce).max()

    def test_hyperelastic_tangent_matches_fd(self):
        for model in (NH, MODELS[3]):
            for ev, S, C in wrinkled_states(model, 10):
                th, g = find_wrinkle_angle(S, C, ev)
                gi = inv22(EYE)
                a = metric_from_strain(EYE, ev)
                mode = "analytic" if model.kind == "nh_incompressible" else "finite_difference"
                dC = tangent_strain_derivative_batch(model, EYE[None], gi[None],
                                                     a[None], mode)[0]
                Cp = modified_tangent_hyperelastic(S, C, dC, th, g)
                Cfd = fd_cprime(model, EYE, ev, hyperelastic=True)
                np.testing.assert_allclose(Cp, Cfd, rtol=0, atol=1e-4 * np.abs(Cp).max())

    def test_hyperelastic_analytic_vs_fd_dcde_consistent(self):
        for ev, S, C in wrinkled_states(NH, 10):
            th, g = find_wrinkle_angle(S, C, ev)
            gi = inv22(EYE)
            a = metric_from_strain(EYE, ev)
            dCa = tangent_strain_derivative_batch(NH, EYE[None], gi[None], a[None],
                                                  "analytic")[0]
            dCf = tangent_strain_derivative_batch(NH, EYE[None], gi[None], a[None],
                                                  "finite_difference")[0]
            Ca = modified_tangent_hyperelastic(S, C, dCa, th, g)
            Cf = modified_tangent_hyperelastic(S, C, dCf, th, g)
            assert np.abs(Ca - Cf).max() < 1e-5 * np.abs(Ca).max()


class TestFrameCovariance:
    def test_sprime_transforms_tensorially(self):
        """A rotated parameterisation of the same physical state gives the
        same Cartesian push-forward of the modified stress."""
        F2 = np.array([[1.04, 0.03], [0.0, 0.92]])  # in-plane deformation gradient
        for phi in (0.0, 0.31, 1.2):
            c, s = np.cos(phi), np.sin(phi)
            Q = np.array([[c, -s], [s, c]])
            a0 = np.zeros((2, 3))
            a0[:, :2] = Q.T          # rows are base vectors rotated by phi
            a = np.zeros((2, 3))
            a[:, :2] = (F2 @ Q).T
            g = a0 @ a0.T
            am = a @ a.T
            gi = inv22(g)
            S, C = stress_and_tangent_batch(NH, g[None], gi[None], am[None])
            ev = np.array([0.5 * (am[0, 0] - g[0, 0]), 0.5 * (am[1, 1] - g[1, 1]),
                           am[0, 1] - g[0, 1]])
            sol = wrinkle_solution(S[0], C[0], ev)
            Sm = np.array([[sol.stress[0], sol.stress[2]],
                           [sol.stress[2], sol.stress[1]]])
            cart = a0[:, :2].T @ Sm @ a0[:, :2]
            if phi == 0.0:
                ref = cart
            else:
                np.testing.assert_allclose(cart, ref, rtol=0, atol=1e-10 * np.abs(ref).max())


class TestEvaluatePoint:
    def test_zero_strain_slack(self):
        fr = frame_from_bases(np.eye(2, 3), np.eye(2, 3))
        res = evaluate_point(NH, fr)
        assert res.state is TensionState.SLACK
        np.testing.assert_array_equal(res.force, np.zeros(3))
        np.testing.assert_array_equal(res.tangent, np.zeros((3, 3)))

    def test_equibiaxial_taut_passthrough(self):
        lam = 1.05
        a0 = np.eye(2, 3)
        a = lam * np.eye(2, 3)
        fr = frame_from_bases(a0, a)
        res = evaluate_point(NH, fr)
        assert res.state is TensionState.TAUT
        S, C = stress_and_tangent_batch(NH, fr.a0_met[None], fr.a0_con[None],
                                        fr.a_met[None])
        np.testing.assert_allclose(res.force, T * S[0], rtol=1e-14)
        np.testing.assert_allclose(res.tangent, T * C[0], rtol=1e-14)

    def test_wrinkled_point_reports_angle(self):
        a0 = np.eye(2, 3)
        a = np.eye(2, 3)
        a[0] *= 1.03
        a[1] *= 0.96
        fr = frame_from_bases(a0, a)
        res = evaluate_point(NH, fr)
        assert res.state is TensionState.WRINKLED
        assert res.theta is not None and 0 <= res.theta < np.pi
        assert res.gamma is not None
