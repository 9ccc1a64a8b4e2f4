"""Command-line interface: run benchmarks, list them, run quick verification."""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .bench import (
    BENCHMARKS,
    PRESETS,
    RunConfig,
    default_config,
    load_config,
    run_benchmark,
)
from .splines import InvalidArgumentError


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tftmembrane",
        description="Spline membrane solver with implicit tension-field wrinkling")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark from a config file or preset")
    run.add_argument("config", help="config file path, or a benchmark id to use "
                                    "its preset")
    run.add_argument("--out", help="output directory override")
    run.add_argument("--degree", type=int, help="spline degree override")
    run.add_argument("--elements", help="elements per direction, e.g. 16 or 16x32")
    run.add_argument("--material", help="material model override")
    run.add_argument("--quiet", action="store_true")

    sub.add_parser("list-benchmarks", help="print the available benchmark ids")
    sub.add_parser("verify", help="run the quick oracle suite")
    return ap


def _cmd_run(args) -> int:
    from .bench import _parse_elements
    try:
        if args.config in PRESETS:
            cfg = default_config(args.config)
        else:
            cfg = load_config(args.config)
        if args.out:
            cfg.out_dir = args.out
        if args.degree:
            cfg.degree = args.degree
        if args.elements:
            cfg.elements = _parse_elements(args.elements)
        if args.material:
            cfg.material["model"] = args.material
        cfg.__post_init__()
    except (InvalidArgumentError, KeyError, ValueError) as err:
        print(f"error: invalid configuration: {err}", file=sys.stderr)
        return 2
    try:
        t0 = time.time()
        run_benchmark(cfg, verbose=not args.quiet)
        if not args.quiet:
            print(f"done in {time.time() - t0:.1f} s; outputs in {cfg.out_dir}")
        return 0
    except Exception as err:  # solver failures exit nonzero with the reason
        print(f"error: benchmark failed: {type(err).__name__}: {err}",
              file=sys.stderr)
        return 1


def _cmd_verify() -> int:
    """Quick oracle suite: spot checks of every numerical kernel."""
    from .assembly import FixComponent, FixField, LineLoad, MembraneProblem
    from .kinematics import inv22, metric_from_strain
    from .materials import MaterialModel, psi_batch, stress_and_tangent_batch
    from .solvers import (DynamicRelaxationConfig, NewtonConfig,
                          dynamic_relaxation, newton_solve)
    from .splines import benchmark_geometry, surface_area
    from .wrinkling import direction_vectors, find_wrinkle_angle, wrinkle_solution

    t_start = time.time()
    checks = []

    def check(name, fn):
        t0 = time.time()
        try:
            fn()
            checks.append((name, True, time.time() - t0))
            print(f"PASS {name} ({time.time() - t0:.2f}s)")
        except Exception as err:
            checks.append((name, False, time.time() - t0))
            print(f"FAIL {name}: {type(err).__name__}: {err}")

    def spline_checks():
        surf = benchmark_geometry("annulus", degree=2, elements=(2, 8),
                                  R_i=62.5e-3, R_o=250e-3)
        rng = np.random.default_rng(0)
        for _ in range(20):
            xi = rng.uniform(0, 1, 2)
            _, vals, grads, _ = surf.eval_basis(xi, 1)
            assert abs(vals.sum() - 1) < 1e-12
            assert abs(grads.sum(axis=0)).max() < 1e-9
        exact = np.pi * (250e-3**2 - 62.5e-3**2)
        assert abs(surface_area(surf, n_gauss=10) - exact) / exact < 1e-10

    def material_checks():
        rng = np.random.default_rng(1)
        mats = [MaterialModel.nh_incompressible(1.5e6, 1e-3),
                MaterialModel.mr_compressible(1.3125e6, 0.1875e6, 14.5e6, 1e-3)]
        g = np.tile(np.eye(2), (10, 1, 1))
        gi = g.copy()
        ev = rng.uniform(-0.1, 0.1, (10, 3))
        a = metric_from_strain(g, ev)
        h = 1e-7
        for mat in mats:
            S, C = stress_and_tangent_batch(mat, g, gi, a)
            for k in range(3):
                d = np.zeros_like(ev)
                d[:, k] = h
                fd = (psi_batch(mat, g, gi, metric_from_strain(g, ev + d))
                      - psi_batch(mat, g, gi, metric_from_strain(g, ev - d))) / (2 * h)
                assert np.abs(S[:, k] - fd).max() < 1e-5 * np.abs(S).max()

    def wrinkle_checks():
        mat = MaterialModel.nh_incompressible(1.5e6, 1e-3)
        rng = np.random.default_rng(2)
        g = np.eye(2)
        for _ in range(5):
            ev = np.array([0.05 + 0.05 * rng.random(),
                           -0.05 - 0.05 * rng.random(),
                           0.05 * rng.standard_normal()])
            a = metric_from_strain(g, ev)
            S, C = stress_and_tangent_batch(mat, g[None], inv22(g)[None], a[None])
            sol = wrinkle_solution(S[0], C[0], ev)
            ns = np.linalg.norm(S[0])
            assert abs(sol.stress @ sol.n1) < 1e-9 * ns
            assert abs(sol.stress @ sol.n2) < 1e-9 * ns

    def solver_checks():
        # quarter-period peak detection on a single-dof oscillator
        from scipy import sparse

        class Spring:
            ndof = 1
            free_dofs = np.array([0])
            fixed_dofs = np.array([], dtype=int)

            def residual(self, u, load_scale=1.0, frozen_states=None):
                return 4.0 * (u - 1.0)

            def jacobian(self, u, load_scale=1.0, frozen_states=None):
                return sparse.csr_matrix([[4.0]])

            def lumped_mass(self, alpha):
                return np.array([alpha])

            def apply_constraints(self, u, s):
                return np.array(u, dtype=float, copy=True)

        period = 2 * np.pi / 2.0
        dt = period / 200
        _, rep = dynamic_relaxation(Spring(), np.array([0.0]),
                                    DynamicRelaxationConfig(dt=dt, alpha=1.0,
                                                            tol_residual=1e-8))
        peaks = [p for k, p in rep.events if k == "peak"]
        assert peaks and abs((peaks[0] - 1.5) * dt - period / 4) < 1.5 * dt

    def quick_uat():
        mat = MaterialModel.nh_incompressible(1.5e6, 1e-3)
        surf = benchmark_geometry("unit_square", degree=2, elements=(1, 1))
        cons = [FixComponent("umin", 0), FixComponent("vmin", 1), FixField(2)]
        prob = MembraneProblem(surf, mat, cons,
                               [LineLoad("umax", (1000.0, 0, 0))],
                               wrinkle_eps=1e-9)
        cp = surf.control_points
        u = np.zeros((surf.n_cp, 3))
        u[:, 0] = (1000.0 / 8 / (1e-3 * 4.5e6)) * cp[:, 0]
        u = u.ravel()
        for s in np.linspace(1 / 8, 1, 8):
            u, _ = newton_solve(prob, u, NewtonConfig(tol_residual=1e-9,
                                                      max_iterations=120),
                                load_scale=s)
        from scipy.optimize import brentq
        lam_ex = brentq(lambda l: 1.5e6 * 1e-3 * (l - l**-2) - 1000.0, 1, 20)
        lam = 1.0 + u.reshape(-1, 3)[surf.boundary_cp_indices("umax"), 0].mean()
        assert abs(lam - lam_ex) / lam_ex < 1e-5

    check("spline basis and exact areas", spline_checks)
    check("material stress vs energy gradient", material_checks)
    check("wrinkling uniaxial conditions", wrinkle_checks)
    check("dynamic relaxation peak detection", solver_checks)
    check("uniaxial tension mini-benchmark", quick_uat)

    failed = [name for name, ok, _ in checks if not ok]
    print(f"verify: {len(checks) - len(failed)}/{len(checks)} checks passed "
          f"in {time.time() - t_start:.1f} s")
    return 1 if failed else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list-benchmarks":
        for name in BENCHMARKS:
            print(name)
        return 0
    if args.command == "verify":
        return _cmd_verify()
    return _cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
