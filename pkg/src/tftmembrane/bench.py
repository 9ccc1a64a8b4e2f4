"""Benchmark registry, run configuration, execution drivers, result export.

Four built-in cases: a uniaxial tension test (Newton load stepping against
closed-form membrane solutions), an inflated square membrane (pillow), and
annulus/cylinder surfaces twisted out of plane by displacement control with
the hybrid DR+NR stepping protocol.
"""

from __future__ import annotations

import configparser
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import output as out
from .assembly import (
    FixComponent,
    FixField,
    FollowerPressure,
    LineLoad,
    MembraneProblem,
    RigidBoundaryMotion,
)
from .materials import MaterialModel
from .solvers import (
    DynamicRelaxationConfig,
    NewtonConfig,
    SolverError,
    StepRecord,
    dynamic_relaxation,
    hybrid_step_driver,
    newton_solve,
    staggered_field_solve,
)
from .splines import InvalidArgumentError, benchmark_geometry
from .wrinkling import evaluate_field

BENCHMARKS = ("uat", "pillow", "annulus", "cylinder", "custom")

# Benchmark parameter registry (SI units).  validate_presets() cross-checks
# every derived quantity at import time.
PRESETS = {
    "uat": dict(L=1.0, W=1.0, thickness=1.0e-3, mu=1.5e6, nu_comp=0.45,
                nu_incomp=0.5, c1_over_c2=7.0, p_max=1.0e6,
                degree=2, elements=(1, 1), steps=40),
    "pillow": dict(diagonal=1.2, thickness=1.0e-4, E=588.0e6, nu=0.4,
                   pressure=5000.0, degree=3, elements=(32, 32)),
    "annulus": dict(R_i=62.5e-3, R_o=250.0e-3, thickness=0.05e-3, E=1.0e9,
                    nu=0.5, rotation=np.pi / 2, lift=125.0e-3,
                    degree=3, elements=(32, 32), steps=20),
    "cylinder": dict(R=250.0e-3, L=1.0, thickness=0.05e-3, E=1.0e9, nu=0.5,
                     rotation=np.pi / 2, pull=1.0,
                     degree=3, elements=(32, 32), steps=20),
}


def validate_presets() -> None:
    """Cross-check the registry against the benchmark definitions."""
    u = PRESETS["uat"]
    assert u["mu"] == 1.5e6 and u["nu_comp"] == 0.45 and u["nu_incomp"] == 0.5
    assert 2 * u["mu"] * (1 + u["nu_comp"]) == 4.35e6      # E = 2 mu (1+nu)
    p = PRESETS["pillow"]
    assert abs(np.sqrt(p["diagonal"] ** 2 / 2) - 0.8485281374238569) < 1e-12
    assert p["E"] == 588e6 and p["nu"] == 0.4 and p["pressure"] == 5000.0
    assert p["thickness"] == 0.1e-3
    a = PRESETS["annulus"]
    assert (a["R_i"], a["R_o"]) == (62.5e-3, 250e-3)
    assert a["lift"] == 125e-3 and a["rotation"] == np.pi / 2
    assert a["E"] == 1e9 and a["nu"] == 0.5 and a["thickness"] == 5e-5
    c = PRESETS["cylinder"]
    assert (c["R"], c["L"]) == (250e-3, 1.0)
    assert c["pull"] == 1.0 and c["rotation"] == np.pi / 2


validate_presets()


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    benchmark: str
    degree: int
    elements: tuple
    out_dir: str = "results"
    material: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    geometry_file: str | None = None

    def __post_init__(self):
        if self.benchmark not in BENCHMARKS:
            raise InvalidArgumentError(f"unknown benchmark {self.benchmark!r}")
        if self.degree < 1:
            raise InvalidArgumentError("degree must be >= 1")
        if self.benchmark in ("annulus", "cylinder") and self.degree < 2:
            raise InvalidArgumentError("circular geometries need degree >= 2")
        if min(self.elements) < 1:
            raise InvalidArgumentError("elements must be >= 1")


def _parse_elements(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return int(text[0]), int(text[1])
    t = str(text).lower().replace("x", " ").split()
    if len(t) == 1:
        return int(t[0]), int(t[0])
    return int(t[0]), int(t[1])


def default_config(benchmark: str) -> RunConfig:
    if benchmark not in PRESETS:
        raise InvalidArgumentError(f"no preset for benchmark {benchmark!r}")
    p = PRESETS[benchmark]
    material = {}
    if benchmark == "uat":
        material = dict(model="all")
    elif benchmark == "pillow":
        material = dict(model="nh_compressible", E=p["E"], nu=p["nu"],
                        thickness=p["thickness"])
    else:
        material = dict(model="nh_incompressible", E=p["E"], nu=p["nu"],
                        thickness=p["thickness"])
    return RunConfig(benchmark=benchmark, degree=p["degree"],
                     elements=p["elements"], material=material,
                     out_dir=f"results/{benchmark}")


def load_config(path) -> RunConfig:
    """Parse a run configuration file (INI-style key = value sections)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = cp.read(path)
    if not read:
        raise InvalidArgumentError(f"cannot read config file {path!r}")
    if "run" not in cp or "benchmark" not in cp["run"]:
        raise InvalidArgumentError("config missing [run] benchmark")
    bench = cp["run"]["benchmark"].strip()
    cfg = default_config(bench) if bench in PRESETS else RunConfig(
        benchmark=bench, degree=2, elements=(4, 4))
    run = cp["run"]
    if "degree" in run:
        cfg.degree = run.getint("degree")
    if "elements" in run:
        cfg.elements = _parse_elements(run["elements"])
    if "out" in run:
        cfg.out_dir = run["out"]
    if "geometry_file" in run:
        cfg.geometry_file = run["geometry_file"]
    for section, target in (("material", cfg.material), ("solver", cfg.solver),
                            ("output", cfg.output)):
        if section in cp:
            for key, val in cp[section].items():
                try:
                    target[key] = float(val)
                except ValueError:
                    target[key] = val.strip()
    cfg.__post_init__()
    return cfg


def material_from_config(mat: dict) -> MaterialModel:
    """Build a material from configuration keys."""
    model = str(mat.get("model", "nh_incompressible")).lower()
    t = float(mat.get("thickness", 1e-3))
    if model == "svk":
        return MaterialModel.svk_from_E_nu(float(mat["e"]) if "e" in mat
                                           else float(mat["E"]),
                                           float(mat.get("nu", 0.3)), t)
    E = float(mat.get("e", mat.get("E", 0.0)))
    nu = float(mat.get("nu", 0.5))
    mu = float(mat.get("mu", E / (2 * (1 + nu)) if E else 0.0))
    if model == "nh_incompressible":
        return MaterialModel.nh_incompressible(mu, t)
    if model == "nh_compressible":
        K = float(mat.get("k", mat.get("K", E / (3 * (1 - 2 * nu)))))
        return MaterialModel.nh_compressible(mu, K, t)
    ratio = float(mat.get("c1_over_c2", 7.0))
    c2 = mu / (1 + ratio)
    c1 = mu - c2
    c1 = float(mat.get("c1", c1))
    c2 = float(mat.get("c2", c2))
    if model == "mr_incompressible":
        return MaterialModel.mr_incompressible(c1, c2, t)
    if model == "mr_compressible":
        K = float(mat.get("k", mat.get("K", E / (3 * (1 - 2 * nu)))))
        return MaterialModel.mr_compressible(c1, c2, K, t)
    raise InvalidArgumentError(f"unknown material model {model!r}")


# ---------------------------------------------------------------------------
# uniaxial tension benchmark
# ---------------------------------------------------------------------------

def uat_materials(thickness=None, mu=None) -> dict:
    """The four hyperelastic materials of the tension benchmark."""
    p = PRESETS["uat"]
    t = thickness or p["thickness"]
    mu = mu or p["mu"]
    r = p["c1_over_c2"]
    c2 = mu / (1 + r)
    c1 = mu - c2
    E_comp = 2 * mu * (1 + p["nu_comp"])
    K = E_comp / (3 * (1 - 2 * p["nu_comp"]))
    return {
        "nh_incompressible": MaterialModel.nh_incompressible(mu, t),
        "mr_incompressible": MaterialModel.mr_incompressible(c1, c2, t),
        "nh_compressible": MaterialModel.nh_compressible(mu, K, t),
        "mr_compressible": MaterialModel.mr_compressible(c1, c2, K, t),
    }


def uat_problem(material: MaterialModel, degree=2, elements=(1, 1),
                p_max=None) -> MembraneProblem:
    p = PRESETS["uat"]
    surf = benchmark_geometry("unit_square", degree=degree, elements=elements,
                              L=p["L"], W=p["W"])
    cons = [FixComponent("umin", 0), FixComponent("vmin", 1), FixField(2)]
    g_max = (p_max or p["p_max"]) * material.thickness
    loads = [LineLoad("umax", (g_max, 0.0, 0.0))]
    return MembraneProblem(surf, material, cons, loads, wrinkle_eps=1e-9)


def run_uat_curve(problem: MembraneProblem, n_steps: int = 40,
                  nr_tol: float = 1e-10):
    """Newton load stepping from a taut small-strain predictor.

    Returns (curve rows (s, load, stretch), final u, step records).
    Iterates approach each wrinkled solution from the taut side; the parked
    wrinkling amplitude (and with it the O(E_W^2) truncation error of the
    stress) shrinks proportionally to the step size.
    """
    surf = problem.surface
    mat = problem.material
    g_max = max(np.linalg.norm(load.vector) for load in problem.loads
                if isinstance(load, LineLoad))
    cp = surf.control_points
    u = np.zeros((surf.n_cp, 3))
    u[:, 0] = (g_max / n_steps / (mat.thickness * mat.young)) * cp[:, 0]
    u = u.ravel()
    cfg = NewtonConfig(tol_residual=nr_tol, tol_update=1e-13, max_iterations=120)
    rows = []
    records = []
    for s in np.linspace(1.0 / n_steps, 1.0, n_steps):
        try:
            u, rep = newton_solve(problem, u, cfg, load_scale=s)
        except SolverError:
            # rescue: relax dynamically, then retry Newton once
            u_dr, _ = dynamic_relaxation(
                problem, u, DynamicRelaxationConfig(tol_residual=1e-4),
                load_scale=s)
            u, rep = newton_solve(problem, u_dr, cfg, load_scale=s)
        idx, vals, _, _ = surf.eval_basis((1.0, 0.5), 0)
        stretch = 1.0 + float(vals @ u.reshape(-1, 3)[idx, 0]) / PRESETS["uat"]["L"]
        rows.append((s, s * g_max / mat.thickness, stretch))
        records.append(StepRecord(s, u.copy(), "converged_NR", None, rep,
                                  rep.residual_norms[-1]
                                  / max(rep.residual_norms[0], 1e-300)))
    return rows, u, records


def run_uat_convergence_history(problem: MembraneProblem, u_converged):
    """Residual history of a Newton re-solve from a perturbed state."""
    _, rep = newton_solve(problem, 0.9 * np.asarray(u_converged),
                          NewtonConfig(tol_residual=1e-14, tol_update=1e-15,
                                       max_iterations=60))
    return rep


def fitted_convergence_order(residual_norms, floor=1e-12):
    """Slope of log r_{i+1} vs log r_i over the decreasing prefix."""
    r = np.asarray(residual_norms, dtype=float)
    r = r / r[0]
    i0 = int(np.argmax(r))
    seq = [r[i0]]
    for x in r[i0 + 1:]:
        if x >= seq[-1] or x < floor:
            break
        seq.append(x)
    seq = np.asarray(seq)
    if seq.size < 3:
        return None
    return float(np.polyfit(np.log(seq[:-1]), np.log(seq[1:]), 1)[0])


def run_uat(cfg: RunConfig, verbose=False) -> dict:
    p = PRESETS["uat"]
    names = (list(uat_materials()) if cfg.material.get("model", "all") == "all"
             else [cfg.material["model"]])
    mats = uat_materials()
    n_steps = int(cfg.solver.get("steps", p["steps"]))
    results = {}
    for name in names:
        mat = mats[name]
        prob = uat_problem(mat, degree=cfg.degree, elements=cfg.elements)
        t0 = time.time()
        rows, u, records = run_uat_curve(prob, n_steps=n_steps)
        rep = run_uat_convergence_history(prob, u)
        order = fitted_convergence_order(rep.residual_norms)
        results[name] = dict(curve=rows, order=order,
                             history=rep.residual_norms, runtime=time.time() - t0)
        if verbose:
            print(f"  uat[{name}]: stretch {rows[-1][2]:.6f} at p = "
                  f"{rows[-1][1]:.3g} Pa, NR order {order:.2f}")
        out.write_curve_csv(os.path.join(cfg.out_dir, f"uat_curve_{name}.csv"),
                            ["step", "load_pa", "stretch"], rows)
        out.write_curve_csv(
            os.path.join(cfg.out_dir, f"uat_convergence_{name}.csv"),
            ["iteration", "residual_norm", "relative"],
            [(i, r, r / rep.residual_norms[0])
             for i, r in enumerate(rep.residual_norms)])
    return results


# ---------------------------------------------------------------------------
# pillow benchmark
# ---------------------------------------------------------------------------

def pillow_problem(cfg: RunConfig, stage: str) -> MembraneProblem:
    """Quarter model of the inflated square membrane.

    Stage 'prestretch': outward in-plane edge loads on the free boundaries,
    all z pinned (the in-plane state is the exact stage equilibrium).
    Stage 'inflate': follower pressure, symmetry and seam conditions only.
    """
    p = PRESETS["pillow"]
    mat = material_from_config(cfg.material)
    surf = benchmark_geometry("square_diag", degree=cfg.degree,
                              elements=cfg.elements, L=p["diagonal"])
    press = float(cfg.material.get("pressure", p["pressure"]))
    cons = [FixComponent("umax", 0),    # x-symmetry plane
            FixComponent("vmax", 1),    # y-symmetry plane
            FixComponent("umin", 2),    # sealed outer edges stay in plane
            FixComponent("vmin", 2)]
    g = press * mat.thickness
    if stage == "prestretch":
        cons = cons + [FixField(2)]
        loads = [LineLoad("umin", (-g, 0.0, 0.0)),
                 LineLoad("vmin", (0.0, -g, 0.0))]
    else:
        measure = str(cfg.solver.get("pressure_measure", "undeformed"))
        loads = [FollowerPressure(press, measure=measure)]
    return MembraneProblem(surf, mat, cons, loads,
                           wrinkle_eps=float(cfg.solver.get("wrinkle_eps", 1e-7)))


def run_pillow(cfg: RunConfig, verbose=False) -> dict:
    t0 = time.time()
    pre = pillow_problem(cfg, "prestretch")
    mat = pre.material
    # taut biaxial predictor, then Newton (state is taut: plain convergence)
    eps0 = float(cfg.material.get("pressure", PRESETS["pillow"]["pressure"])) \
        / mat.young
    cp = pre.surface.control_points
    u = np.zeros((pre.surface.n_cp, 3))
    # outward biaxial stretch: zero on the symmetry planes at x,y = max
    u[:, 0] = eps0 * (cp[:, 0] - cp[:, 0].max())
    u[:, 1] = eps0 * (cp[:, 1] - cp[:, 1].max())
    u0 = pre.apply_constraints(u.ravel(), 1.0)
    u_pre, _ = newton_solve(pre, u0, NewtonConfig(tol_residual=1e-8))

    prob = pillow_problem(cfg, "inflate")
    surf = prob.surface
    press = prob._pressure().magnitude

    # membrane-inflation bump seed: w ~ a (p a / (E t))^(1/3); Newton with a
    # capped step does the rest, with a short dynamic-relaxation rescue on
    # the rare step where it diverges
    a_edge = surf.control_points[:, 0].max()
    w0 = min(1.2 * a_edge * (press * a_edge / (mat.young * mat.thickness)) ** (1 / 3),
             0.5 * a_edge)
    cpx = surf.control_points[:, 0] / a_edge
    cpy = surf.control_points[:, 1] / a_edge
    u_b = u_pre.copy().reshape(-1, 3)
    u_b[:, 2] = w0 * cpx * cpy * (2 - cpx) * (2 - cpy)
    u = prob.apply_constraints(u_b.ravel(), 1.0)

    n_steps = int(cfg.solver.get("steps", 1))
    nr_cfg = NewtonConfig(tol_residual=float(cfg.solver.get("nr_tol", 1e-6)),
                          max_iterations=int(cfg.solver.get("nr_max_iterations", 200)),
                          max_step=0.1 * a_edge)
    schedule = np.linspace(1.0 / n_steps, 1.0, n_steps)
    records = []
    events = []
    for s in schedule:
        dr_rep = None
        try:
            u, rep = newton_solve(prob, u, nr_cfg, load_scale=s)
            tag = "converged_NR"
        except SolverError as err:
            events.append(("nr_failure", float(s), str(err)))
            u_best = err.u_best if err.u_best is not None else u
            try:
                u, rep = staggered_field_solve(prob, u_best, nr_cfg,
                                               load_scale=s)
                tag = "converged_NR"
            except SolverError as err2:
                events.append(("staggered_failure", float(s), str(err2)))
                u_dr, dr_rep = dynamic_relaxation(
                    prob, err2.u_best if err2.u_best is not None else u_best,
                    DynamicRelaxationConfig(
                        tol_residual=float(cfg.solver.get("dr_tol", 3e-2)),
                        max_steps=int(cfg.solver.get("max_dr_steps", 20_000))),
                    load_scale=s)
                u, rep = staggered_field_solve(prob, u_dr, nr_cfg, load_scale=s)
                tag = "converged_NR"
        ratio = rep.residual_norms[-1] / max(rep.residual_norms[0], 1e-300)
        records.append(StepRecord(float(s), u.copy(), tag, dr_rep, rep, ratio))
        if verbose:
            print(f"  pillow s={s:.2f}: {tag} ({rep.iterations} its)")
    # equilibrium quality against the external load scale
    R = prob.residual(u, 1.0)
    rel_equilibrium = float(np.linalg.norm(R[prob.free_dofs])
                            / np.linalg.norm(prob.external_force(u, 1.0)))
    idxM, valsM, _, _ = surf.eval_basis((1.0, 1.0), 0)
    idxA, valsA, _, _ = surf.eval_basis((0.0, 0.0), 0)
    U = u.reshape(-1, 3)
    uzM = float(valsM @ U[idxM, 2])
    uxA = float(valsA @ U[idxA, 0])
    runtime = time.time() - t0
    if verbose:
        print(f"  pillow {cfg.elements[0]}x{cfg.elements[1]} p={cfg.degree}: "
              f"u_z_M={uzM:.4f} u_x_A={uxA:.4f}  ({runtime:.1f}s)")

    rows = [(r.s, r.s * press, r.tag, r.residual_ratio) for r in records]
    out.write_curve_csv(os.path.join(cfg.out_dir, "pillow_steps.csv"),
                        ["step", "pressure_pa", "outcome", "residual_ratio"], rows)
    out.write_curve_csv(os.path.join(cfg.out_dir, "pillow_probes.csv"),
                        ["elements", "degree", "u_z_M", "u_x_A"],
                        [(cfg.elements[0], cfg.degree, uzM, uxA)])
    if cfg.output.get("history", 1.0):
        out.write_history_csv(os.path.join(cfg.out_dir, "pillow_history.csv"),
                              records)
    if cfg.output.get("fields", 1.0):
        export_fields(prob, u, os.path.join(cfg.out_dir, "pillow"),
                      per_element=int(cfg.output.get("lattice", 8)))
    return dict(u_z_M=uzM, u_x_A=uxA, records=records, events=events, u=u,
                problem=prob, runtime=runtime,
                rel_equilibrium=rel_equilibrium)


# ---------------------------------------------------------------------------
# annulus / cylinder benchmarks
# ---------------------------------------------------------------------------

def twist_problem(cfg: RunConfig) -> tuple[MembraneProblem, str, tuple]:
    """Annulus or cylinder displacement-controlled twist problem."""
    mat = material_from_config(cfg.material)
    if cfg.benchmark == "annulus":
        p = PRESETS["annulus"]
        surf = benchmark_geometry("annulus", degree=cfg.degree,
                                  elements=cfg.elements, R_i=p["R_i"], R_o=p["R_o"])
        cons = [RigidBoundaryMotion("umin", axis_point=(0, 0, 0),
                                    axis_dir=(0, 0, 1), angle=p["rotation"],
                                    translation=(0, 0, p["lift"])),
                FixComponent("umax", 0), FixComponent("umax", 1),
                FixComponent("umax", 2)]
        torque_axis = ((0.0, 0.0, 0.0), (0.0, 0.0, 1.0))
        moving = "umin"
    else:
        p = PRESETS["cylinder"]
        surf = benchmark_geometry("cylinder", degree=cfg.degree,
                                  elements=cfg.elements, R=p["R"], L=p["L"])
        cons = [RigidBoundaryMotion("umax", axis_point=(0, 0, 0),
                                    axis_dir=(1, 0, 0), angle=p["rotation"],
                                    translation=(p["pull"], 0, 0)),
                FixComponent("umin", 0), FixComponent("umin", 1),
                FixComponent("umin", 2)]
        torque_axis = ((0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
        moving = "umax"
    prob = MembraneProblem(surf, mat, cons, [],
                           wrinkle_eps=float(cfg.solver.get("wrinkle_eps", 1e-7)))
    return prob, moving, torque_axis


def run_twist(cfg: RunConfig, verbose=False) -> dict:
    t0 = time.time()
    prob, moving, (axis_point, axis_dir) = twist_problem(cfg)
    p = PRESETS[cfg.benchmark]
    n_steps = int(cfg.solver.get("steps", p["steps"]))
    schedule = np.linspace(1.0 / n_steps, 1.0, n_steps)
    dr_cfg = DynamicRelaxationConfig(
        tol_residual=float(cfg.solver.get("dr_tol", 1e-4)),
        max_steps=int(cfg.solver.get("max_dr_steps", 200_000)),
        alpha=cfg.solver.get("dr_alpha"))
    nr_cfg = NewtonConfig(tol_residual=float(cfg.solver.get("nr_tol", 1e-6)),
                          max_iterations=int(cfg.solver.get("nr_max_iterations", 50)))
    records, events = hybrid_step_driver(prob, schedule, dr_cfg, nr_cfg,
                                         verbose=verbose)
    rows = []
    for rec in records:
        torque = prob.boundary_reaction(rec.u, moving,
                                        ("torque", axis_point, axis_dir))
        rows.append((rec.s, rec.s * p["rotation"], torque, rec.tag,
                     rec.residual_ratio))
        if verbose:
            print(f"  {cfg.benchmark} s={rec.s:.3f}: torque {torque:.4g} N m "
                  f"[{rec.tag}]")
    runtime = time.time() - t0
    out.write_curve_csv(os.path.join(cfg.out_dir,
                                     f"{cfg.benchmark}_torque.csv"),
                        ["step", "rotation_rad", "torque_nm", "outcome",
                         "residual_ratio"], rows)
    if cfg.output.get("history", 1.0):
        out.write_history_csv(
            os.path.join(cfg.out_dir, f"{cfg.benchmark}_history.csv"), records)
    if cfg.output.get("fields", 1.0):
        export_fields(prob, records[-1].u,
                      os.path.join(cfg.out_dir, cfg.benchmark),
                      per_element=int(cfg.output.get("lattice", 8)))
    return dict(rows=rows, records=records, events=events, problem=prob,
                runtime=runtime)


# ---------------------------------------------------------------------------
# field export
# ---------------------------------------------------------------------------

def export_fields(problem: MembraneProblem, u, prefix, per_element: int = 8,
                  contours=()) -> None:
    """Write the VTK mesh, the tension snapshot, and contour CSVs."""
    surf = problem.surface

    def tension_eval(centers):
        U = np.asarray(u, dtype=float).reshape(-1, 3)
        n = len(centers)
        a0 = np.empty((n, 2, 3))
        a = np.empty((n, 2, 3))
        for k, xi in enumerate(centers):
            idx, vals, grads, _ = surf.eval_basis(xi, 1)
            cp0 = surf.control_points[idx]
            a0[k] = grads.T @ cp0
            a[k] = grads.T @ (cp0 + U[idx])
        from .kinematics import inv22
        a0met = a0 @ np.swapaxes(a0, 1, 2)
        amet = a @ np.swapaxes(a, 1, 2)
        _, _, field = evaluate_field(problem.material, a0met, inv22(a0met), amet,
                                     criterion=problem.criterion,
                                     want_tangent=False)
        return field.states, field.theta, field.gamma

    out.write_vtk(prefix + "_mesh.vtk", surf, u, tension_eval, per_element)
    field = problem.tension_snapshot(np.asarray(u, dtype=float))
    out.write_tension_snapshot_csv(prefix + "_tension.csv",
                                   problem.qpoint_params, field)
    if not contours:
        contours = [(0, 0.5), (1, 0.5)]
    for direction, value in contours:
        out.write_contour_csv(f"{prefix}_contour_dir{direction}_{value}.csv",
                              surf, u, direction=direction, value=value)


# ---------------------------------------------------------------------------
# top-level dispatch
# ---------------------------------------------------------------------------

def run_benchmark(cfg: RunConfig, verbose=False) -> dict:
    """Execute a configured benchmark; returns the result dictionary."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    if cfg.benchmark == "uat":
        return run_uat(cfg, verbose)
    if cfg.benchmark == "pillow":
        return run_pillow(cfg, verbose)
    if cfg.benchmark in ("annulus", "cylinder"):
        return run_twist(cfg, verbose)
    if cfg.benchmark == "custom":
        raise InvalidArgumentError(
            "custom benchmarks need a geometry_file and explicit sections; "
            "see the README for the schema")
    raise InvalidArgumentError(f"unknown benchmark {cfg.benchmark!r}")
