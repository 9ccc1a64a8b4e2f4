"""Newton-Raphson, kinetic-damping dynamic relaxation, and the hybrid driver.

Solvers operate on any object exposing the MembraneProblem interface
(residual, jacobian, lumped_mass, free_dofs, apply_constraints).  All norms
are taken over the free dofs.  The dynamic-relaxation equation of motion is
M a = -R, so the flow descends the out-of-balance force.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu


class SolverError(RuntimeError):
    def __init__(self, msg, u_best=None, report=None):
        super().__init__(msg)
        self.u_best = u_best
        self.report = report


class SingularTangentError(SolverError):
    pass


class DivergenceError(SolverError):
    pass


class NonConvergenceError(SolverError):
    pass


@dataclass
class NewtonConfig:
    tol_residual: float = 1e-6
    tol_update: float = 1e-6
    max_iterations: int = 50
    max_step: float | None = None   # infinity-norm cap on each update

    def __post_init__(self):
        if not (0 < self.tol_residual < 1 and 0 < self.tol_update < 1):
            raise ValueError("tolerances must lie in (0, 1)")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.max_step is not None and self.max_step <= 0:
            raise ValueError("max_step must be positive")


@dataclass
class DynamicRelaxationConfig:
    dt: float = 1.0
    alpha: float | None = None       # None: spectral estimate from the tangent
    tol_residual: float = 1e-4
    tol_kinetic: float = 0.0         # relative to the first kinetic energy
    max_steps: int = 200_000

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")


@dataclass
class SolveReport:
    """Iteration trace of one solver run."""

    outcome: str = "failed"
    residual_norms: list = field(default_factory=list)
    update_norms: list = field(default_factory=list)
    kinetic_energy: list = field(default_factory=list)
    events: list = field(default_factory=list)
    alpha: float | None = None
    iterations: int = 0

    def log(self, kind, payload=None):
        self.events.append((kind, payload))


# ---------------------------------------------------------------------------
# Newton-Raphson
# ---------------------------------------------------------------------------

def newton_solve(problem, u0, config: NewtonConfig, *, load_scale: float = 1.0,
                 frozen_states=None, jacobian_scale: float = 1.0):
    """Full Newton iteration K du = -R on the free dofs.

    ``jacobian_scale`` deliberately mis-scales the tangent (verification of
    the convergence order); leave at 1 for production use.
    """
    rep = SolveReport()
    free = problem.free_dofs
    u = np.array(u0, dtype=float, copy=True)
    R = problem.residual(u, load_scale, frozen_states)
    r0 = float(np.linalg.norm(R[free]))
    rep.residual_norms.append(r0)
    if r0 == 0.0:
        rep.outcome = "converged_NR"
        return u, rep
    du0 = None
    grow = 0
    for it in range(1, config.max_iterations + 1):
        K = problem.jacobian(u, load_scale, frozen_states) * jacobian_scale
        Kff = K[free][:, free].tocsc()
        try:
            lu = splu(Kff)
        except RuntimeError:
            # exactly singular (e.g. the flat transverse modes of a fully
            # wrinkled state): retry once with a tiny diagonal shift
            shift = 1e-10 * float(np.abs(Kff.diagonal()).max())
            if shift == 0.0:
                raise SingularTangentError("tangent is identically zero",
                                           u_best=u, report=rep) from None
            rep.log("regularized_factorization", shift)
            try:
                lu = splu(Kff + shift * sparse.identity(Kff.shape[0], format="csc"))
            except RuntimeError as err:
                raise SingularTangentError(f"tangent factorization failed: {err}",
                                           u_best=u, report=rep) from None
        du = lu.solve(-R[free])
        if not np.all(np.isfinite(du)):
            raise SingularTangentError("tangent solve produced non-finite update",
                                       u_best=u, report=rep)
        if config.max_step is not None:
            big = float(np.abs(du).max())
            if big > config.max_step:
                du *= config.max_step / big
                rep.log("step_capped", it)
        # backtrack on updates that leave the admissible state set
        scale = 1.0
        for attempt in range(12):
            try:
                u_try = u.copy()
                u_try[free] += scale * du
                R_new = problem.residual(u_try, load_scale, frozen_states)
                break
            except RuntimeError:
                scale *= 0.5
                rep.log("backtrack", it)
        else:
            raise DivergenceError("no admissible state along the Newton "
                                  "direction", u_best=u, report=rep)
        u = u_try
        R = R_new
        ndu = scale * float(np.linalg.norm(du))
        rep.update_norms.append(ndu)
        if du0 is None:
            du0 = ndu
        r = float(np.linalg.norm(R[free]))
        rep.residual_norms.append(r)
        rep.iterations = it
        uref = float(np.linalg.norm(u[free])) + 1.0
        if r / r0 < config.tol_residual or ndu <= 1e-14 * uref \
                or (du0 > 0 and ndu / du0 < config.tol_update):
            rep.outcome = "converged_NR"
            return u, rep
        grow = grow + 1 if r > rep.residual_norms[-2] else 0
        if grow >= 5:
            raise DivergenceError(
                f"residual grew for 5 consecutive iterations (|R| = {r:.3e})",
                u_best=u, report=rep)
    raise NonConvergenceError(
        f"Newton did not converge in {config.max_iterations} iterations",
        u_best=u, report=rep)


# ---------------------------------------------------------------------------
# dynamic relaxation with kinetic damping
# ---------------------------------------------------------------------------

def estimate_alpha(problem, u, *, load_scale: float = 1.0, dt: float = 1.0,
                   safety: float = 1.3) -> float:
    """Mass scaling from a row-sum bound on the generalized eigenvalues."""
    free = problem.free_dofs
    jac = getattr(problem, "material_jacobian", problem.jacobian)
    K = jac(u, load_scale)
    rowsum = np.asarray(np.abs(K).sum(axis=1)).ravel()[free]
    m1 = problem.lumped_mass(1.0)[free]
    lam = float(np.max(rowsum / m1))
    if not np.isfinite(lam) or lam <= 0:
        raise SolverError("cannot estimate mass scaling from the tangent")
    return safety * dt * dt * lam / 4.0


def tune_alpha(problem, u, *, load_scale: float = 1.0, dt: float = 1.0,
               probe_steps: int = 60) -> float:
    """Three-point bracket around the spectral estimate.

    Probes half, one and two times the estimated alpha with short DR runs and
    returns the smallest non-divergent candidate (smaller alpha converges
    faster; too small diverges).
    """
    base = estimate_alpha(problem, u, load_scale=load_scale, dt=dt)
    chosen = None
    for alpha in (0.5 * base, base, 2.0 * base):
        cfg = DynamicRelaxationConfig(dt=dt, alpha=alpha, tol_residual=1e-30,
                                      max_steps=probe_steps)
        try:
            dynamic_relaxation(problem, u, cfg, load_scale=load_scale,
                               _probe=True)
        except NonConvergenceError as err:
            rn = err.report.residual_norms
            if np.isfinite(rn[-1]) and rn[-1] < 10.0 * (rn[0] + 1e-300):
                chosen = alpha
                break
        except SolverError:
            continue
        else:  # probe actually converged
            chosen = alpha
            break
    return chosen if chosen is not None else 2.0 * base


def dynamic_relaxation(problem, u0, config: DynamicRelaxationConfig, *,
                       load_scale: float = 1.0, frozen_states=None,
                       _probe: bool = False):
    """Explicit central-difference pseudo-dynamics with kinetic damping.

    Velocities are zeroed whenever the kinetic energy peaks; the state is
    rewound to the estimated peak (half a step before the last velocity
    update) and restarted with a half-step kick from the fresh residual.
    """
    rep = SolveReport()
    free = problem.free_dofs
    dt = config.dt
    u = np.array(u0, dtype=float, copy=True)

    alpha = config.alpha
    if alpha is None:
        alpha = estimate_alpha(problem, u, load_scale=load_scale, dt=dt)
    rep.alpha = alpha

    retries = 0
    while True:
        M = problem.lumped_mass(alpha)[free]
        R = problem.residual(u, load_scale, frozen_states)
        r0 = float(np.linalg.norm(R[free]))
        rep.residual_norms = [r0]
        rep.kinetic_energy = []
        if r0 == 0.0:
            rep.outcome = "accepted_DR"
            return u, rep
        v = -(0.5 * dt) * R[free] / M
        ek0 = None
        best_u, best_r = u.copy(), r0
        diverged = False
        for step in range(1, config.max_steps + 1):
            u[free] += dt * v
            ek = 0.5 * float(v @ (M * v))
            rep.kinetic_energy.append(ek)
            if ek0 is None and ek > 0:
                ek0 = ek
            try:
                R = problem.residual(u, load_scale, frozen_states)
            except RuntimeError:
                diverged = True  # left the admissible state set
                rep.log("invalid_state", step)
                break
            r = float(np.linalg.norm(R[free]))
            rep.residual_norms.append(r)
            rep.iterations = step
            if r < best_r:
                best_r, best_u = r, u.copy()
            if r / r0 < config.tol_residual:
                rep.outcome = "accepted_DR"
                return u, rep
            if config.tol_kinetic > 0 and ek0 and ek / ek0 < config.tol_kinetic:
                rep.log("kinetic_tolerance", step)
                rep.outcome = "accepted_DR"
                return u, rep
            if not np.isfinite(r) or r > 1e8 * (r0 + 1e-300):
                diverged = True
                break
            ke = rep.kinetic_energy
            if len(ke) >= 3 and ke[-2] > ke[-1] and ke[-2] > ke[-3]:
                # rewind to the estimated peak at t - dt/2
                u[free] -= 1.5 * dt * v + 0.5 * dt * dt * R_prev_over_m
                rep.log("peak", step)
                try:
                    R = problem.residual(u, load_scale, frozen_states)
                except RuntimeError:
                    diverged = True
                    rep.log("invalid_state", step)
                    break
                r = float(np.linalg.norm(R[free]))
                rep.residual_norms.append(r)
                if r < best_r:
                    best_r, best_u = r, u.copy()
                if r / r0 < config.tol_residual:
                    rep.outcome = "accepted_DR"
                    return u, rep
                v = -(0.5 * dt) * R[free] / M
                rep.kinetic_energy.append(0.0)
            else:
                R_over_m = R[free] / M
                v = v - dt * R_over_m
            R_prev_over_m = R[free] / M
        if diverged and not _probe and retries < 3:
            retries += 1
            alpha *= 4.0
            rep.alpha = alpha
            rep.log("alpha_increase", alpha)
            u = np.array(u0, dtype=float, copy=True)
            continue
        if diverged:
            raise DivergenceError("dynamic relaxation diverged", u_best=best_u,
                                  report=rep)
        raise NonConvergenceError(
            f"dynamic relaxation hit max_steps = {config.max_steps} "
            f"(best |R|/|R0| = {best_r / r0:.3e})", u_best=best_u, report=rep)


def staggered_field_solve(problem, u0, config: NewtonConfig, *,
                          load_scale: float = 1.0, max_cycles: int = 40,
                          ref_force: float | None = None):
    """Fixed-point iteration on the tension field with Newton inner solves.

    Each cycle freezes the per-point classification, solves the (smooth)
    frozen problem by Newton, then re-classifies.  Convergence is measured
    on the live residual against ``ref_force`` (defaults to the external
    load norm), which sidesteps the non-smoothness that stalls plain Newton
    when classification flips chase each other around the wrinkled bands.
    """
    rep_all = SolveReport()
    free = problem.free_dofs
    u = np.array(u0, dtype=float, copy=True)
    if ref_force is None:
        ref_force = float(np.linalg.norm(problem.external_force(u, load_scale)))
    if ref_force == 0:
        ref_force = float(np.linalg.norm(problem.residual(u, load_scale)[free]))
    states = problem.tension_snapshot(u).states
    for cycle in range(max_cycles):
        try:
            u_new, rep = newton_solve(problem, u, config, load_scale=load_scale,
                                      frozen_states=states)
            u = u_new
        except SolverError as err:
            if err.u_best is None:
                raise
            u = err.u_best
            rep = err.report
        rep_all.residual_norms.extend(rep.residual_norms)
        rep_all.update_norms.extend(rep.update_norms)
        rep_all.iterations += rep.iterations
        r_live = float(np.linalg.norm(problem.residual(u, load_scale)[free]))
        rep_all.log("cycle", (cycle, r_live / ref_force))
        if r_live / ref_force < config.tol_residual:
            rep_all.outcome = "converged_NR"
            return u, rep_all
        new_states = problem.tension_snapshot(u).states
        if np.array_equal(new_states, states):
            break  # field settled but the live residual is stuck
        states = new_states
    raise NonConvergenceError(
        f"staggered field iteration not converged in {max_cycles} cycles",
        u_best=u, report=rep_all)


# ---------------------------------------------------------------------------
# hybrid displacement-stepping driver
# ---------------------------------------------------------------------------

@dataclass
class StepRecord:
    s: float
    u: np.ndarray
    tag: str                      # 'converged_NR' or 'accepted_DR'
    dr_report: SolveReport | None
    nr_report: SolveReport | None
    residual_ratio: float


def hybrid_step_driver(problem, schedule, dr_config: DynamicRelaxationConfig,
                       nr_config: NewtonConfig, *, u0=None, verbose: bool = False,
                       max_failures: int = 4):
    """Displacement/load stepping with DR predictor, NR corrector, bisection.

    Every attempted step runs dynamic relaxation to the DR tolerance and then
    Newton to the NR tolerance.  A Newton failure (divergence, singular
    tangent, or exceeding the iteration budget) bisects the step and restarts;
    after ``max_failures`` consecutive failures within one scheduled step the
    DR stage solution of the full step is accepted and the Newton result
    discarded.  Returns (accepted StepRecords, event log).
    """
    records: list[StepRecord] = []
    events: list = []
    u_cur = np.zeros(problem.ndof) if u0 is None else np.array(u0, dtype=float)
    s_cur = 0.0

    def attempt_dr(s):
        u_try = problem.apply_constraints(u_cur, s)
        return dynamic_relaxation(problem, u_try, dr_config, load_scale=s)

    for s_t in (float(s) for s in schedule):
        failures = 0
        dr_full = None      # DR stage result of the full step, kept for acceptance
        stack = [s_t]
        while stack:
            s_att = stack[-1]
            dr_rep = nr_rep = None
            dr_ok = False
            try:
                u_dr, dr_rep = attempt_dr(s_att)
                dr_ok = True
                if s_att == s_t and dr_full is None:
                    dr_full = (u_dr.copy(), dr_rep)
            except SolverError as err:
                events.append(("dr_failure", s_att, str(err)))
                dr_rep = err.report
            if dr_ok:
                try:
                    u_nr, nr_rep = newton_solve(problem, u_dr, nr_config,
                                                load_scale=s_att)
                    ratio = nr_rep.residual_norms[-1] / max(
                        nr_rep.residual_norms[0], 1e-300)
                    records.append(StepRecord(s_att, u_nr.copy(), "converged_NR",
                                              dr_rep, nr_rep, ratio))
                    u_cur, s_cur = u_nr, s_att
                    stack.pop()
                    failures = 0
                    if verbose:
                        print(f"  step s={s_att:.4f} converged_NR "
                              f"({nr_rep.iterations} its)")
                    continue
                except SolverError as err:
                    events.append(("nr_failure", s_att, str(err)))
                    nr_rep = err.report
            failures += 1
            if failures >= max_failures:
                if dr_full is None:
                    raise NonConvergenceError(
                        f"step to s={s_t} failed in the DR stage after "
                        f"bisection exhaustion", u_best=u_cur, report=dr_rep)
                u_acc, rep_acc = dr_full
                ratio = rep_acc.residual_norms[-1] / max(
                    rep_acc.residual_norms[0], 1e-300)
                records.append(StepRecord(s_t, u_acc.copy(), "accepted_DR",
                                          rep_acc, nr_rep, ratio))
                events.append(("accepted_DR", s_t, failures))
                u_cur, s_cur = u_acc, s_t
                if verbose:
                    print(f"  step s={s_t:.4f} accepted_DR after "
                          f"{failures} failures")
                break
            s_mid = 0.5 * (s_cur + s_att)
            events.append(("bisect", s_att, s_mid))
            if verbose:
                print(f"  step s={s_att:.4f} failed -> bisect to {s_mid:.4f}")
            stack.append(s_mid)
    return records, events
