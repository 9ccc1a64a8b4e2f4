"""Tension-field classification and the wrinkling stress/tangent modification.

A material point is taut, slack, or wrinkled based on principal stresses and
strains (mixed criterion by default).  Wrinkled points get a uniaxial-tension
correction: a fictitious strain gamma * n (x) n is added along the direction
transverse to the wrinkles, where the angle is the root of a scalar residual
and gamma follows in closed form.  The consistent tangent of the modified
stress is assembled in Voigt linear algebra, with an extra material-derivative
term on the hyperelastic path.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from scipy.optimize import brentq

from .kinematics import PointFrame, green_lagrange, strain_voigt
from .materials import (
    MaterialModel,
    stress_and_tangent_batch,
    tangent_strain_derivative_batch,
)

N_SUBINTERVALS = 16
TAUT_TOL = 1e-12          # principal-stress threshold, scaled by mu
_BISECT_ITERS = 60


class RootNotFoundError(RuntimeError):
    def __init__(self, msg, samples=None):
        super().__init__(msg)
        self.samples = samples


class IndefiniteTangentError(RuntimeError):
    pass


class SingularSensitivityError(RuntimeError):
    pass


class TensionState(IntEnum):
    SLACK = 0
    WRINKLED = 1
    TAUT = 2


@dataclass(frozen=True)
class WrinkleSolution:
    """Wrinkle angle, amplitude, direction vectors and modified tensors."""

    theta: float
    gamma: float
    n1: np.ndarray
    n2: np.ndarray
    n3: np.ndarray
    n4: np.ndarray
    stress: np.ndarray    # S'
    tangent: np.ndarray   # C'


@dataclass(frozen=True)
class PointResult:
    """Per-point effective response after tension-field dispatch."""

    strain: np.ndarray
    state: TensionState
    force: np.ndarray      # t * effective stress
    tangent: np.ndarray    # t * effective tangent
    theta: float | None = None
    gamma: float | None = None


# ---------------------------------------------------------------------------
# direction vectors
# ---------------------------------------------------------------------------

def direction_vectors(theta):
    """Voigt vectors n1..n4 built from n=(cos,sin) and m = dn/dtheta."""
    theta = np.asarray(theta, dtype=float)
    c = np.cos(theta)
    s = np.sin(theta)
    n1 = np.stack([c * c, s * s, 2.0 * c * s], axis=-1)
    n2 = np.stack([-c * s, s * c, c * c - s * s], axis=-1)
    n4 = np.stack([s * s, c * c, -2.0 * c * s], axis=-1)
    n3 = n4 - n1
    return n1, n2, n3, n4


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def _eig2(m: np.ndarray):
    """Eigenvalues (lo, hi) of real 2x2 matrices with real spectrum."""
    tr = m[..., 0, 0] + m[..., 1, 1]
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
    return 0.5 * (tr - disc), 0.5 * (tr + disc)


def principal_values(S, Ev, a_met, a0_con):
    """Metric-consistent principal stresses and strains.

    Stress eigenvalues come from the mixed tensor S^a_b = S^ac a_cb (deformed
    metric), strain eigenvalues from E^a_b = a0^ac E_cb; both are invariant
    under reparameterisation of the surface.
    """
    S = np.asarray(S)
    Smat = np.empty(S.shape[:-1] + (2, 2))
    Smat[..., 0, 0] = S[..., 0]
    Smat[..., 1, 1] = S[..., 1]
    Smat[..., 0, 1] = Smat[..., 1, 0] = S[..., 2]
    Emat = np.empty(S.shape[:-1] + (2, 2))
    Emat[..., 0, 0] = Ev[..., 0]
    Emat[..., 1, 1] = Ev[..., 1]
    Emat[..., 0, 1] = Emat[..., 1, 0] = 0.5 * Ev[..., 2]
    sp = _eig2(Smat @ a_met)
    ep = _eig2(np.asarray(a0_con) @ Emat)
    return sp, ep


def classify_batch(S, Ev, a_met, a0_con, mu, criterion: str = "mixed"):
    """Tension state codes (0 slack, 1 wrinkled, 2 taut) for a point batch."""
    (sp1, sp2), (ep1, ep2) = principal_values(S, Ev, a_met, a0_con)
    tol = TAUT_TOL * mu
    if criterion == "mixed":
        taut = sp1 > tol
        slack = ep2 <= 0.0
    elif criterion == "strain":
        taut = ep1 > 0.0
        slack = ep2 <= 0.0
    elif criterion == "stress":
        taut = sp1 > tol
        slack = sp2 <= tol
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    out = np.full(np.shape(taut), int(TensionState.WRINKLED), dtype=np.int8)
    out[slack & ~taut] = int(TensionState.SLACK)
    out[taut] = int(TensionState.TAUT)
    return out


def classify(S, Ev, frame: PointFrame, mu, criterion: str = "mixed") -> TensionState:
    code = classify_batch(np.asarray(S)[None], np.asarray(Ev)[None],
                          frame.a_met[None], frame.a0_con[None], mu, criterion)[0]
    return TensionState(int(code))


# ---------------------------------------------------------------------------
# scalar angle problem
# ---------------------------------------------------------------------------

def gamma(theta: float, S, C) -> float:
    """Wrinkling amplitude gamma = -(S.n1)/(n1' C n1) at a trial angle."""
    n1, _, _, _ = direction_vectors(theta)
    q11 = float(n1 @ np.asarray(C) @ n1)
    if q11 <= 0.0:
        raise IndefiniteTangentError(f"n1'Cn1 = {q11:.3e} <= 0 at theta = {theta}")
    return -float(np.asarray(S) @ n1) / q11


def angle_residual(theta: float, S, C) -> float:
    """Second uniaxial condition S'.n2 as a function of the trial angle."""
    n1, n2, _, _ = direction_vectors(theta)
    Cn1 = np.asarray(C) @ n1
    q11 = float(n1 @ Cn1)
    if q11 <= 0.0:
        raise IndefiniteTangentError(f"n1'Cn1 = {q11:.3e} <= 0 at theta = {theta}")
    g = -float(np.asarray(S) @ n1) / q11
    return float(np.asarray(S) @ n2) + g * float(n2 @ Cn1)


def find_wrinkle_angle(S, C, Ev):
    """Feasible wrinkle angle and amplitude by bracketed root finding.

    Scans ``N_SUBINTERVALS`` brackets of [0, pi) (the residual is
    pi-periodic), runs Brent on each sign change, filters roots by the
    positive-stretch condition E'.n4 > 0, and returns the smallest feasible
    root for determinism.
    """
    S = np.asarray(S, dtype=float)
    C = np.asarray(C, dtype=float)
    Ev = np.asarray(Ev, dtype=float)
    grid = np.linspace(0.0, np.pi, N_SUBINTERVALS + 1)
    fvals = np.array([angle_residual(t, S, C) for t in grid])
    roots = [float(t) for t, f in zip(grid[:-1], fvals[:-1]) if f == 0.0]
    for a, b, fa, fb in zip(grid[:-1], grid[1:], fvals[:-1], fvals[1:]):
        if fa * fb < 0.0:
            roots.append(brentq(angle_residual, a, b, args=(S, C),
                                xtol=1e-14, rtol=8.9e-16))
    feasible = []
    for t in sorted(set(np.mod(roots, np.pi))):
        g = gamma(t, S, C)
        n1, _, _, n4 = direction_vectors(t)
        if (Ev + g * n1) @ n4 > 0.0:
            feasible.append((t, g))
    if not feasible:
        raise RootNotFoundError(
            "no feasible wrinkle angle on [0, pi)",
            samples=np.column_stack([grid, fvals]))
    return feasible[0]


def modified_stress(S, C, theta: float, gamma_val: float) -> np.ndarray:
    """Uniaxial-tension corrected stress S' = S + gamma * C n1."""
    n1, _, _, _ = direction_vectors(theta)
    return np.asarray(S) + gamma_val * (np.asarray(C) @ n1)


def modified_tangent_elastic(S, C, theta: float, gamma_val: float) -> np.ndarray:
    """Consistent tangent of the modified stress for a constant material tangent."""
    return _modified_tangent(np.asarray(S)[None], np.asarray(C)[None],
                             np.asarray([theta]), np.asarray([gamma_val]), None)[0]


def modified_tangent_hyperelastic(S, C, dC_dE, theta: float, gamma_val: float) -> np.ndarray:
    """Consistent tangent including the material-tensor strain derivative."""
    return _modified_tangent(np.asarray(S)[None], np.asarray(C)[None],
                             np.asarray([theta]), np.asarray([gamma_val]),
                             np.asarray(dC_dE)[None])[0]


def wrinkle_solution(S, C, Ev, dC_dE=None) -> WrinkleSolution:
    """Solve the angle problem and package the full modified state."""
    theta, g = find_wrinkle_angle(S, C, Ev)
    n1, n2, n3, n4 = direction_vectors(theta)
    Sp = modified_stress(S, C, theta, g)
    if dC_dE is None:
        Cp = modified_tangent_elastic(S, C, theta, g)
    else:
        Cp = modified_tangent_hyperelastic(S, C, dC_dE, theta, g)
    return WrinkleSolution(theta, g, n1, n2, n3, n4, Sp, Cp)


# ---------------------------------------------------------------------------
# batched kernels (assembly hot path)
# ---------------------------------------------------------------------------

def _f_gamma_batch(theta, S, C):
    """Residual and amplitude at trial angles; NaN where n1'Cn1 <= 0."""
    n1, n2, _, _ = direction_vectors(theta)
    Cn1 = np.einsum("...ij,...j->...i", C, n1)
    q11 = np.einsum("...i,...i->...", n1, Cn1)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = np.where(q11 > 0.0, -np.einsum("...i,...i->...", S, n1) / q11, np.nan)
        f = np.einsum("...i,...i->...", S, n2) + g * np.einsum("...i,...i->...", n2, Cn1)
    return f, g


def find_wrinkle_angle_batch(S, C, Ev, raise_on_failure: bool = True):
    """Vectorized bracketed bisection for the wrinkle angle of many points.

    Mirrors ``find_wrinkle_angle`` (same brackets, same smallest-feasible
    selection); bisection is refined to ~1e-16 rad so the two agree far below
    the acceptance tolerance.  With ``raise_on_failure=False`` points without
    a feasible root keep NaN entries instead of raising.
    """
    m = S.shape[0]
    grid = np.linspace(0.0, np.pi, N_SUBINTERVALS + 1)
    F = np.empty((m, grid.size))
    for j, t in enumerate(grid):
        F[:, j], _ = _f_gamma_batch(np.full(m, t), S, C)

    cand_pt = []
    cand_lo = []
    cand_hi = []
    node_pt = []
    node_th = []
    for j in range(N_SUBINTERVALS):
        fa, fb = F[:, j], F[:, j + 1]
        exact = fa == 0.0
        if exact.any():
            node_pt.append(np.nonzero(exact)[0])
            node_th.append(np.full(int(exact.sum()), grid[j]))
        change = fa * fb < 0.0
        idx = np.nonzero(change)[0]
        if idx.size:
            cand_pt.append(idx)
            cand_lo.append(np.full(idx.size, grid[j]))
            cand_hi.append(np.full(idx.size, grid[j + 1]))

    roots_pt = []
    roots_th = []
    if node_pt:
        roots_pt.append(np.concatenate(node_pt))
        roots_th.append(np.concatenate(node_th))
    if cand_pt:
        pt = np.concatenate(cand_pt)
        lo = np.concatenate(cand_lo)
        hi = np.concatenate(cand_hi)
        flo, _ = _f_gamma_batch(lo, S[pt], C[pt])
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            fm, _ = _f_gamma_batch(mid, S[pt], C[pt])
            left = flo * fm <= 0.0
            hi = np.where(left, mid, hi)
            lo = np.where(left, lo, mid)
            flo = np.where(left, flo, fm)
        roots_pt.append(pt)
        roots_th.append(0.5 * (lo + hi))

    theta = np.full(m, np.nan)
    gam = np.full(m, np.nan)
    if roots_pt:
        pt = np.concatenate(roots_pt)
        th = np.mod(np.concatenate(roots_th), np.pi)
        _, g = _f_gamma_batch(th, S[pt], C[pt])
        n1, _, _, n4 = direction_vectors(th)
        Ep = Ev[pt] + g[:, None] * n1
        ok = np.einsum("ij,ij->i", Ep, n4) > 0.0
        ok &= np.isfinite(g)
        # smallest feasible root per point: iterate candidates from largest to
        # smallest angle so the final write wins with the smallest value
        order = np.argsort(-th, kind="stable")
        sel_pt = pt[order][ok[order]]
        theta[sel_pt] = th[order][ok[order]]
        gam[sel_pt] = g[order][ok[order]]
    bad = ~np.isfinite(theta)
    if bad.any() and raise_on_failure:
        k = int(np.nonzero(bad)[0][0])
        raise RootNotFoundError(
            f"no feasible wrinkle angle for {int(bad.sum())} of {m} points",
            samples=np.column_stack([grid, F[k]]))
    return theta, gam


def _modified_tangent(S, C, theta, gam, dCdE):
    """Batched consistent tangent of the wrinkling stress modification."""
    n1, n2, _, n4 = direction_vectors(theta)
    Cn1 = np.einsum("...ij,...j->...i", C, n1)
    Cn2 = np.einsum("...ij,...j->...i", C, n2)
    CTn1 = np.einsum("...ji,...j->...i", C, n1)
    CTn2 = np.einsum("...ji,...j->...i", C, n2)
    q11 = np.einsum("...i,...i->...", n1, Cn1)
    q21 = np.einsum("...i,...i->...", n2, Cn1)
    if np.any(q11 <= 0.0):
        raise IndefiniteTangentError("n1'Cn1 <= 0 at a wrinkle root")
    dgdT = -2.0 * gam * q21 / q11
    if dCdE is None:
        dgdE = -CTn1 / q11[..., None]
        dfdE = CTn2 + q21[..., None] * dgdE
    else:
        w = np.einsum("...kij,...i,...j->...k", dCdE, n1, n1)
        z = np.einsum("...kij,...i,...j->...k", dCdE, n2, n1)
        dgdE = -(CTn1 + gam[..., None] * w) / q11[..., None]
        dfdE = CTn2 + q21[..., None] * dgdE + gam[..., None] * z
    dfdT = (np.einsum("...i,...i->...", S, n4) + dgdT * q21
            + gam * (np.einsum("...i,...i->...", n4, Cn1)
                     + 2.0 * np.einsum("...i,...i->...", n2, Cn2)))
    scale = np.einsum("...ii->...", np.abs(C)) + np.abs(dfdT)
    if np.any(np.abs(dfdT) <= 1e-300 * scale):
        raise SingularSensitivityError("df/dtheta vanishes at a wrinkle root")
    dTdE = -dfdE / dfdT[..., None]
    v = dgdE + dgdT[..., None] * dTdE
    Cp = (C + Cn1[..., :, None] * v[..., None, :]
          + 2.0 * gam[..., None, None] * Cn2[..., :, None] * dTdE[..., None, :])
    if dCdE is not None:
        M = np.einsum("...kij,...j->...ik", dCdE, n1)
        Cp = Cp + gam[..., None, None] * M
    return Cp


# ---------------------------------------------------------------------------
# field evaluation over a point batch
# ---------------------------------------------------------------------------

@dataclass
class TensionField:
    """Per-point tension state with wrinkle data (NaN where not wrinkled)."""

    states: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray
    n_root_fallback: int = 0

    @property
    def n_negative_gamma(self) -> int:
        g = self.gamma[np.isfinite(self.gamma)]
        return int((g < 0).sum())


def evaluate_field(model: MaterialModel, a0_met, a0_con, a_met, *,
                   criterion: str = "mixed", slack_eps: float = 0.0,
                   wrinkle_eps: float = 0.0, want_tangent: bool = True,
                   frozen_states: np.ndarray | None = None,
                   dcde_mode: str = "auto", root_fallback: bool = False):
    """Effective (S, C) after tension-field dispatch for a batch of points.

    Returns ``(S_eff, C_eff, field)``; stresses are not yet scaled by the
    thickness.  ``frozen_states`` pins the classification (verification use);
    the wrinkle angle is still re-solved so the smooth part of the map stays
    exact.  ``slack_eps``/``wrinkle_eps`` add a small multiple of the
    unmodified tangent at slack/wrinkled points: a solver stabilization
    device only (a fully wrinkled membrane has zero-stiffness transverse
    modes), never part of the stress.
    """
    S, C = stress_and_tangent_batch(model, a0_met, a0_con, a_met, want_tangent=True)
    Ev = strain_voigt(np.broadcast_to(a0_met, a_met.shape), a_met)
    if frozen_states is None:
        states = classify_batch(S, Ev, a_met, np.broadcast_to(a0_con, a_met.shape),
                                model.mu, criterion)
    else:
        states = np.asarray(frozen_states, dtype=np.int8)
    S_eff = S.copy()
    C_eff = C.copy() if want_tangent else None
    theta = np.full(S.shape[:-1], np.nan)
    gam = np.full(S.shape[:-1], np.nan)

    slack = states == int(TensionState.SLACK)
    if slack.any():
        S_eff[slack] = 0.0
        if want_tangent:
            C_eff[slack] = slack_eps * C[slack]

    wr = states == int(TensionState.WRINKLED)
    n_fallback = 0
    if wr.any():
        Sw, Cw, Evw = S[wr], C[wr], Ev[wr]
        th, g = find_wrinkle_angle_batch(Sw, Cw, Evw,
                                         raise_on_failure=not root_fallback)
        bad = ~np.isfinite(th)
        if bad.any():
            # degenerate boundary states (all roots infeasible, gamma -> 0):
            # dispatch them as taut, or slack when nothing is stretched
            n_fallback = int(bad.sum())
            wr_idx = np.nonzero(wr)[0]
            _, (ep1, ep2) = principal_values(
                Sw[bad], Evw[bad],
                np.broadcast_to(a_met, Ev.shape[:-1] + (2, 2))[wr][bad],
                np.broadcast_to(a0_con, Ev.shape[:-1] + (2, 2))[wr][bad])
            to_slack = wr_idx[bad][ep2 <= 0]
            to_taut = wr_idx[bad][ep2 > 0]
            states = states.copy()
            states[to_slack] = int(TensionState.SLACK)
            states[to_taut] = int(TensionState.TAUT)
            S_eff[to_slack] = 0.0
            if want_tangent:
                C_eff[to_slack] = slack_eps * C[to_slack]
            wr = states == int(TensionState.WRINKLED)
            Sw, Cw, Evw = S[wr], C[wr], Ev[wr]
            th, g = th[~bad], g[~bad]
        n1 = direction_vectors(th)[0]
        S_eff[wr] = Sw + g[:, None] * np.einsum("pij,pj->pi", Cw, n1)
        theta[wr] = th
        gam[wr] = g
        if want_tangent:
            dCdE = None
            if not model.is_svk:
                mode = dcde_mode
                if mode == "auto":
                    mode = ("analytic" if model.kind == "nh_incompressible"
                            else "finite_difference")
                a_met_w = np.broadcast_to(a_met, S.shape[:-1] + (2, 2))[wr]
                a0_met_w = np.broadcast_to(a0_met, S.shape[:-1] + (2, 2))[wr]
                a0_con_w = np.broadcast_to(a0_con, S.shape[:-1] + (2, 2))[wr]
                dCdE = tangent_strain_derivative_batch(model, a0_met_w, a0_con_w,
                                                       a_met_w, mode)
            C_eff[wr] = _modified_tangent(Sw, Cw, th, g, dCdE)
            if wrinkle_eps:
                C_eff[wr] += wrinkle_eps * Cw
    return S_eff, C_eff, TensionField(states, theta, gam, n_fallback)


def evaluate_point(model: MaterialModel, frame: PointFrame, *,
                   criterion: str = "mixed", slack_eps: float = 0.0) -> PointResult:
    """Tension-field dispatched response of one point, scaled by thickness."""
    Ev = green_lagrange(frame)
    S_eff, C_eff, field = evaluate_field(
        model, frame.a0_met[None], frame.a0_con[None], frame.a_met[None],
        criterion=criterion, slack_eps=slack_eps)
    state = TensionState(int(field.states[0]))
    th = float(field.theta[0]) if np.isfinite(field.theta[0]) else None
    g = float(field.gamma[0]) if np.isfinite(field.gamma[0]) else None
    t = model.thickness
    return PointResult(Ev, state, t * S_eff[0], t * C_eff[0], th, g)
