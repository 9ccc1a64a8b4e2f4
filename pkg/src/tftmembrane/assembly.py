"""Global residual, tangent, lumped mass, loads and constraint handling.

The assembly precomputes basis values and undeformed frames at all quadrature
points once per problem; residual and Jacobian evaluations are vectorized
over the full point batch.  Dof numbering is dof = 3*k + c for control point
k and Cartesian component c.  The residual convention is R = internal -
external, so equilibrium is R = 0 on the free dofs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse

from .kinematics import det22, inv22
from .materials import MaterialModel
from .splines import InvalidArgumentError, QuadratureRule, SplineSurface
from .wrinkling import RootNotFoundError, TensionField, evaluate_field

_EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS3[_i, _j, _k] = 1.0
    _EPS3[_i, _k, _j] = -1.0


def _rotation_matrix(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    K = np.array([[0.0, -axis[2], axis[1]],
                  [axis[2], 0.0, -axis[0]],
                  [-axis[1], axis[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * K @ K


# ---------------------------------------------------------------------------
# constraints and loads
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixComponent:
    """Prescribe one displacement component on a boundary control-point ring."""

    boundary: str
    component: int
    value: float = 0.0
    ramp: bool = False      # value scales with the step parameter

    def prescribe(self, surface: SplineSurface, s: float):
        ring = surface.boundary_cp_indices(self.boundary)
        dofs = 3 * ring + self.component
        val = self.value * (s if self.ramp else 1.0)
        return dofs, np.full(dofs.size, val)


@dataclass(frozen=True)
class FixField:
    """Prescribe one displacement component on every control point."""

    component: int
    value: float = 0.0
    ramp: bool = False

    def prescribe(self, surface: SplineSurface, s: float):
        dofs = 3 * np.arange(surface.n_cp) + self.component
        val = self.value * (s if self.ramp else 1.0)
        return dofs, np.full(dofs.size, val)


@dataclass(frozen=True)
class RigidBoundaryMotion:
    """Exact rigid motion of a boundary ring, ramped by the step parameter.

    At step s the ring control points move to
    R(s*angle) (X - p) + p + s*translation, which reproduces the exact rigid
    motion of the spline boundary curve.
    """

    boundary: str
    axis_point: tuple = (0.0, 0.0, 0.0)
    axis_dir: tuple = (0.0, 0.0, 1.0)
    angle: float = 0.0
    translation: tuple = (0.0, 0.0, 0.0)

    def prescribe(self, surface: SplineSurface, s: float):
        ring = surface.boundary_cp_indices(self.boundary)
        X = surface.control_points[ring]
        p = np.asarray(self.axis_point, dtype=float)
        R = _rotation_matrix(self.axis_dir, s * self.angle)
        xnew = (X - p) @ R.T + p + s * np.asarray(self.translation)
        u = xnew - X
        dofs = (3 * ring[:, None] + np.arange(3)).ravel()
        return dofs, u.ravel()


@dataclass(frozen=True)
class LineLoad:
    """Dead line load (N/m) on an undeformed boundary curve."""

    boundary: str
    vector: tuple
    ramp: bool = True


@dataclass(frozen=True)
class FollowerPressure:
    """Pressure p (Pa) along the deformed unit normal.

    measure='undeformed' integrates p*a3_hat against the undeformed surface
    measure (the variational form used throughout); 'deformed' uses the
    deformed measure, i.e. the load vector p*(a1 x a2).
    """

    magnitude: float
    measure: str = "undeformed"
    ramp: bool = True


# ---------------------------------------------------------------------------
# problem container
# ---------------------------------------------------------------------------

class MembraneProblem:
    """Membrane boundary-value problem on a spline surface."""

    def __init__(self, surface: SplineSurface, material: MaterialModel,
                 constraints=(), loads=(), *, criterion: str = "mixed",
                 slack_eps: float = 0.0, wrinkle_eps: float = 0.0,
                 n_gauss: int | None = None, dcde_mode: str = "auto",
                 tft: bool = True, root_fallback: bool = True):
        self.surface = surface
        self.material = material
        self.constraints = tuple(constraints)
        self.loads = tuple(loads)
        self.criterion = criterion
        self.slack_eps = slack_eps
        self.wrinkle_eps = wrinkle_eps
        self.root_fallback = root_fallback
        self.dcde_mode = dcde_mode
        self.tft = tft
        self.ndof = 3 * surface.n_cp
        p1, p2 = surface.degrees
        self._nq1 = n_gauss or (p1 + 1)
        self._nq2 = n_gauss or (p2 + 1)
        self._precompute_bulk()
        self._precompute_boundary_loads()
        self._build_dof_partition()

    # -- precomputation ----------------------------------------------------

    def _precompute_bulk(self):
        surf = self.surface
        rule = QuadratureRule.gauss(self._nq1, self._nq2)
        elems = surf.elements()
        nel = len(elems)
        nloc = (surf.kv1.degree + 1) * (surf.kv2.degree + 1)
        nq = self._nq1 * self._nq2
        self.n_elements = nel
        self.n_qpoints = nel * nq
        N = np.empty((nel, nq, nloc))
        dN = np.empty((nel, nq, nloc, 2))
        gidx = np.empty((nel, nloc), dtype=np.int64)
        qxi = np.empty((nel, nq, 2))
        wq = np.empty((nel, nq))
        for e, (lu, hu, lv, hv) in enumerate(elems):
            pts, wts = rule.on_element(lu, hu, lv, hv)
            qxi[e] = pts
            wq[e] = wts
            for q, xi in enumerate(pts):
                idx, vals, grads, _ = surf.eval_basis(xi, 1)
                if q == 0:
                    gidx[e] = idx
                N[e, q] = vals
                dN[e, q] = grads
        self._N, self._dN, self._gidx = N, dN, gidx
        self._qxi, self._wq = qxi, wq
        cp = surf.control_points
        a0 = np.einsum("enla,elc->enac", dN, cp[gidx])
        a0met = np.einsum("enac,enbc->enab", a0, a0)
        det0 = det22(a0met)
        if np.any(det0 <= 0):
            raise InvalidArgumentError("surface has degenerate elements")
        self._a0met = a0met
        self._a0con = inv22(a0met)
        self._sqrt0 = np.sqrt(det0)
        self._wdet = wq * self._sqrt0
        self._edofs = (3 * gidx[:, :, None] + np.arange(3)).reshape(nel, 3 * nloc)
        rows = np.repeat(self._edofs, 3 * nloc, axis=1).ravel()
        cols = np.tile(self._edofs, (1, 3 * nloc)).ravel()
        self._krows, self._kcols = rows, cols
        # per-control-point integral of the basis (unit-density lumped mass)
        mass = np.zeros(surf.n_cp)
        np.add.at(mass, gidx, np.einsum("en,enl->el", self._wdet, N))
        self._mass0 = mass

    def _precompute_boundary_loads(self):
        surf = self.surface
        self._f_line = np.zeros(self.ndof)
        self._f_line_fixed = np.zeros(self.ndof)
        for load in self.loads:
            if not isinstance(load, LineLoad):
                continue
            target = self._f_line if load.ramp else self._f_line_fixed
            vec = np.asarray(load.vector, dtype=float)
            which = load.boundary
            if which in ("umin", "umax"):
                kv = surf.kv2
                fix_u = 0.0 if which == "umin" else 1.0
                def param(t): return (fix_u, t)
            else:
                kv = surf.kv1
                fix_v = 0.0 if which == "vmin" else 1.0
                def param(t): return (t, fix_v)
            x1, w1 = leggauss(max(surf.degrees) + 1)
            x1 = (x1 + 1) / 2
            w1 = w1 / 2
            for lo, hi in kv.elements():
                for xg, wg in zip(lo + x1 * (hi - lo), w1 * (hi - lo)):
                    xi = param(xg)
                    idx, vals, grads, _ = surf.eval_basis(xi, 1)
                    dx = grads.T @ surf.control_points[idx]
                    tangent = dx[1] if which in ("umin", "umax") else dx[0]
                    ds = np.linalg.norm(tangent)
                    contrib = wg * ds * np.outer(vals, vec)
                    np.add.at(target.reshape(-1, 3), idx, contrib)

    def _build_dof_partition(self):
        dofs, values = [], []
        for c in self.constraints:
            d, v = c.prescribe(self.surface, 1.0)
            dofs.append(d)
            values.append(v)
        if dofs:
            alld = np.concatenate(dofs)
            allv = np.concatenate(values)
            order = np.argsort(alld, kind="stable")
            alld, allv = alld[order], allv[order]
            uniq, start = np.unique(alld, return_index=True)
            for i, d in enumerate(uniq):
                end = start[i + 1] if i + 1 < len(uniq) else len(alld)
                if np.ptp(allv[start[i]:end]) > 1e-12 * (1 + np.abs(allv[start[i]])):
                    raise InvalidArgumentError(f"conflicting prescriptions for dof {d}")
            self.fixed_dofs = uniq
        else:
            self.fixed_dofs = np.array([], dtype=np.int64)
        mask = np.ones(self.ndof, dtype=bool)
        mask[self.fixed_dofs] = False
        self.free_dofs = np.nonzero(mask)[0]

    # -- constraints ---------------------------------------------------------

    def constraint_values(self, s: float) -> np.ndarray:
        """Prescribed values for the fixed dofs at step parameter s."""
        vals = np.zeros(self.ndof)
        for c in self.constraints:
            d, v = c.prescribe(self.surface, s)
            vals[d] = v
        return vals[self.fixed_dofs]

    def apply_constraints(self, u: np.ndarray, s: float) -> np.ndarray:
        out = np.array(u, dtype=float, copy=True)
        out[self.fixed_dofs] = self.constraint_values(s)
        return out

    # -- state-dependent kinematic arrays ------------------------------------

    def _deformed(self, u: np.ndarray):
        X = self.surface.control_points + u.reshape(-1, 3)
        Xe = X[self._gidx]
        acov = np.einsum("enla,elc->enac", self._dN, Xe)
        amet = np.einsum("enac,enbc->enab", acov, acov)
        return acov, amet

    def _field(self, amet, want_tangent, frozen_states):
        nel, nq = amet.shape[:2]
        flat = (nel * nq, 2, 2)
        try:
            S_eff, C_eff, field = evaluate_field(
                self.material, self._a0met.reshape(flat), self._a0con.reshape(flat),
                amet.reshape(flat), criterion=self.criterion,
                slack_eps=self.slack_eps, wrinkle_eps=self.wrinkle_eps,
                want_tangent=want_tangent, root_fallback=self.root_fallback,
                frozen_states=None if frozen_states is None else frozen_states.ravel(),
                dcde_mode=self.dcde_mode)
        except RootNotFoundError as err:
            raise RootNotFoundError(
                f"{err} (quadrature grid of {nel} elements)", err.samples) from None
        S_eff = S_eff.reshape(nel, nq, 3)
        if C_eff is not None:
            C_eff = C_eff.reshape(nel, nq, 3, 3)
        return S_eff, C_eff, field

    def _material_only(self, amet, want_tangent=True):
        """Material response without tension-field modification."""
        from .materials import stress_and_tangent_batch
        nel, nq = amet.shape[:2]
        flat = (nel * nq, 2, 2)
        S, C = stress_and_tangent_batch(
            self.material, self._a0met.reshape(flat), self._a0con.reshape(flat),
            amet.reshape(flat), want_tangent=want_tangent)
        S = S.reshape(nel, nq, 3)
        if C is not None:
            C = C.reshape(nel, nq, 3, 3)
        return S, C

    def _bmatrix(self, acov):
        dN = self._dN
        B0 = np.einsum("enl,enc->enlc", dN[..., 0], acov[:, :, 0])
        B1 = np.einsum("enl,enc->enlc", dN[..., 1], acov[:, :, 1])
        B2 = (np.einsum("enl,enc->enlc", dN[..., 0], acov[:, :, 1])
              + np.einsum("enl,enc->enlc", dN[..., 1], acov[:, :, 0]))
        nel, nq, nloc, _ = B0.shape
        B = np.stack([B0, B1, B2], axis=2)
        return B.reshape(nel, nq, 3, 3 * nloc)

    # -- loads ----------------------------------------------------------------

    def _pressure(self):
        for load in self.loads:
            if isinstance(load, FollowerPressure):
                return load
        return None

    def external_force(self, u: np.ndarray, load_scale: float = 1.0) -> np.ndarray:
        """Assembled external load vector at the current state."""
        F = load_scale * self._f_line + self._f_line_fixed
        pres = self._pressure()
        if pres is not None:
            p = pres.magnitude * (load_scale if pres.ramp else 1.0)
            acov, _ = self._deformed(u)
            cross = np.cross(acov[:, :, 0], acov[:, :, 1])
            if pres.measure == "deformed":
                Fel = np.einsum("en,enc,enl->elc", self._wq * p, cross, self._N)
            else:
                nhat = cross / np.linalg.norm(cross, axis=-1, keepdims=True)
                Fel = np.einsum("en,enc,enl->elc", self._wdet * p, nhat, self._N)
            Fp = np.zeros((self.surface.n_cp, 3))
            np.add.at(Fp, self._gidx, Fel)
            F = F + Fp.ravel()
        return F

    # -- assembly ---------------------------------------------------------------

    def residual(self, u: np.ndarray, load_scale: float = 1.0,
                 frozen_states: np.ndarray | None = None) -> np.ndarray:
        """Out-of-balance force internal - external at displacement u."""
        acov, amet = self._deformed(u)
        if self.tft:
            S_eff, _, _ = self._field(amet, False, frozen_states)
        else:
            S_eff, _ = self._material_only(amet, want_tangent=False)
        N_eff = self.material.thickness * S_eff
        B = self._bmatrix(acov)
        Rel = np.einsum("en,eni,enid->ed", self._wdet, N_eff, B)
        R = np.zeros(self.ndof)
        np.add.at(R, self._edofs.ravel(), Rel.ravel())
        return R - self.external_force(u, load_scale)

    def material_jacobian(self, u: np.ndarray, load_scale: float = 1.0):
        """Tangent without the tension-field modification (mass-scaling bound)."""
        return self.jacobian(u, load_scale, use_tft=False)

    def jacobian(self, u: np.ndarray, load_scale: float = 1.0,
                 frozen_states: np.ndarray | None = None,
                 use_tft: bool | None = None) -> sparse.csr_matrix:
        """Consistent tangent dR/du (sparse, possibly unsymmetric)."""
        t = self.material.thickness
        acov, amet = self._deformed(u)
        if self.tft if use_tft is None else use_tft:
            S_eff, C_eff, _ = self._field(amet, True, frozen_states)
        else:
            S_eff, C_eff = self._material_only(amet, want_tangent=True)
        N_eff = t * S_eff
        Ct = t * C_eff
        B = self._bmatrix(acov)
        Kel = np.einsum("en,enia,enij,enjb->eab", self._wdet, B, Ct, B, optimize=True)
        geo = np.einsum("en,enla,enab,enmb->elm", self._wdet, self._dN,
                        _nmat(N_eff), self._dN, optimize=True)
        for c in range(3):
            Kel[:, c::3, c::3] += geo
        pres = self._pressure()
        if pres is not None:
            p = pres.magnitude * (load_scale if pres.ramp else 1.0)
            Kel -= self._pressure_tangent(acov, p, pres.measure)
        K = sparse.coo_matrix((Kel.ravel(), (self._krows, self._kcols)),
                              shape=(self.ndof, self.ndof))
        return K.tocsr()

    def _pressure_tangent(self, acov, p, measure):
        """Element blocks of d(F_pressure)/du."""
        a1 = acov[:, :, 0]
        a2 = acov[:, :, 1]
        T1 = np.einsum("cdk,enk->encd", _EPS3, a2)   # (e_d x a2)_c
        T2 = np.einsum("cjd,enj->encd", _EPS3, a1)   # (a1 x e_d)_c
        if measure == "deformed":
            W = self._wq * p
            G1 = np.einsum("en,enl,encd,enm->elcmd", W, self._N, T1, self._dN[..., 0],
                           optimize=True)
            G2 = np.einsum("en,enl,encd,enm->elcmd", W, self._N, T2, self._dN[..., 1],
                           optimize=True)
        else:
            cross = np.cross(a1, a2)
            norm = np.linalg.norm(cross, axis=-1, keepdims=True)
            nhat = cross / norm
            P = np.eye(3) - nhat[..., :, None] * nhat[..., None, :]
            W = self._wdet * p
            PT1 = np.einsum("enci,enid->encd", P, T1) / norm[..., None]
            PT2 = np.einsum("enci,enid->encd", P, T2) / norm[..., None]
            G1 = np.einsum("en,enl,encd,enm->elcmd", W, self._N, PT1, self._dN[..., 0],
                           optimize=True)
            G2 = np.einsum("en,enl,encd,enm->elcmd", W, self._N, PT2, self._dN[..., 1],
                           optimize=True)
        nel, nloc = self._N.shape[0], self._N.shape[2]
        return (G1 + G2).reshape(nel, 3 * nloc, 3 * nloc)

    # -- mass, reactions, snapshots -------------------------------------------

    def lumped_mass(self, alpha: float) -> np.ndarray:
        """Row-sum lumped unit-density mass diagonal, scaled by alpha."""
        if alpha <= 0:
            raise InvalidArgumentError("alpha must be positive")
        return np.repeat(alpha * self.material.thickness * self._mass0, 3)

    def boundary_reaction(self, u: np.ndarray, boundary: str, weighting,
                          load_scale: float = 1.0) -> float:
        """Virtual-work reaction on a boundary ring.

        weighting = ('force', direction) gives the net reaction force along a
        direction; ('torque', point, axis) the torque about an axis through a
        point, using the deformed ring positions as moment arms.
        """
        ring = self.surface.boundary_cp_indices(boundary)
        R = self.residual(u, load_scale)
        kind = weighting[0]
        if kind == "force":
            e = np.asarray(weighting[1], dtype=float)
            w = np.tile(e, ring.size)
        elif kind == "torque":
            point = np.asarray(weighting[1], dtype=float)
            axis = np.asarray(weighting[2], dtype=float)
            axis = axis / np.linalg.norm(axis)
            x = self.surface.control_points[ring] + u.reshape(-1, 3)[ring]
            w = np.cross(axis, x - point).ravel()
        else:
            raise InvalidArgumentError(f"unknown weighting {kind!r}")
        dofs = (3 * ring[:, None] + np.arange(3)).ravel()
        return float(R[dofs] @ w)

    def tension_snapshot(self, u: np.ndarray) -> TensionField:
        """Tension field at all quadrature points for the given state."""
        _, amet = self._deformed(u)
        _, _, field = self._field(amet, False, None)
        return field

    @property
    def qpoint_params(self) -> np.ndarray:
        """Parametric coordinates of all quadrature points, (npts, 2)."""
        return self._qxi.reshape(-1, 2)


def _nmat(N_eff):
    out = np.empty(N_eff.shape[:-1] + (2, 2))
    out[..., 0, 0] = N_eff[..., 0]
    out[..., 1, 1] = N_eff[..., 1]
    out[..., 0, 1] = out[..., 1, 0] = N_eff[..., 2]
    return out


# ---------------------------------------------------------------------------
# spec-level wrappers
# ---------------------------------------------------------------------------

def assemble_residual(problem: MembraneProblem, u, load_scale=1.0, frozen_states=None):
    return problem.residual(np.asarray(u, dtype=float), load_scale, frozen_states)


def assemble_jacobian(problem: MembraneProblem, u, load_scale=1.0, frozen_states=None):
    return problem.jacobian(np.asarray(u, dtype=float), load_scale, frozen_states)


def assemble_lumped_mass(problem: MembraneProblem, alpha: float):
    return problem.lumped_mass(alpha)


def apply_constraints(problem: MembraneProblem, s: float):
    return problem.fixed_dofs, problem.constraint_values(s)


def boundary_reaction(problem: MembraneProblem, u, boundary, weighting, load_scale=1.0):
    return problem.boundary_reaction(np.asarray(u, dtype=float), boundary, weighting,
                                     load_scale)
