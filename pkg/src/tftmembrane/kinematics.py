"""Per-point membrane kinematics: frames, Green-Lagrange strain, variations.

All strain-like quantities use Voigt order (11, 22, 2*12); stress-like
quantities use (11, 22, 12).  Discrete variations are taken with respect to
control-point displacement dofs numbered dof = 3*k + c for control point k
and Cartesian component c.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .splines import SingularGeometryError, SplineSurface


@dataclass(frozen=True)
class PointFrame:
    """Geometric quantities of one surface point, undeformed and deformed."""

    a0_cov: np.ndarray    # (2,3) undeformed covariant basis
    a_cov: np.ndarray     # (2,3) deformed covariant basis
    a0_met: np.ndarray    # (2,2) undeformed metric coefficients
    a_met: np.ndarray     # (2,2) deformed metric coefficients
    a0_con: np.ndarray    # (2,2) undeformed contravariant metric
    normal: np.ndarray    # (3,) deformed unit normal
    sqrt_det0: float      # surface measure per unit parametric area

    @property
    def a_con(self) -> np.ndarray:
        """Deformed contravariant metric coefficients."""
        return inv22(self.a_met)


def inv22(m: np.ndarray) -> np.ndarray:
    """Closed-form inverse of (...,2,2) matrices."""
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    out = np.empty_like(m)
    out[..., 0, 0] = m[..., 1, 1]
    out[..., 1, 1] = m[..., 0, 0]
    out[..., 0, 1] = -m[..., 0, 1]
    out[..., 1, 0] = -m[..., 1, 0]
    return out / det[..., None, None]


def det22(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def metric_from_strain(a0_met: np.ndarray, ev: np.ndarray) -> np.ndarray:
    """Deformed metric a_ab = a0_ab + 2 E_ab from a Voigt strain (..., 3)."""
    a = np.array(a0_met, copy=True)
    a = np.broadcast_to(a, ev.shape[:-1] + (2, 2)).copy()
    a[..., 0, 0] += 2.0 * ev[..., 0]
    a[..., 1, 1] += 2.0 * ev[..., 1]
    a[..., 0, 1] += ev[..., 2]
    a[..., 1, 0] += ev[..., 2]
    return a


def strain_voigt(a0_met: np.ndarray, a_met: np.ndarray) -> np.ndarray:
    """Green-Lagrange strain E = (a - a0)/2 in Voigt form (..., 3)."""
    ev = np.empty(a_met.shape[:-2] + (3,))
    ev[..., 0] = 0.5 * (a_met[..., 0, 0] - a0_met[..., 0, 0])
    ev[..., 1] = 0.5 * (a_met[..., 1, 1] - a0_met[..., 1, 1])
    ev[..., 2] = a_met[..., 0, 1] - a0_met[..., 0, 1]
    return ev


def frame_at(surface: SplineSurface, u_dofs: np.ndarray, xi) -> PointFrame:
    """Frame of the displaced surface at parametric point xi.

    ``u_dofs`` is the full displacement vector (3 per control point).
    """
    u = np.asarray(u_dofs, dtype=float).reshape(-1, 3)
    if u.shape[0] != surface.n_cp:
        raise ValueError("displacement vector does not match control net")
    idx, vals, grads, _ = surface.eval_basis(xi, order=1)
    cp0 = surface.control_points[idx]
    cp = cp0 + u[idx]
    a0 = grads.T @ cp0
    a = grads.T @ cp
    return frame_from_bases(a0, a)


def frame_from_bases(a0: np.ndarray, a: np.ndarray) -> PointFrame:
    """Assemble a PointFrame from covariant base vectors (2,3) pairs."""
    a0_met = a0 @ a0.T
    det0 = det22(a0_met)
    if det0 <= 0 or not np.isfinite(det0):
        raise SingularGeometryError("degenerate undeformed tangent plane")
    a_met = a @ a.T
    n = np.cross(a[0], a[1])
    nn = np.linalg.norm(n)
    if nn == 0:
        raise SingularGeometryError("degenerate deformed tangent plane")
    return PointFrame(
        a0_cov=a0,
        a_cov=a,
        a0_met=a0_met,
        a_met=a_met,
        a0_con=inv22(a0_met),
        normal=n / nn,
        sqrt_det0=float(np.sqrt(det0)),
    )


def green_lagrange(frame: PointFrame) -> np.ndarray:
    """Membrane Green-Lagrange strain of the frame, Voigt (E11, E22, 2E12)."""
    return strain_voigt(frame.a0_met, frame.a_met)


def _dof_gradient(surface: SplineSurface, xi, r: int):
    """Basis gradient of dof r at xi, or None when unsupported there."""
    k, c = divmod(int(r), 3)
    idx, _, grads, _ = surface.eval_basis(xi, order=1)
    hit = np.nonzero(idx == k)[0]
    if hit.size == 0:
        return None, c
    return grads[hit[0]], c


def strain_variation(surface: SplineSurface, frame: PointFrame, xi, r: int) -> np.ndarray:
    """First variation of the Voigt strain with respect to dof r."""
    g, c = _dof_gradient(surface, xi, r)
    out = np.zeros(3)
    if g is None:
        return out
    a = frame.a_cov
    da1 = np.zeros(3)
    da2 = np.zeros(3)
    da1[c] = g[0]
    da2[c] = g[1]
    out[0] = da1 @ a[0]
    out[1] = da2 @ a[1]
    out[2] = da1 @ a[1] + da2 @ a[0]
    return out


def strain_second_variation(surface: SplineSurface, xi, r: int, s: int) -> np.ndarray:
    """Second variation of the Voigt strain; constant in the displacement."""
    gr, cr = _dof_gradient(surface, xi, r)
    gs, cs = _dof_gradient(surface, xi, s)
    out = np.zeros(3)
    if gr is None or gs is None or cr != cs:
        return out
    out[0] = gr[0] * gs[0] + gs[0] * gr[0]
    out[1] = gr[1] * gs[1] + gs[1] * gr[1]
    out[2] = 2.0 * (gr[0] * gs[1] + gs[0] * gr[1])
    # E_ab,rs = (a_a,r . a_b,s + a_a,s . a_b,r)/2 in Voigt form
    return 0.5 * out


def normal_and_variation(surface: SplineSurface, frame: PointFrame, xi, r: int):
    """Deformed unit normal and its variation with respect to dof r."""
    g, c = _dof_gradient(surface, xi, r)
    n = frame.normal
    if g is None:
        return n, np.zeros(3)
    a1, a2 = frame.a_cov
    cross = np.cross(a1, a2)
    norm = np.linalg.norm(cross)
    da1 = np.zeros(3)
    da2 = np.zeros(3)
    da1[c] = g[0]
    da2[c] = g[1]
    dcross = np.cross(da1, a2) + np.cross(a1, da2)
    dn = (dcross - n * (n @ dcross)) / norm
    return n, dn
