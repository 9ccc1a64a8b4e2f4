"""Membrane constitutive models with plane-stress condensation.

Implements Saint Venant-Kirchhoff plus compressible/incompressible
Neo-Hookean and Mooney-Rivlin strain energies.  Stress is second
Piola-Kirchhoff in Voigt form (S11, S22, S12); the tangent is the 3x3 Voigt
matrix mapping strain-like vectors (E11, E22, 2E12).  The through-thickness
stretch is eliminated analytically (J=1) for incompressible variants and by
a scalar Newton iteration driving S33 to zero for compressible ones.

All evaluation routines are vectorized over leading array dimensions; the
per-point spec operations wrap the batched kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import PointFrame, det22, inv22, metric_from_strain, strain_voigt

VOL_BETA = -2.0  # exponent of the volumetric energy K/b^2 (b ln J + J^-b - 1)

_PLANE_STRESS_TOL = 1e-10
_PLANE_STRESS_MAXIT = 50


class InvalidStateError(RuntimeError):
    pass


class PlaneStressConvergenceError(RuntimeError):
    pass


class UnsupportedOperationError(RuntimeError):
    pass


_KINDS = ("svk", "nh_incompressible", "nh_compressible",
          "mr_incompressible", "mr_compressible")


@dataclass(frozen=True)
class MaterialModel:
    """Immutable material definition (SI units: Pa, m)."""

    kind: str
    thickness: float
    mu: float = 0.0          # shear modulus (c1 + c2 for Mooney-Rivlin)
    lam: float = 0.0         # first Lame parameter (SvK only)
    bulk: float = 0.0        # bulk modulus K (compressible only)
    c1: float = 0.0
    c2: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown material kind {self.kind!r}")
        if self.thickness <= 0:
            raise ValueError("thickness must be positive")
        if self.mu <= 0:
            raise ValueError("shear modulus must be positive")
        if self.kind.startswith("mr"):
            if self.c1 < 0 or self.c2 < 0 or self.c1 + self.c2 <= 0:
                raise ValueError("need c1, c2 >= 0 with c1 + c2 > 0")
        if self.kind.endswith("compressible") and not self.is_incompressible:
            if self.bulk <= 0:
                raise ValueError("compressible models need bulk modulus K > 0")

    # -- constructors ------------------------------------------------------

    @classmethod
    def svk(cls, lam: float, mu: float, thickness: float) -> "MaterialModel":
        return cls("svk", thickness, mu=mu, lam=lam)

    @classmethod
    def svk_from_E_nu(cls, E: float, nu: float, thickness: float) -> "MaterialModel":
        mu = E / (2 * (1 + nu))
        lam = E * nu / ((1 + nu) * (1 - 2 * nu))
        return cls.svk(lam, mu, thickness)

    @classmethod
    def nh_incompressible(cls, mu: float, thickness: float) -> "MaterialModel":
        return cls("nh_incompressible", thickness, mu=mu)

    @classmethod
    def nh_compressible(cls, mu: float, bulk: float, thickness: float) -> "MaterialModel":
        return cls("nh_compressible", thickness, mu=mu, bulk=bulk)

    @classmethod
    def mr_incompressible(cls, c1: float, c2: float, thickness: float) -> "MaterialModel":
        return cls("mr_incompressible", thickness, mu=c1 + c2, c1=c1, c2=c2)

    @classmethod
    def mr_compressible(cls, c1: float, c2: float, bulk: float, thickness: float) -> "MaterialModel":
        return cls("mr_compressible", thickness, mu=c1 + c2, bulk=bulk, c1=c1, c2=c2)

    @property
    def is_incompressible(self) -> bool:
        return self.kind.endswith("incompressible")

    @property
    def is_svk(self) -> bool:
        return self.kind == "svk"

    @property
    def young(self) -> float:
        """Young's modulus; SvK from Lame parameters, else 3*mu (nu=1/2)."""
        if self.is_svk:
            return self.mu * (3 * self.lam + 2 * self.mu) / (self.lam + self.mu)
        return 3.0 * self.mu


# ---------------------------------------------------------------------------
# Voigt helpers.  Rows/columns are ordered (11, 22, 12); a matrix in this
# layout acts on strain-like vectors (E11, E22, 2E12).
# ---------------------------------------------------------------------------

def _voigt(m: np.ndarray) -> np.ndarray:
    return np.stack([m[..., 0, 0], m[..., 1, 1], m[..., 0, 1]], axis=-1)


def _outer(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., :, None] * b[..., None, :]


_VPAIRS = ((0, 0), (1, 1), (0, 1))


def _sym4(a: np.ndarray) -> np.ndarray:
    """Voigt matrix of (a^as a^bt + a^at a^bs)/2 for symmetric a (...,2,2)."""
    out = np.empty(a.shape[:-2] + (3, 3))
    for r, (i, j) in enumerate(_VPAIRS):
        for c, (k, l) in enumerate(_VPAIRS):
            out[..., r, c] = 0.5 * (a[..., i, k] * a[..., j, l] + a[..., i, l] * a[..., j, k])
    return out


def _sym4_pair(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product-rule companion of _sym4: d_sym4(a) in direction b."""
    out = np.empty(a.shape[:-2] + (3, 3))
    for r, (i, j) in enumerate(_VPAIRS):
        for c, (k, l) in enumerate(_VPAIRS):
            out[..., r, c] = 0.5 * (
                b[..., i, k] * a[..., j, l] + a[..., i, k] * b[..., j, l]
                + b[..., i, l] * a[..., j, k] + a[..., i, l] * b[..., j, k])
    return out


# ---------------------------------------------------------------------------
# strain-energy scalar derivatives
# ---------------------------------------------------------------------------

def _vol_terms(J: np.ndarray, K: float):
    """Volumetric energy and its first/second J-derivatives."""
    b = VOL_BETA
    val = K / b**2 * (b * np.log(J) + J**(-b) - 1.0)
    d1 = K / b * (1.0 / J - J**(-b - 1.0))
    d2 = K / b * (-1.0 / J**2 + (b + 1.0) * J**(-b - 2.0))
    return val, d1, d2


def _psi_scalars(model: MaterialModel, T1, T2, J):
    """Energy and partial derivatives with respect to (I1, I2, J).

    Returns (psi, p1, p2, pJ, p11, p1J, p2J, pJJ); cross terms between I1
    and I2 vanish for every implemented model.
    """
    z = np.zeros_like(np.asarray(T1, dtype=float))
    k = model.kind
    if k == "nh_incompressible":
        mu = model.mu
        return mu / 2 * (T1 - 3.0), mu / 2 + z, z, z, z, z, z, z
    if k == "mr_incompressible":
        c1, c2 = model.c1, model.c2
        return c1 / 2 * (T1 - 3.0) + c2 / 2 * (T2 - 3.0), c1 / 2 + z, c2 / 2 + z, z, z, z, z, z
    if k == "nh_compressible":
        mu, K = model.mu, model.bulk
        vol, dvol, ddvol = _vol_terms(J, K)
        Jm23 = J**(-2.0 / 3.0)
        psi = mu / 2 * (Jm23 * T1 - 3.0) + vol
        p1 = mu / 2 * Jm23
        pJ = -mu / 3 * J**(-5.0 / 3.0) * T1 + dvol
        p1J = -mu / 3 * J**(-5.0 / 3.0) + z
        pJJ = 5 * mu / 9 * J**(-8.0 / 3.0) * T1 + ddvol
        return psi, p1, z, pJ, z, p1J, z, pJJ
    if k == "mr_compressible":
        c1, c2, K = model.c1, model.c2, model.bulk
        vol, dvol, ddvol = _vol_terms(J, K)
        Jm23 = J**(-2.0 / 3.0)
        Jm43 = J**(-4.0 / 3.0)
        psi = c1 / 2 * (Jm23 * T1 - 3.0) + c2 / 2 * (Jm43 * T2 - 3.0) + vol
        p1 = c1 / 2 * Jm23
        p2 = c2 / 2 * Jm43
        pJ = -c1 / 3 * J**(-5.0 / 3.0) * T1 - 2 * c2 / 3 * J**(-7.0 / 3.0) * T2 + dvol
        p1J = -c1 / 3 * J**(-5.0 / 3.0) + z
        p2J = -2 * c2 / 3 * J**(-7.0 / 3.0) + z
        pJJ = (5 * c1 / 9 * J**(-8.0 / 3.0) * T1
               + 14 * c2 / 9 * J**(-10.0 / 3.0) * T2 + ddvol)
        return psi, p1, p2, pJ, z, p1J, p2J, pJJ
    raise UnsupportedOperationError(f"no strain energy for {model.kind}")


class _State:
    """Shared geometric quantities of a batch of material points."""

    __slots__ = ("g_con", "a_met", "a_inv", "J0sq", "I1_2d", "Giv", "Aiv")

    def __init__(self, a0_met, a0_con, a_met):
        self.g_con = a0_con
        self.a_met = a_met
        detA = det22(a_met)
        detG = det22(a0_met)
        if np.any(detA <= 0):
            raise InvalidStateError("deformed metric not positive definite")
        self.a_inv = inv22(a_met)
        self.J0sq = detA / detG
        self.I1_2d = np.einsum("...ab,...ab->...", a0_con, a_met)
        self.Giv = _voigt(a0_con)
        self.Aiv = _voigt(self.a_inv)


def _invariants(st: _State, c33):
    T1 = st.I1_2d + c33
    T2 = st.J0sq + c33 * st.I1_2d
    Jsq = st.J0sq * c33
    if np.any(Jsq <= 0):
        raise InvalidStateError("non-positive Jacobian determinant")
    return T1, T2, np.sqrt(Jsq)


def _dpsi_dc33(model, st: _State, c33):
    """S33/2 and its C33-derivative at fixed in-plane metric."""
    T1, T2, J = _invariants(st, c33)
    _, p1, p2, pJ, p11, p1J, p2J, pJJ = _psi_scalars(model, T1, T2, J)
    dJ3 = J / (2.0 * c33)
    d1 = p1 + p2 * st.I1_2d + pJ * dJ3
    # T1, T2 are linear in C33 (slopes 1 and I1_2d); J is not
    d2 = (p11 + p1J * dJ3) + p2J * dJ3 * st.I1_2d \
        + (p1J + p2J * st.I1_2d + pJJ * dJ3) * dJ3 + pJ * (-J / (4.0 * c33**2))
    return d1, d2


def resolve_c33(model: MaterialModel, a0_met, a0_con, a_met):
    """Through-thickness stretch squared satisfying the plane-stress condition."""
    st = _State(a0_met, a0_con, a_met)
    return _resolve_c33(model, st)


def _resolve_c33(model: MaterialModel, st: _State):
    if model.is_svk:
        return np.ones_like(st.J0sq)
    if model.is_incompressible:
        return 1.0 / st.J0sq
    # damped Newton from the incompressible guess; steps clamped to a factor
    # so wild transient states cannot throw the iterate out of (0, inf)
    c33 = np.clip(1.0 / st.J0sq, 1e-6, 1e6)
    tol = _PLANE_STRESS_TOL * model.mu
    converged = np.zeros_like(c33, dtype=bool)
    for it in range(_PLANE_STRESS_MAXIT):
        d1, d2 = _dpsi_dc33(model, st, c33)
        converged = np.abs(2.0 * d1) < tol
        if np.all(converged):
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(d2 != 0, d1 / d2, 0.0)
            c33 = np.clip(c33 - step, 0.25 * c33, 4.0 * c33)  # polish
            return c33
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where((d2 > 0) & np.isfinite(d2), d1 / d2, np.nan)
        step = np.where(np.isfinite(step), step, -0.5 * c33)  # push upward
        c33 = np.clip(c33 - step, 0.25 * c33, 4.0 * c33)
    bad = ~converged
    c33_bad = _bisect_c33(model, st, np.nonzero(bad.ravel())[0], c33)
    c33 = c33.copy()
    c33.ravel()[np.nonzero(bad.ravel())[0]] = c33_bad
    return c33


def _bisect_c33(model: MaterialModel, st: _State, flat_idx, c33_all):
    """Bracketed bisection fallback for points Newton could not settle."""
    sub = _State.__new__(_State)
    for name in _State.__slots__:
        arr = getattr(st, name)
        flat = arr.reshape((-1,) + arr.shape[c33_all.ndim:])
        setattr(sub, name, flat[flat_idx])
    grid = np.logspace(-8, 6, 60)
    g_prev = None
    lo = np.full(flat_idx.shape, np.nan)
    hi = np.full(flat_idx.shape, np.nan)
    for c in grid:
        g, _ = _dpsi_dc33(model, sub, np.full(flat_idx.shape, c))
        if g_prev is not None:
            hit = (g_prev < 0) & (g >= 0) & np.isnan(lo)
            lo[hit] = c_prev
            hi[hit] = c
        g_prev, c_prev = g, c
    if np.isnan(lo).any():
        raise PlaneStressConvergenceError(
            f"plane-stress condition has no root for "
            f"{int(np.isnan(lo).sum())} points")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        g, _ = _dpsi_dc33(model, sub, mid)
        neg = g < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def _svk_tangent(model: MaterialModel, a0_con):
    lam_ps = 2.0 * model.lam * model.mu / (model.lam + 2.0 * model.mu)
    Giv = _voigt(a0_con)
    return lam_ps * _outer(Giv, Giv) + 2.0 * model.mu * _sym4(a0_con)


def stress_and_tangent_batch(model: MaterialModel, a0_met, a0_con, a_met,
                             want_tangent: bool = True):
    """Second Piola-Kirchhoff stress and Voigt tangent for a batch of points."""
    if model.is_svk:
        C = _svk_tangent(model, a0_con)
        ev = strain_voigt(np.broadcast_to(a0_met, a_met.shape), a_met)
        S = np.einsum("...ij,...j->...i", C, ev)
        return (S, C) if want_tangent else (S, None)

    st = _State(a0_met, a0_con, a_met)
    c33 = _resolve_c33(model, st)
    T1, T2, J = _invariants(st, c33)
    _, p1, p2, pJ, p11, p1J, p2J, pJJ = _psi_scalars(model, T1, T2, J)

    Aiv, Giv = st.Aiv, st.Giv
    J0sq, I1_2d = st.J0sq, st.I1_2d
    dJ3 = J / (2.0 * c33)

    # first derivatives of the primitives w.r.t. in-plane C (Voigt)
    dT1 = np.broadcast_to(Giv, Aiv.shape)
    dT2 = J0sq[..., None] * Aiv + c33[..., None] * Giv
    dJ = 0.5 * J[..., None] * Aiv

    dpsi_p = p1[..., None] * dT1 + p2[..., None] * dT2 + pJ[..., None] * dJ
    dpsi_3 = p1 + p2 * I1_2d + pJ * dJ3

    if model.is_incompressible:
        Kc = -c33[..., None] * Aiv  # dC33/dC_ab under J = 1
        S = 2.0 * (dpsi_p + dpsi_3[..., None] * Kc)
    else:
        S = 2.0 * dpsi_p  # dpsi_3 = 0 at the plane-stress root
    if not want_tangent:
        return S, None

    # second derivatives of the primitives
    oAA = _outer(Aiv, Aiv)
    s4 = _sym4(st.a_inv)
    d2T2_pp = J0sq[..., None, None] * (oAA - s4)
    d2J_pp = 0.25 * J[..., None, None] * oAA - 0.5 * J[..., None, None] * s4
    d2T2_p3 = np.broadcast_to(Giv, Aiv.shape)
    d2J_p3 = (J / (4.0 * c33))[..., None] * Aiv
    d2J_33 = -J / (4.0 * c33**2)

    def hess_pp():
        h = (p11[..., None, None] * _outer(dT1, dT1)
             + p1J[..., None, None] * (_outer(dT1, dJ) + _outer(dJ, dT1))
             + p2J[..., None, None] * (_outer(dT2, dJ) + _outer(dJ, dT2))
             + pJJ[..., None, None] * _outer(dJ, dJ))
        h = h + p2[..., None, None] * d2T2_pp + pJ[..., None, None] * d2J_pp
        return h

    def hess_p3():
        h = (p11[..., None] * dT1
             + p1J[..., None] * (dT1 * dJ3[..., None] + dJ)
             + p2J[..., None] * (dT2 * dJ3[..., None] + dJ * I1_2d[..., None])
             + pJJ[..., None] * dJ * dJ3[..., None])
        h = h + p2[..., None] * d2T2_p3 + pJ[..., None] * d2J_p3
        return h

    def hess_33():
        return (p11 + 2.0 * p1J * dJ3 + 2.0 * p2J * I1_2d * dJ3
                + pJJ * dJ3 * dJ3 + pJ * d2J_33)

    Hpp = hess_pp()
    Hp3 = hess_p3()
    H33 = hess_33()

    if model.is_incompressible:
        Kc = -c33[..., None] * Aiv
        C = 4.0 * (Hpp + _outer(Hp3, Kc) + _outer(Kc, Hp3)
                   + H33[..., None, None] * _outer(Kc, Kc))
        C = C + 4.0 * (dpsi_3 * c33)[..., None, None] * (oAA + s4)
    else:
        C = 4.0 * (Hpp - _outer(Hp3, Hp3) / H33[..., None, None])
    return S, C


def psi_batch(model: MaterialModel, a0_met, a0_con, a_met, c33=None):
    """Strain energy density; resolves C33 when not supplied."""
    if model.is_svk:
        C = _svk_tangent(model, a0_con)
        ev = strain_voigt(np.broadcast_to(a0_met, a_met.shape), a_met)
        return 0.5 * np.einsum("...i,...ij,...j->...", ev, C, ev)
    st = _State(a0_met, a0_con, a_met)
    if c33 is None:
        c33 = _resolve_c33(model, st)
    else:
        c33 = np.asarray(c33, dtype=float)
    T1, T2, J = _invariants(st, c33)
    return _psi_scalars(model, T1, T2, J)[0]


def tangent_strain_derivative_batch(model: MaterialModel, a0_met, a0_con, a_met,
                                    mode: str = "finite_difference"):
    """Derivative of the Voigt tangent with respect to the Voigt strain.

    Returns (..., 3, 3, 3): leading Voigt index k gives dC/dE_k (third
    component differentiates with respect to the shear entry 2*E12).
    """
    if mode == "analytic":
        if model.kind != "nh_incompressible":
            raise UnsupportedOperationError(
                "analytic tangent derivative only for the incompressible Neo-Hookean model")
        return _nh_incomp_dC_analytic(model, a0_met, a_met)
    if mode != "finite_difference":
        raise UnsupportedOperationError(f"unknown mode {mode!r}")
    a_met = np.asarray(a_met, dtype=float)
    a0b = np.broadcast_to(a0_met, a_met.shape)
    a0cb = np.broadcast_to(a0_con, a_met.shape)
    ev = strain_voigt(a0b, a_met)
    h = 1e-6 * np.maximum(1.0, np.max(np.abs(ev), axis=-1))
    out = np.zeros(a_met.shape[:-2] + (3, 3, 3))
    floor = 1e-9 * det22(a0b)
    for k in range(3):
        dev = np.zeros_like(ev)
        dev[..., k] = h
        ap = metric_from_strain(a0b, ev + dev)
        am = metric_from_strain(a0b, ev - dev)
        ok = (det22(ap) > floor) & (det22(am) > floor)
        if np.all(ok):
            _, Cp = stress_and_tangent_batch(model, a0b, a0cb, ap)
            _, Cm = stress_and_tangent_batch(model, a0b, a0cb, am)
            out[..., k, :, :] = (Cp - Cm) / (2.0 * h)[..., None, None]
        elif np.any(ok):
            # near-degenerate points keep a zero derivative (tangent-quality
            # loss only; the stress itself is untouched)
            _, Cp = stress_and_tangent_batch(model, a0b[ok], a0cb[ok], ap[ok])
            _, Cm = stress_and_tangent_batch(model, a0b[ok], a0cb[ok], am[ok])
            sub = (Cp - Cm) / (2.0 * h[ok])[..., None, None]
            tmp = out[..., k, :, :]
            tmp[ok] = sub
            out[..., k, :, :] = tmp
    return out


_DMET = (np.array([[2.0, 0.0], [0.0, 0.0]]),
         np.array([[0.0, 0.0], [0.0, 2.0]]),
         np.array([[0.0, 1.0], [1.0, 0.0]]))


def _nh_incomp_dC_analytic(model: MaterialModel, a0_met, a_met):
    """Closed-form strain derivative of the incompressible Neo-Hookean tangent."""
    a_met = np.asarray(a_met, dtype=float)
    detG = det22(np.broadcast_to(a0_met, a_met.shape))
    detA = det22(a_met)
    Ai = inv22(a_met)
    W = detG / detA  # J0^{-2}
    Aiv = _voigt(Ai)
    base = _outer(Aiv, Aiv) + _sym4(Ai)
    out = np.empty(a_met.shape[:-2] + (3, 3, 3))
    for k, D in enumerate(_DMET):
        dAi = -np.einsum("...ab,bc,...cd->...ad", Ai, D, Ai)
        dW = -W * np.einsum("...ab,ba->...", Ai, D)
        dAiv = _voigt(dAi)
        dbase = _outer(dAiv, Aiv) + _outer(Aiv, dAiv) + _sym4_pair(Ai, dAi)
        out[..., k, :, :] = 2.0 * model.mu * (dW[..., None, None] * base
                                              + W[..., None, None] * dbase)
    return out


# ---------------------------------------------------------------------------
# per-point spec operations
# ---------------------------------------------------------------------------

def psi(model: MaterialModel, frame: PointFrame, c33: float | None = None) -> float:
    """Strain energy density (Pa) at a frame, optionally at an explicit C33."""
    return float(psi_batch(model, frame.a0_met, frame.a0_con, frame.a_met, c33))


def stress_and_tangent(model: MaterialModel, frame: PointFrame):
    """Plane-stress condensed (S, C) at a frame."""
    S, C = stress_and_tangent_batch(model, frame.a0_met, frame.a0_con, frame.a_met)
    return S, C


def tangent_strain_derivative(model: MaterialModel, frame: PointFrame,
                              mode: str = "finite_difference"):
    return tangent_strain_derivative_batch(
        model, frame.a0_met, frame.a0_con, frame.a_met, mode)


def membrane_force(S: np.ndarray, thickness: float) -> np.ndarray:
    """Thickness-integrated membrane force N = t*S."""
    if thickness <= 0:
        raise ValueError("thickness must be positive")
    return thickness * np.asarray(S)
