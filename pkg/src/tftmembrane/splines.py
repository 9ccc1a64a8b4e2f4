"""Tensor-product B-spline / NURBS surfaces with periodic directions.

Provides knot vectors (clamped and wrapped-periodic), basis evaluation with
parametric derivatives up to second order, Gauss-Legendre quadrature per
element, and exact constructors for the benchmark geometries (squares with
polynomial splines, annulus and cylinder with rational quadratic circles in
the periodic angular direction).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss


class InvalidArgumentError(ValueError):
    pass


class DomainError(ValueError):
    pass


class SingularGeometryError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# knot vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KnotVector:
    """Univariate B-spline knot vector on the parameter domain [0, 1].

    For ``periodic=True`` the ``knots`` array lists the knots of one period
    (values in [0, 1), breakpoints repeated per multiplicity); basis functions
    wrap around the seam.  For clamped vectors ``knots`` is the full open
    vector with the first/last value repeated ``degree+1`` times.
    """

    degree: int
    knots: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        object.__setattr__(self, "knots", knots)
        if self.degree < 1:
            raise InvalidArgumentError("degree must be >= 1")
        if np.any(np.diff(knots) < 0):
            raise InvalidArgumentError("knots must be non-decreasing")
        if self.periodic:
            if knots.size < 1 or knots[0] < 0 or knots[-1] >= 1.0:
                raise InvalidArgumentError("periodic knots must lie in [0, 1)")
            # unrolled copies of the period used by the evaluation routines
            m = knots.size
            ext = np.concatenate([knots + s for s in range(-2, 3)])
            object.__setattr__(self, "_ext", ext)
            object.__setattr__(self, "_m", m)
        else:
            p = self.degree
            if knots.size < 2 * p + 2:
                raise InvalidArgumentError("too few knots for degree")
            if knots[p] != 0.0 or knots[-p - 1] != 1.0:
                raise InvalidArgumentError("clamped domain must be [0, 1]")

    @property
    def n_basis(self) -> int:
        if self.periodic:
            return self.knots.size
        return self.knots.size - self.degree - 1

    def breakpoints(self) -> np.ndarray:
        """Distinct knot values (one period for periodic vectors)."""
        return np.unique(self.knots)

    def elements(self) -> np.ndarray:
        """Element intervals as an array of (lo, hi) parameter pairs.

        For periodic vectors the last element wraps: hi = first breakpoint + 1.
        """
        bp = self.breakpoints()
        if self.periodic:
            lo = bp
            hi = np.append(bp[1:], bp[0] + 1.0)
            return np.column_stack([lo, hi])
        inside = (bp >= 0.0) & (bp <= 1.0)
        bp = bp[inside]
        return np.column_stack([bp[:-1], bp[1:]])

    @property
    def n_elements(self) -> int:
        return len(self.elements())

    def _span_knots(self, x: float) -> tuple[np.ndarray, int]:
        """Knot window and first-function index for evaluation at x.

        Returns the extended knot slice and the global index of the first of
        the ``degree+1`` functions that are nonzero at x.  Periodic vectors
        accept x in [0, 2) so that wrapped elements can be sampled directly.
        """
        p = self.degree
        if self.periodic:
            ext = self._ext
            m = self._m
            if not (0.0 <= x < 2.0):
                raise DomainError(f"parameter {x} outside periodic window [0, 2)")
            span = int(np.searchsorted(ext, x, side="right") - 1)
            # guard against landing exactly on a repeated knot
            while ext[span + 1] <= ext[span]:
                span += 1
            return ext, span
        knots = self.knots
        if not (0.0 <= x <= 1.0):
            raise DomainError(f"parameter {x} outside [0, 1]")
        if x >= 1.0:
            span = int(np.searchsorted(knots, 1.0, side="left") - 1)
        else:
            span = int(np.searchsorted(knots, x, side="right") - 1)
        return knots, span

    def eval_basis(self, x: float, order: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Nonzero basis functions at x with derivatives up to ``order``.

        Returns ``(indices, ders)`` where ``ders[k, j]`` is the k-th
        derivative of the function ``indices[j]``; ``indices`` are global
        basis indices (wrapped modulo the basis count for periodic vectors).
        """
        p = self.degree
        knots, span = self._span_knots(x)
        ders = _ders_basis_funs(span, x, p, order, knots)
        first = span - p
        if self.periodic:
            idx = (first - 2 * self._m + np.arange(p + 1)) % self._m
        else:
            idx = first + np.arange(p + 1)
        return idx, ders

    def greville(self) -> np.ndarray:
        """Greville abscissae (one per basis function)."""
        p = self.degree
        if self.periodic:
            ext = self._ext
            m = self._m
            # function j (global) corresponds to extended index j + 2m
            g = np.array([ext[j + 2 * m + 1: j + 2 * m + p + 1].mean() for j in range(m)])
            return np.mod(g, 1.0)
        return np.array([self.knots[i + 1: i + p + 1].mean() for i in range(self.n_basis)])


def _ders_basis_funs(span: int, x: float, p: int, order: int, knots: np.ndarray) -> np.ndarray:
    """Derivatives of the p+1 nonzero B-spline basis functions at x.

    Standard triangular-table algorithm; returns array (order+1, p+1).
    """
    n = min(order, p)
    ndu = np.zeros((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved
    ders = np.zeros((order + 1, p + 1))
    ders[0, :] = ndu[:, p]
    a = np.zeros((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, n + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    r = p
    for k in range(1, n + 1):
        ders[k, :] *= r
        r *= p - k
    return ders


def make_uniform_knots(degree: int, n_elements: int, periodic: bool = False) -> KnotVector:
    """Uniform knot vector over [0, 1], clamped or wrapped-periodic."""
    if degree < 1:
        raise InvalidArgumentError("degree must be >= 1")
    if n_elements < 1:
        raise InvalidArgumentError("n_elements must be >= 1")
    if periodic:
        return KnotVector(degree, np.arange(n_elements) / n_elements, periodic=True)
    interior = np.arange(1, n_elements) / n_elements
    knots = np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])
    return KnotVector(degree, knots)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Per-element tensor Gauss-Legendre points/weights in the parametric square."""

    points_u: np.ndarray   # (nq1,) on [0,1]
    weights_u: np.ndarray
    points_v: np.ndarray
    weights_v: np.ndarray

    @classmethod
    def gauss(cls, n_u: int, n_v: int | None = None) -> "QuadratureRule":
        if n_v is None:
            n_v = n_u
        xu, wu = leggauss(n_u)
        xv, wv = leggauss(n_v)
        return cls((xu + 1) / 2, wu / 2, (xv + 1) / 2, wv / 2)

    def on_element(self, lo_u, hi_u, lo_v, hi_v):
        """Mapped 2D points (nq,2) and weights (nq,) for one element."""
        du, dv = hi_u - lo_u, hi_v - lo_v
        uu = lo_u + self.points_u * du
        vv = lo_v + self.points_v * dv
        U, V = np.meshgrid(uu, vv, indexing="ij")
        W = np.outer(self.weights_u * du, self.weights_v * dv)
        return np.column_stack([U.ravel(), V.ravel()]), W.ravel()


# ---------------------------------------------------------------------------
# surfaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplineSurface:
    """Tensor-product (rational) spline surface embedded in R^3.

    Control point k = i + n1*j couples basis function i of ``kv1`` with
    function j of ``kv2``.  ``weights`` is None for polynomial surfaces;
    rational surfaces require strictly positive weights.
    """

    kv1: KnotVector
    kv2: KnotVector
    control_points: np.ndarray          # (ncp, 3)
    weights: np.ndarray | None = None   # (ncp,)

    def __post_init__(self):
        cp = np.ascontiguousarray(self.control_points, dtype=float)
        object.__setattr__(self, "control_points", cp)
        n = self.kv1.n_basis * self.kv2.n_basis
        if cp.shape != (n, 3):
            raise InvalidArgumentError(
                f"control net shape {cp.shape} does not match basis {self.kv1.n_basis}x{self.kv2.n_basis}")
        if self.weights is not None:
            w = np.ascontiguousarray(self.weights, dtype=float)
            if w.shape != (n,):
                raise InvalidArgumentError("weights shape mismatch")
            if np.any(w <= 0):
                raise InvalidArgumentError("rational weights must be strictly positive")
            object.__setattr__(self, "weights", w)

    @property
    def n_cp(self) -> int:
        return self.control_points.shape[0]

    @property
    def degrees(self) -> tuple[int, int]:
        return self.kv1.degree, self.kv2.degree

    def elements(self) -> np.ndarray:
        """All elements as (nel, 4) rows (lo_u, hi_u, lo_v, hi_v)."""
        e1 = self.kv1.elements()
        e2 = self.kv2.elements()
        rows = [(a, b, c, d) for (c, d) in e2 for (a, b) in e1]
        return np.asarray(rows)

    def eval_basis(self, xi, order: int = 0):
        """Nonzero surface basis functions at xi=(u,v) with derivatives.

        Returns ``(indices, vals, grads, hess)`` with shapes (nloc,),
        (nloc,), (nloc, 2), (nloc, 3); ``hess`` columns are the (11, 22, 12)
        second parametric derivatives and is None for order < 2.  Rational
        weighting is already applied.
        """
        if order not in (0, 1, 2):
            raise InvalidArgumentError("order must be 0, 1 or 2")
        u, v = float(xi[0]), float(xi[1])
        i1, d1 = self.kv1.eval_basis(u, order)
        i2, d2 = self.kv2.eval_basis(v, order)
        idx = (i1[:, None] + self.kv1.n_basis * i2[None, :]).ravel()
        vals = np.outer(d1[0], d2[0]).ravel()
        grads = None
        hess = None
        if order >= 1:
            grads = np.stack([np.outer(d1[1], d2[0]).ravel(),
                              np.outer(d1[0], d2[1]).ravel()], axis=1)
        if order >= 2:
            hess = np.stack([np.outer(d1[2], d2[0]).ravel(),
                             np.outer(d1[0], d2[2]).ravel(),
                             np.outer(d1[1], d2[1]).ravel()], axis=1)
        if self.weights is None:
            return idx, vals, grads, hess
        w = self.weights[idx]
        A = w * vals
        W = A.sum()
        R = A / W
        if order == 0:
            return idx, R, None, None
        Ag = w[:, None] * grads
        Wg = Ag.sum(axis=0)
        Rg = (Ag - R[:, None] * Wg[None, :]) / W
        if order == 1:
            return idx, R, Rg, None
        Ah = w[:, None] * hess
        Wh = Ah.sum(axis=0)
        Rh = np.empty_like(Ah)
        for c, (a, b) in enumerate(((0, 0), (1, 1), (0, 1))):
            Rh[:, c] = (Ah[:, c] - Rg[:, a] * Wg[b] - Rg[:, b] * Wg[a] - R * Wh[c]) / W
        return idx, R, Rg, Rh

    def point(self, xi, order: int = 0):
        """Surface point (and parametric derivatives) at xi.

        order=0: (3,); order=1: (x, dx) with dx (2,3); order=2 adds (3,3)
        second derivatives in (11, 22, 12) order.
        """
        idx, R, Rg, Rh = self.eval_basis(xi, order)
        cp = self.control_points[idx]
        x = R @ cp
        if order == 0:
            return x
        dx = Rg.T @ cp
        if order == 1:
            return x, dx
        return x, dx, Rh.T @ cp

    def boundary_cp_indices(self, boundary: str) -> np.ndarray:
        """Control-point indices of a parametric boundary.

        Boundaries: 'umin'/'umax' (first direction at 0/1), 'vmin'/'vmax'.
        Boundaries transverse to a periodic direction do not exist.
        """
        n1, n2 = self.kv1.n_basis, self.kv2.n_basis
        grid = np.arange(n1 * n2).reshape(n2, n1)  # [j, i]
        if boundary == "umin":
            if self.kv1.periodic:
                raise InvalidArgumentError("periodic direction has no umin boundary")
            return grid[:, 0].copy()
        if boundary == "umax":
            if self.kv1.periodic:
                raise InvalidArgumentError("periodic direction has no umax boundary")
            return grid[:, -1].copy()
        if boundary == "vmin":
            if self.kv2.periodic:
                raise InvalidArgumentError("periodic direction has no vmin boundary")
            return grid[0, :].copy()
        if boundary == "vmax":
            if self.kv2.periodic:
                raise InvalidArgumentError("periodic direction has no vmax boundary")
            return grid[-1, :].copy()
        raise InvalidArgumentError(f"unknown boundary {boundary!r}")


# ---------------------------------------------------------------------------
# exact circle machinery (rational quadratic arcs, wrapped periodic)
# ---------------------------------------------------------------------------

def _bezier_circle_arcs(degree: int) -> list[np.ndarray]:
    """Homogeneous Bezier control points of the four unit-circle quarter arcs.

    Arc q spans polar angles (q*pi/2 - pi/4, q*pi/2 + pi/4); parameter 0 of
    the surface maps to angle 0, which lies mid-arc of arc 0 so the periodic
    seam is interior to a single conic piece.  Rows are (w*x, w*y, w).
    """
    c = np.cos(np.pi / 4)
    arcs = []
    for q in range(4):
        phi = q * np.pi / 2
        e0 = np.array([np.cos(phi - np.pi / 4), np.sin(phi - np.pi / 4)])
        e1 = np.array([np.cos(phi), np.sin(phi)]) / c
        e2 = np.array([np.cos(phi + np.pi / 4), np.sin(phi + np.pi / 4)])
        H = np.array([[e0[0], e0[1], 1.0],
                      [c * e1[0], c * e1[1], c],
                      [e2[0], e2[1], 1.0]])
        for _ in range(degree - 2):
            H = _bezier_elevate(H)
        arcs.append(H)
    return arcs


def _bezier_elevate(P: np.ndarray) -> np.ndarray:
    """Degree elevation of Bezier control points (rows), any column count."""
    p = P.shape[0] - 1
    Q = np.zeros((p + 2, P.shape[1]))
    Q[0] = P[0]
    Q[-1] = P[-1]
    for i in range(1, p + 1):
        a = i / (p + 1)
        Q[i] = a * P[i - 1] + (1 - a) * P[i]
    return Q


def _de_casteljau(P: np.ndarray, t: float) -> np.ndarray:
    Q = P.copy()
    for r in range(1, P.shape[0]):
        Q[: P.shape[0] - r] = (1 - t) * Q[: P.shape[0] - r] + t * Q[1: P.shape[0] - r + 1]
    return Q[0]


def _homogeneous_circle(theta: float, arcs: list[np.ndarray]) -> np.ndarray:
    """Evaluate the homogeneous circle at parameter theta in [0, 1)."""
    t = theta % 1.0
    q = int(np.floor((t + 0.125) * 4)) % 4
    lo = q * 0.25 - 0.125
    loc = ((t - lo) % 1.0) * 4.0
    return _de_casteljau(arcs[q], loc)


def circle_knot_vector(degree: int, n_elements: int) -> KnotVector:
    """Periodic knot vector for the exact circle with n_elements (multiple of 4).

    Quarter-arc junctions carry full multiplicity (the exact rational
    quadratic circle is only C0 there in homogeneous form); knots interior to
    an arc are simple, including the one at the seam for n_elements >= 8.
    """
    if n_elements % 4 != 0 or n_elements < 4:
        raise InvalidArgumentError("circle needs a multiple of 4 elements")
    k = n_elements // 4
    knots = []
    for q in range(4):
        lo = q * 0.25 - 0.125
        knots.extend([lo % 1.0] * degree)
        knots.extend([(lo + 0.25 * i / k) % 1.0 for i in range(1, k)])
    return KnotVector(degree, np.sort(np.asarray(knots)), periodic=True)


def circle_control_points(degree: int, n_elements: int, radius: float = 1.0):
    """Homogeneous control points (n, 3) of the exact circle in the space of
    ``circle_knot_vector(degree, n_elements)``, found by collocation at the
    Greville abscissae and verified to reproduce the circle to 1e-12."""
    kv = circle_knot_vector(degree, n_elements)
    arcs = _bezier_circle_arcs(degree)
    n = kv.n_basis
    g = kv.greville()
    A = np.zeros((n, n))
    rhs = np.zeros((n, 3))
    for row, t in enumerate(g):
        idx, vals, _, _ = _basis_1d(kv, t)
        A[row, idx] = vals
        rhs[row] = _homogeneous_circle(t, arcs)
    H = np.linalg.solve(A, rhs)
    # construction-time validation: the collocated spline must be the circle
    for t in np.linspace(0, 1, 57, endpoint=False):
        idx, vals, _, _ = _basis_1d(kv, t)
        h = vals @ H[idx]
        xy = h[:2] / h[2]
        if abs(np.hypot(*xy) - 1.0) > 1e-11:
            raise RuntimeError("exact circle collocation failed")
    H[:, :2] *= radius
    return kv, H


def _basis_1d(kv: KnotVector, x: float):
    idx, ders = kv.eval_basis(x, 0)
    return idx, ders[0], None, None


# ---------------------------------------------------------------------------
# benchmark geometries
# ---------------------------------------------------------------------------

def _square_patch(lx: float, ly: float, degree: int, n_u: int, n_v: int) -> SplineSurface:
    kv1 = make_uniform_knots(degree, n_u)
    kv2 = make_uniform_knots(degree, n_v)
    gu = kv1.greville()
    gv = kv2.greville()
    X, Y = np.meshgrid(lx * gu, ly * gv, indexing="xy")
    cp = np.column_stack([X.ravel(), Y.ravel(), np.zeros(X.size)])
    return SplineSurface(kv1, kv2, cp)


def benchmark_geometry(name: str, *, degree: int = 2, elements=(4, 4), **params) -> SplineSurface:
    """Construct one of the benchmark surfaces.

    Names and parameters:
      - ``unit_square``: L, W (m); clamped polynomial patch [0,L]x[0,W].
      - ``square_diag``: L (diagonal, m); the symmetric quarter of a square
        with diagonal L, as used by the inflation benchmark.
      - ``annulus``: R_i, R_o (m); radial (clamped) x angular (periodic,
        exact rational circle) patch in the z=0 plane.
      - ``cylinder``: R, L (m); axis along x, angular direction periodic.
    """
    try:
        n_u, n_v = (int(elements[0]), int(elements[1]))
    except TypeError:
        n_u = n_v = int(elements)
    if degree < 1:
        raise InvalidArgumentError("degree must be >= 1")

    if name == "unit_square":
        L = float(params.get("L", 1.0))
        W = float(params.get("W", 1.0))
        if L <= 0 or W <= 0:
            raise InvalidArgumentError("square dimensions must be positive")
        return _square_patch(L, W, degree, n_u, n_v)

    if name == "square_diag":
        L = float(params["L"])
        if L <= 0:
            raise InvalidArgumentError("diagonal must be positive")
        edge = np.sqrt(L * L / 2.0)
        return _square_patch(edge / 2.0, edge / 2.0, degree, n_u, n_v)

    if name in ("annulus", "cylinder"):
        if degree < 2:
            raise InvalidArgumentError("circular geometries need degree >= 2")
        kv_ang, H = circle_control_points(degree, n_v)
        w = H[:, 2]
        xy = H[:, :2] / w[:, None]
        kv_ax = make_uniform_knots(degree, n_u)
        g_ax = kv_ax.greville()
        n1, n2 = kv_ax.n_basis, kv_ang.n_basis
        cp = np.zeros((n1 * n2, 3))
        weights = np.zeros(n1 * n2)
        if name == "annulus":
            R_i = float(params["R_i"])
            R_o = float(params["R_o"])
            if R_i <= 0 or R_o <= R_i:
                raise InvalidArgumentError("need 0 < R_i < R_o")
            for j in range(n2):
                for i in range(n1):
                    r = R_i + (R_o - R_i) * g_ax[i]
                    k = i + n1 * j
                    cp[k, :2] = r * xy[j]
                    weights[k] = w[j]
        else:
            R = float(params["R"])
            L = float(params["L"])
            if R <= 0 or L <= 0:
                raise InvalidArgumentError("need positive R and L")
            for j in range(n2):
                for i in range(n1):
                    k = i + n1 * j
                    cp[k, 0] = L * g_ax[i]
                    cp[k, 1] = R * xy[j, 0]
                    cp[k, 2] = R * xy[j, 1]
                    weights[k] = w[j]
        return SplineSurface(kv_ax, kv_ang, cp, weights)

    raise InvalidArgumentError(f"unknown benchmark geometry {name!r}")


def surface_area(surface: SplineSurface, n_gauss: int | None = None) -> float:
    """Area by per-element Gauss quadrature of the surface measure."""
    if n_gauss is None:
        n_gauss = max(surface.degrees) + 1
    rule = QuadratureRule.gauss(n_gauss)
    total = 0.0
    for lo_u, hi_u, lo_v, hi_v in surface.elements():
        pts, wts = rule.on_element(lo_u, hi_u, lo_v, hi_v)
        for (u, v), w in zip(pts, wts):
            _, dx = surface.point((u, v), order=1)
            total += w * np.linalg.norm(np.cross(dx[0], dx[1]))
    return total


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def save_surface(surface: SplineSurface, path) -> None:
    """Write a surface to a human-readable key-value text file."""
    with open(path, "w") as f:
        f.write("format tftmembrane-surface 1\n")
        for tag, kv in (("u", surface.kv1), ("v", surface.kv2)):
            f.write(f"degree_{tag} {kv.degree}\n")
            f.write(f"periodic_{tag} {int(kv.periodic)}\n")
            f.write(f"knots_{tag} " + " ".join(f"{float(k)!r}" for k in kv.knots) + "\n")
        f.write(f"n_control_points {surface.n_cp}\n")
        f.write(f"rational {int(surface.weights is not None)}\n")
        for k in range(surface.n_cp):
            x, y, z = (float(v) for v in surface.control_points[k])
            if surface.weights is None:
                f.write(f"cp {x!r} {y!r} {z!r}\n")
            else:
                f.write(f"cp {x!r} {y!r} {z!r} {float(surface.weights[k])!r}\n")


def load_surface(path) -> SplineSurface:
    fields = {}
    cps = []
    with open(path) as f:
        header = f.readline().split()
        if header[:2] != ["format", "tftmembrane-surface"]:
            raise InvalidArgumentError("not a surface file")
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "cp":
                cps.append([float(t) for t in parts[1:]])
            else:
                fields[parts[0]] = parts[1:]
    kv1 = KnotVector(int(fields["degree_u"][0]),
                     np.array([float(t) for t in fields["knots_u"]]),
                     periodic=bool(int(fields["periodic_u"][0])))
    kv2 = KnotVector(int(fields["degree_v"][0]),
                     np.array([float(t) for t in fields["knots_v"]]),
                     periodic=bool(int(fields["periodic_v"][0])))
    cps = np.asarray(cps)
    rational = bool(int(fields["rational"][0]))
    weights = cps[:, 3] if rational else None
    return SplineSurface(kv1, kv2, cps[:, :3], weights)
