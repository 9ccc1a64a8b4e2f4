"""Result export: VTK legacy meshes, CSV curves, contour extractions."""

from __future__ import annotations

import csv
import os

import numpy as np

from .splines import SplineSurface
from .wrinkling import TensionState


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def write_curve_csv(path, header, rows) -> None:
    """Comma-separated curve data with a header row."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (int, float, np.floating)) else v
                        for v in row])


def write_history_csv(path, records) -> None:
    """Solver iteration histories: step, stage, iteration, |R|, E_kin, event."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["step", "stage", "iteration", "residual_norm",
                    "kinetic_energy", "event"])
        for rec in records:
            for stage, rep in (("DR", rec.dr_report), ("NR", rec.nr_report)):
                if rep is None:
                    continue
                ke = rep.kinetic_energy
                events = {i: k for k, i in rep.events if isinstance(i, int)}
                for i, r in enumerate(rep.residual_norms):
                    w.writerow([_fmt(rec.s), stage, i, _fmt(r),
                                _fmt(ke[i - 1]) if 0 < i <= len(ke) else "",
                                events.get(i, "")])


def visualization_lattice(surface: SplineSurface, per_element: int = 8):
    """Structured sample lattice: per_element points per element per direction."""
    n_u = max(1, surface.kv1.n_elements * per_element)
    n_v = max(1, surface.kv2.n_elements * per_element)
    u = np.linspace(0.0, 1.0, n_u + 1)
    v = np.linspace(0.0, 1.0, n_v + 1)
    if surface.kv1.periodic:
        u = u[:-1]
    if surface.kv2.periodic:
        v = v[:-1]
    return u, v


def write_vtk(path, surface: SplineSurface, u_dofs, tension_eval=None,
              per_element: int = 8) -> None:
    """Deformed surface as a VTK legacy unstructured grid of quads.

    Point data: displacement vectors.  Cell data (evaluated at cell centres
    via ``tension_eval``): tension state code (0 slack, 1 wrinkled, 2 taut),
    wrinkle angle and amplitude.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    U = np.asarray(u_dofs, dtype=float).reshape(-1, 3)
    gu, gv = visualization_lattice(surface, per_element)
    nu, nv = len(gu), len(gv)
    wrap_u = surface.kv1.periodic
    wrap_v = surface.kv2.periodic

    pts = np.empty((nu * nv, 3))
    disp = np.empty((nu * nv, 3))
    for j, vv in enumerate(gv):
        for i, uu in enumerate(gu):
            idx, vals, _, _ = surface.eval_basis((uu, vv), 0)
            x0 = vals @ surface.control_points[idx]
            du = vals @ U[idx]
            pts[i + nu * j] = x0 + du
            disp[i + nu * j] = du

    cells = []
    ni = nu if wrap_u else nu - 1
    nj = nv if wrap_v else nv - 1
    centers = []
    for j in range(nj):
        jp = (j + 1) % nv
        for i in range(ni):
            ip = (i + 1) % nu
            cells.append((i + nu * j, ip + nu * j, ip + nu * jp, i + nu * jp))
            cu = (gu[i] + (gu[ip] if ip > i else gu[i] + gu[1] - gu[0])) / 2
            cv = (gv[j] + (gv[jp] if jp > j else gv[j] + gv[1] - gv[0])) / 2
            centers.append((cu % 1.0 if wrap_u else cu, cv % 1.0 if wrap_v else cv))

    with open(path, "w") as f:
        f.write("# vtk DataFile Version 2.0\n")
        f.write("tftmembrane deformed surface\n")
        f.write("ASCII\n")
        f.write("DATASET UNSTRUCTURED_GRID\n")
        f.write(f"POINTS {len(pts)} double\n")
        for p in pts:
            f.write(f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        f.write(f"\nCELLS {len(cells)} {5 * len(cells)}\n")
        for c in cells:
            f.write("4 " + " ".join(str(k) for k in c) + "\n")
        f.write(f"\nCELL_TYPES {len(cells)}\n")
        f.write("9\n" * len(cells))
        f.write(f"\nPOINT_DATA {len(pts)}\n")
        f.write("VECTORS displacement double\n")
        for d in disp:
            f.write(f"{_fmt(d[0])} {_fmt(d[1])} {_fmt(d[2])}\n")
        if tension_eval is not None:
            codes, theta, gam = tension_eval(np.asarray(centers))
            f.write(f"\nCELL_DATA {len(cells)}\n")
            f.write("SCALARS tension_state int\nLOOKUP_TABLE default\n")
            for c in codes:
                f.write(f"{int(c)}\n")
            f.write("SCALARS wrinkle_angle double\nLOOKUP_TABLE default\n")
            for t in theta:
                f.write(f"{_fmt(t) if np.isfinite(t) else 0.0}\n")
            f.write("SCALARS wrinkle_amplitude double\nLOOKUP_TABLE default\n")
            for g in gam:
                f.write(f"{_fmt(g) if np.isfinite(g) else 0.0}\n")


def write_tension_snapshot_csv(path, qpoints, field) -> None:
    """Per-quadrature-point tension field: xi1, xi2, state, theta, gamma."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["xi1", "xi2", "state", "theta", "gamma"])
        states = field.states.ravel()
        theta = field.theta.ravel()
        gam = field.gamma.ravel()
        for k in range(len(states)):
            w.writerow([_fmt(qpoints[k, 0]), _fmt(qpoints[k, 1]), int(states[k]),
                        _fmt(theta[k]) if np.isfinite(theta[k]) else "",
                        _fmt(gam[k]) if np.isfinite(gam[k]) else ""])


def write_contour_csv(path, surface: SplineSurface, u_dofs, *, direction: int,
                      value: float, n_samples: int = 257) -> None:
    """Deformed coordinates along a parametric iso-line.

    ``direction=0`` fixes xi1=value and samples xi2 (and vice versa).
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    U = np.asarray(u_dofs, dtype=float).reshape(-1, 3)
    kv = surface.kv2 if direction == 0 else surface.kv1
    ts = np.linspace(0.0, 1.0, n_samples)
    if kv.periodic:
        ts = ts[:-1]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "x", "y", "z"])
        for t in ts:
            xi = (value, t) if direction == 0 else (t, value)
            idx, vals, _, _ = surface.eval_basis(xi, 0)
            x = vals @ (surface.control_points[idx] + U[idx])
            w.writerow([_fmt(t), _fmt(x[0]), _fmt(x[1]), _fmt(x[2])])
