"""Static SVG figures of table profiles and orbits.

Canvas is 600 x 600 pt with fixed line widths; the SVG hash salt and
metadata are pinned so identical inputs give identical bytes.  Curves carry
``gid`` attributes (``arc-*``, ``outline``, ``orbit``) for inspection.
"""
from __future__ import annotations

import io as _io
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import atomic_write  # noqa: E402
from .tables import (ArctanSurface, PiecewiseSurfaceTable, PlanarTable,  # noqa: E402
                     WireTable, tetragon_corner)

CANVAS_PT = 600
BOUNDARY_LW = 2.0
ORBIT_LW = 0.6
BACKGROUND_LW = 0.5

_RC = {
    "svg.hashsalt": "polybilliard",
    "svg.fonttype": "path",
    "font.size": 11,
    "axes.linewidth": 0.8,
    "path.simplify": False,
}


def _figure():
    fig = plt.figure(figsize=(CANVAS_PT / 72, CANVAS_PT / 72), dpi=72)
    ax = fig.add_axes([0.1, 0.1, 0.85, 0.85])
    return fig, ax


def render_svg(fig) -> bytes:
    buf = _io.BytesIO()
    with matplotlib.rc_context(_RC):
        fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


def save_svg(fig, path) -> None:
    atomic_write(path, render_svg(fig))


# ---------------------------------------------------------------------------
# profile data


def lens_profile_curves(table: PiecewiseSurfaceTable, n: int = 200) -> dict:
    """Generating arcs of the lens in the ``(R, z)`` half-plane."""
    R = np.linspace(0.0, table.r_edge, n)
    out = {}
    for patch in table.patches:
        f, _ = patch.profile.eval(R * R)
        out[patch.name] = (R, np.asarray(f))
    return out


def tetragon_profile_curves(table: PiecewiseSurfaceTable, n: int = 200) -> dict:
    """The four sides of the tetragon, each traced between its corners in
    confocal coordinates."""
    (se1, se2), (sh1, sh2) = table.s_ranges
    D, z0, sig = table.D, table.z0, table.sigma
    out = {}

    def trace(se, sh):
        R2, Z2 = tetragon_corner(se, sh, D)
        return np.sqrt(R2), z0 + sig * np.sqrt(Z2)

    sh = np.linspace(sh1, sh2, n)
    se = np.linspace(se1, se2, n)
    out["ellipse_inner"] = trace(np.full(n, se1), sh)
    out["ellipse_outer"] = trace(np.full(n, se2), sh)
    out["hyperbola_lower"] = trace(se, np.full(n, sh1))
    out["hyperbola_upper"] = trace(se, np.full(n, sh2))
    return out


def _full_conic(s, D, z0, n=400, extent=3.0):
    if s > 0 and s + D > 0:
        th = np.linspace(-math.pi / 2, math.pi / 2, n)
        return math.sqrt(s + D) * np.cos(th), z0 + math.sqrt(s) * np.sin(th)
    if s < 0 < s + D:
        u = np.linspace(-extent, extent, n)
        return math.sqrt(s + D) * np.cosh(u), z0 + math.sqrt(-s) * np.sinh(u)
    return None


# ---------------------------------------------------------------------------
# figures


def lens_profile_figure(table: PiecewiseSurfaceTable):
    fig, ax = _figure()
    for name, (R, z) in lens_profile_curves(table).items():
        ax.plot(R, z, color="black", lw=BOUNDARY_LW, gid=f"arc-{name}")
    b, c = table.abc[1], table.abc[2]
    ax.plot([0], [c / b], marker="o", ms=4, color="gray", gid="focus")
    ax.plot([table.r_edge], [table.z_edge], marker="o", ms=4, color="black", gid="edge")
    ax.set_xlabel("R")
    ax.set_ylabel("z")
    ax.set_aspect("equal", adjustable="datalim")
    return fig


def tetragon_profile_figure(table: PiecewiseSurfaceTable):
    fig, ax = _figure()
    (se1, se2), (sh1, sh2) = table.s_ranges
    for s in (se1, se2, sh1, sh2):
        full = _full_conic(s, table.D, table.z0)
        if full is not None:
            ax.plot(*full, color="0.75", lw=BACKGROUND_LW)
    for name, (R, z) in tetragon_profile_curves(table).items():
        ax.plot(R, z, color="black", lw=BOUNDARY_LW, gid=f"arc-{name}")
    ax.axvline(0.0, color="0.5", lw=BACKGROUND_LW, ls="--", gid="axis")
    ax.set_xlabel("R")
    ax.set_ylabel("z")
    ax.set_aspect("equal", adjustable="datalim")
    return fig


def _planar_outline(table: PlanarTable, pts: np.ndarray):
    curve = table.curve
    if curve.period:
        t = np.linspace(0, curve.period, 721)
    else:
        ps = [table.param_of(p) for p in pts] if len(pts) else [0.0]
        lo, hi = min(ps), max(ps)
        pad = max(1.0, 0.2 * (hi - lo))
        t = np.linspace(lo - pad, hi + pad, 721)
    return np.asarray(curve.eval(t))


def orbit2d_figure(table: PlanarTable, orbit):
    fig, ax = _figure()
    pts = orbit.positions
    out = _planar_outline(table, pts)
    ax.plot(out[:, 0], out[:, 1], color="black", lw=BOUNDARY_LW, gid="outline")
    if len(pts):
        ax.plot(pts[:, 0], pts[:, 1], color="tab:blue", lw=ORBIT_LW, gid="orbit")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    return fig


def orbit3d_projection_figure(table, orbit, axes=(0, 2)):
    """Orbit projected on the plane of coordinates ``axes``; tables of
    revolution are outlined by their mirrored profile."""
    fig, ax = _figure()
    i, j = axes
    pts = orbit.positions
    if isinstance(table, PiecewiseSurfaceTable):
        curves = (lens_profile_curves(table) if table.kind == "parabolic_lens"
                  else tetragon_profile_curves(table))
        for name, (R, z) in curves.items():
            ax.plot(R, z, color="black", lw=BOUNDARY_LW, gid=f"outline-{name}")
            ax.plot(-R, z, color="black", lw=BOUNDARY_LW)
    elif isinstance(table, WireTable):
        t0 = orbit.params[0][0] if orbit.params else 0.0
        span = table.period or max(4 * math.pi, abs(orbit.params[-1][1] - t0) + 1.0)
        g = np.asarray(table.curve.eval(np.linspace(t0 - 0.5, t0 + span, 1441)))
        ax.plot(g[:, i], g[:, j], color="black", lw=BOUNDARY_LW, gid="outline")
    elif isinstance(table, ArctanSurface) and len(pts):
        xs = np.linspace(pts[:, 0].min() - 0.5, pts[:, 0].max() + 0.5, 200)
        y = float(np.mean(pts[:, 1]))
        ax.plot(xs, table.height(xs, y), color="black", lw=BOUNDARY_LW, gid="outline")
    if len(pts):
        ax.plot(pts[:, i], pts[:, j], color="tab:blue", lw=ORBIT_LW, gid="orbit")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel(f"x{i + 1}")
    ax.set_ylabel(f"x{j + 1}")
    return fig
