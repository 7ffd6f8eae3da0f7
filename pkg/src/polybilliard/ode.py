"""Integrability conditions as residuals, and the profile ODE integrator.

Each residual vanishes exactly on the tables that carry the matching
integral; away from them it measures how far a table is from integrable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BranchLoss, ChartMismatch, Degenerate, SingularParametrizationPoint
from .geom import Curve, SkewMatrix, SurfacePatch

SINGULAR_GUARD = 1e-6
DISC_STOP = 1e-12


def ode_residual_f(a, b, c, t, f, fp):
    """Left-hand side of the profile ODE ``F(t, f, f') = 0``."""
    return (b + 4 * (a * t - c) * fp - 4 * a * f * f * fp - 4 * b * t * fp * fp
            - f * (2 * a - 4 * b * fp - 8 * a * t * fp * fp))


def slope_quadratic(a, b, c, t, f) -> tuple:
    """Coefficients ``(A, B, C)`` of ``A f'^2 + B f' + C`` equal to the ODE residual."""
    return (4 * t * (2 * a * f - b),
            4 * (a * t - c) - 4 * a * f * f + 4 * b * f,
            b - 2 * a * f)


# ---------------------------------------------------------------------------
# planar systems


def _pair(gamma, gdot):
    g = np.asarray(gamma, dtype=float)
    d = np.asarray(gdot, dtype=float)
    return g[..., 0], g[..., 1], d[..., 0], d[..., 1]


def residual_circle(gamma, gdot, a: float, b: float):
    """``a g2' - g2' g2 - b g1' - g1' g1``; zero on circles centred at ``(-b, a)``."""
    g1, g2, d1, d2 = _pair(gamma, gdot)
    return a * d2 - d2 * g2 - b * d1 - d1 * g1


def circle_system(gamma, gdot, a: float, b: float) -> tuple:
    """Both equations of the circle system with the multiplier ``h`` fitted
    by least squares; returns ``(h, residual_vector)``."""
    g1, g2, d1, d2 = (float(z) for z in _pair(gamma, gdot))
    rhs = np.array([a - g2, b + g1])
    col = np.array([d1, d2])
    h = float(col @ rhs) / float(col @ col)
    return h, rhs - h * col


def _guard(d1, d2):
    prod = d1 * d2
    if np.any(np.abs(prod) <= SINGULAR_GUARD):
        raise SingularParametrizationPoint("gamma1' gamma2' vanishes; residual undefined")
    return prod


def residual_parabola(gamma, gdot, lam: float):
    g1, g2, d1, d2 = _pair(gamma, gdot)
    prod = _guard(d1, d2)
    return lam - g1 + g2 / (2 * prod) * (d1 * d1 - d2 * d2)


def residual_conic(gamma, gdot, lam: float):
    g1, g2, d1, d2 = _pair(gamma, gdot)
    prod = _guard(d1, d2)
    return lam - g1 * g1 + g2 * g2 + g1 * g2 / prod * (d1 * d1 - d2 * d2)


def residual_planar(kind: str, gamma, gdot, **params):
    if kind == "circle":
        return residual_circle(gamma, gdot, params.get("a", 0.0), params.get("b", 0.0))
    if kind == "parabola":
        return residual_parabola(gamma, gdot, params["lam"])
    if kind in ("conic", "ellipse", "hyperbola"):
        return residual_conic(gamma, gdot, params["lam"])
    raise ValueError(f"unknown planar residual kind {kind!r}")


def planar_table_residual(table, t):
    """The residual system belonging to ``table`` along its own curve."""
    g, d = table.curve.eval(t), table.curve.deriv(t)
    if table.kind == "circle":
        return residual_circle(g, d, table.a, table.b)
    if table.kind == "parabola":
        return residual_parabola(g, d, table.lam)
    return residual_conic(g, d, table.lam)


# ---------------------------------------------------------------------------
# wires and surfaces


def residual_wire_linear(A: SkewMatrix, b, curve: Curve, t):
    """``gamma'(t) - A gamma(t) - b``."""
    g = np.asarray(curve.eval(t), dtype=float)
    d = np.asarray(curve.deriv(t), dtype=float)
    out = d - g @ A.dense().T
    if b is not None:
        out = out - np.asarray(b, dtype=float)
    return out


def residual_axial_surface(alpha: float, beta: float, patch: SurfacePatch, u1: float, u2: float,
                           check_chart: bool = True) -> float:
    """``beta - alpha u1 r3_u2 + alpha u2 r3_u1`` for a graph chart."""
    if check_chart:
        r = patch.eval(u1, u2)
        if not patch.graph or abs(r[0] - u1) > 1e-12 or abs(r[1] - u2) > 1e-12:
            raise ChartMismatch("patch is not a graph over (u1, u2)")
    ru1, ru2 = patch.partials(u1, u2)
    return float(beta - alpha * u1 * ru2[2] + alpha * u2 * ru1[2])


# ---------------------------------------------------------------------------
# profile ODE


@dataclass(frozen=True)
class ImplicitODEProblem:
    """``F(t, f, f') = 0`` solved for ``f'`` on a chosen branch.

    ``branch`` is the sign of ``f'`` at ``t0``; when both roots share that
    sign the smaller in magnitude is taken.
    """

    a: float
    b: float
    c: float
    t0: float
    f0: float
    t_end: float
    h: float
    branch: int = 1


@dataclass
class ProfileSolution:
    t: np.ndarray
    f: np.ndarray
    fp: np.ndarray
    flag: str = "completed"


def slope_roots(a, b, c, t, f) -> list:
    """Finite roots of the quadratic in ``f'``; raises on degeneracy."""
    A, B, C = slope_quadratic(a, b, c, t, f)
    scale = abs(A) + abs(B) + abs(C)
    if abs(A) <= 1e-14 * scale:
        if abs(B) <= 1e-14 * scale:
            raise Degenerate(f"both f'^2 and f' coefficients vanish at t = {t}")
        return [-C / B]
    disc = B * B - 4 * A * C
    if disc < DISC_STOP * max(B * B, 1.0):
        raise BranchLoss(f"discriminant {disc:.3g} at t = {t}")
    q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
    return [q / A, C / q]


def _pick(rs: list, ref: float) -> float:
    return min(rs, key=lambda r: abs(r - ref))


def _branch_sign(a, b, c, t, f, p) -> float:
    """Sign of dF/df' at slope ``p``: which root of the quadratic is followed."""
    A, B, _ = slope_quadratic(a, b, c, t, f)
    return math.copysign(1.0, 2 * A * p + B)


def solve_profile_ode(problem: ImplicitODEProblem) -> ProfileSolution:
    """Classical RK4 on ``f' = root(t, f)`` with branch continuation.

    Each step evaluates all stages on the root nearest the slope at the
    start of the step, so the right-hand side is smooth within a step.
    The followed root keeps the sign of dF/df'; a change of that sign (a
    turning point, where f' blows up) ends the solve with BranchLoss.
    """
    a, b, c = problem.a, problem.b, problem.c
    if a == 0 and b == 0:
        raise Degenerate("a = b = 0: the ODE forces flat profiles")
    if not problem.h > 0:
        raise ValueError("step size must be positive")
    rs = slope_roots(a, b, c, problem.t0, problem.f0)
    signed = [r for r in rs if math.copysign(1, r) == problem.branch]
    if not signed:
        raise BranchLoss(f"no f' root with sign {problem.branch:+d} at t0")
    p = min(signed, key=abs)

    n = max(1, int(round((problem.t_end - problem.t0) / problem.h)))
    h = (problem.t_end - problem.t0) / n
    ts, fs, ps = [problem.t0], [problem.f0], [p]
    t, f = problem.t0, problem.f0

    branch = _branch_sign(a, b, c, problem.t0, problem.f0, p)

    def slope(tt, ff, ref):
        r = _pick(slope_roots(a, b, c, tt, ff), ref)
        # past a turning point the nearest root belongs to the other branch
        if _branch_sign(a, b, c, tt, ff, r) != branch:
            raise BranchLoss(f"slope root switched branch near t = {tt}")
        return r

    try:
        for i in range(n):
            k1 = slope(t, f, p)
            k2 = slope(t + h / 2, f + h / 2 * k1, k1)
            k3 = slope(t + h / 2, f + h / 2 * k2, k2)
            k4 = slope(t + h, f + h * k3, k3)
            f = f + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t = problem.t0 + (i + 1) * h
            p = slope(t, f, k4)
            if not (math.isfinite(f) and math.isfinite(p)):
                raise BranchLoss(f"solution left the real branch at t = {t}")
            ts.append(t)
            fs.append(f)
            ps.append(p)
    except BranchLoss as exc:
        sol = ProfileSolution(np.array(ts), np.array(fs), np.array(ps), "BranchLoss")
        raise BranchLoss(str(exc), sol) from None
    return ProfileSolution(np.array(ts), np.array(fs), np.array(ps))
