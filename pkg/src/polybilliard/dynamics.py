"""Reflection laws and orbit propagation.

Three step operations share one contract: given the state after the last
impact, return the state after the next one or raise a
:class:`~polybilliard.errors.Termination`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import roots
from .errors import (AmbiguousBranch, BilliardError, DegenerateChord, EdgeImpact,
                     NoIntersection, NoReflection, TangentialImpact, Termination)
from .geom import surface_normal, unit_tangent
from .tables import (ArctanSurface, PiecewiseSurfaceTable, PlanarTable, SurfaceTable,
                     WireTable)

RAY_EPS = 1e-9
EDGE_DELTA = 1e-7
TANGENT_TOL = 1e-10
OPEN_WINDOW = 4.0 * math.pi
CHORD_EPS = 1e-14
SURFACE_RAY_MAX = 10.0


class BranchPolicy(str, enum.Enum):
    FORWARD = "forward"
    NEAREST = "nearest"


@dataclass(frozen=True)
class PhaseState:
    x: np.ndarray
    v: np.ndarray
    hint: Optional[tuple] = None

    @classmethod
    def make(cls, x, v, normalize: bool = False, hint=None) -> "PhaseState":
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if x.shape != v.shape or x.ndim != 1:
            raise ValueError(f"x and v must be vectors of equal length, got {x.shape}, {v.shape}")
        nv = float(np.linalg.norm(v))
        if normalize:
            if nv == 0:
                raise ValueError("zero velocity")
            v = v / nv
        elif abs(nv - 1.0) > 1e-12:
            raise ValueError(f"|v| = {nv!r}, expected unit speed")
        return cls(x, v, hint)


@dataclass(frozen=True)
class WireChord:
    """Chord from ``gamma(s)`` to ``gamma(t)``."""

    s: float
    t: float


@dataclass
class Orbit:
    kind: str
    states: list = field(default_factory=list)
    params: list = field(default_factory=list)
    flag: str = "completed"
    message: str = ""
    chords: Optional[list] = None

    @property
    def n_impacts(self) -> int:
        return max(len(self.states) - 1, 0)

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.x for s in self.states])

    @property
    def velocities(self) -> np.ndarray:
        return np.array([s.v for s in self.states])


def reflect(v: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Mirror ``v`` in the plane orthogonal to the unit vector ``n``."""
    return v - 2.0 * float(v @ n) * n


def _reflect_at(v, n):
    vn = float(v @ n)
    if abs(vn) < TANGENT_TOL:
        raise TangentialImpact(f"|v.n| = {abs(vn):.3g}")
    return v - 2.0 * vn * n


# ---------------------------------------------------------------------------
# planar


def planar_step(table: PlanarTable, state: PhaseState, eps: float = RAY_EPS) -> PhaseState:
    lam = table.intersect(state.x, state.v, eps)
    if lam is None:
        raise NoIntersection("ray leaves the table")
    x = state.x + lam * state.v
    v = _reflect_at(state.v, table.normal(x))
    return PhaseState(x, v, (table.param_of(x),))


# ---------------------------------------------------------------------------
# wires


def _chord_functions(curve, t: float, c: float, tau: np.ndarray, p: np.ndarray):
    def g(sig):
        d = np.asarray(curve.eval(sig)) - p
        nrm = np.linalg.norm(d, axis=-1)
        return (d @ tau) / nrm - c

    def dg(sig):
        d = np.asarray(curve.eval(sig)) - p
        nrm = float(np.linalg.norm(d))
        u = d / nrm
        gd = np.asarray(curve.deriv(sig))
        return float((gd - u * float(u @ gd)) @ tau) / nrm

    return g, dg


def wire_window(table: WireTable) -> float:
    return table.period if table.period else OPEN_WINDOW


def wire_step(table: WireTable, chord: WireChord, policy: BranchPolicy = BranchPolicy.FORWARD,
              eps: float = RAY_EPS, n_scan: int = roots.SCAN_POINTS) -> WireChord:
    """Reflect ``chord`` at ``gamma(chord.t)``: find ``s1`` with equal angles
    ``<u_out, tau> = <u_in, tau>``."""
    curve = table.curve
    s, t = chord.s, chord.t
    p = np.asarray(curve.eval(t), dtype=float)
    q = np.asarray(curve.eval(s), dtype=float)
    d = p - q
    nd = float(np.linalg.norm(d))
    if nd <= CHORD_EPS:
        raise DegenerateChord(f"zero-length chord ({s}, {t})")
    tau = unit_tangent(curve, t)
    c = float((d / nd) @ tau)
    g, dg = _chord_functions(curve, t, c, tau, p)
    period = table.period
    w = wire_window(table)
    policy = BranchPolicy(policy)

    hi = t + w - eps if period else t + w
    fwd = roots.scan_brackets(g, t + eps, hi, n_scan)
    if policy is BranchPolicy.FORWARD:
        if not fwd:
            raise NoReflection(f"no equal-angle chord in [t, t + {w:.4g}]")
        s1 = roots.refine(g, fwd[0], dg)
    else:
        cands = list(fwd)
        if not period:
            cands += roots.scan_brackets(g, t - w, t - eps, n_scan)

        def dist(x):
            return min(x - t, t + period - x) if period else abs(x - t)

        def same_point(x):
            if period:
                r = (x - s) % period
                return min(r, period - r) < eps
            return abs(x - s) < eps

        scored = sorted((dist(0.5 * (br[0] + br[1])), br) for br in cands)
        if not scored:
            raise NoReflection("no equal-angle chord in either direction")
        found = []
        for _, br in scored[:3]:
            x = roots.refine(g, br, dg)
            if not same_point(x):
                found.append((dist(x), x))
        if not found:
            raise NoReflection("only the incoming branch satisfies the angle condition")
        found.sort()
        if len(found) > 1 and abs(found[1][0] - found[0][0]) < 1e-12 and abs(found[1][1] - found[0][1]) > 1e-12:
            raise AmbiguousBranch(f"roots {found[0][1]} and {found[1][1]} are equally near")
        s1 = found[0][1]
    if period:
        s1 = math.fmod(s1, period)
        if s1 < 0:
            s1 += period
    return WireChord(t, s1)


def chord_state(table: WireTable, chord: WireChord) -> PhaseState:
    p = np.asarray(table.curve.eval(chord.s), dtype=float)
    d = np.asarray(table.curve.eval(chord.t), dtype=float) - p
    nrm = float(np.linalg.norm(d))
    if nrm <= CHORD_EPS:
        raise DegenerateChord(f"zero-length chord ({chord.s}, {chord.t})")
    return PhaseState(p, d / nrm, (chord.s, chord.t))


def equal_angle_residual(table: WireTable, prev: WireChord, nxt: WireChord) -> float:
    """``<u_out, tau> - <u_in, tau>`` at the shared endpoint."""
    tau = unit_tangent(table.curve, prev.t)
    return float(chord_state(table, nxt).v @ tau - chord_state(table, prev).v @ tau)


# ---------------------------------------------------------------------------
# surfaces


def _piecewise_hit(table: PiecewiseSurfaceTable, x, v, eps):
    best = None
    for idx, patch in enumerate(table.patches):
        for lam in patch.ray_roots(x, v):
            if lam > eps and (best is None or lam < best[0]):
                if patch.valid(x + lam * v):
                    best = (lam, idx)
                    break
    return best


def _arctan_hit(table: ArctanSurface, x, v, eps, lam_max=SURFACE_RAY_MAX):
    hi = lam_max
    if v[1] < 0:
        # stay inside the chart y > y_min
        hi = min(hi, (table.y_min - x[1]) / v[1])
    if hi <= eps:
        return None

    def fn(lam):
        lam = np.asarray(lam, dtype=float)
        return table.phi(x + lam[..., None] * v)

    def dfn(lam):
        p = x + lam * v
        ru1, ru2 = table.patch.partials(p[0], p[1])
        return v[2] - ru1[2] * v[0] - ru2[2] * v[1]

    return roots.first_root(fn, eps, hi, dfn)


def surface_step(table: SurfaceTable, state: PhaseState, eps: float = RAY_EPS,
                 edge_delta: float = EDGE_DELTA) -> PhaseState:
    x, v = state.x, state.v
    if isinstance(table, PiecewiseSurfaceTable):
        hit = _piecewise_hit(table, x, v, eps)
        if hit is None:
            raise NoIntersection("ray leaves the table")
        lam, idx = hit
        p = x + lam * v
        if table.edge_distance(p) < edge_delta:
            raise EdgeImpact(f"impact within {edge_delta:g} of an edge circle")
        g = table.patches[idx].grad(p)
        n = g / np.linalg.norm(g)
        return PhaseState(p, _reflect_at(v, n), (idx, float(p[0]), float(p[1])))
    if isinstance(table, ArctanSurface):
        lam = _arctan_hit(table, x, v, eps)
        if lam is None:
            raise NoIntersection("ray does not meet the surface inside the chart")
        p = x + lam * v
        n = surface_normal(table.patch, p[0], p[1])
        return PhaseState(p, _reflect_at(v, n), (0, float(p[0]), float(p[1])))
    raise TypeError(f"not a surface table: {type(table).__name__}")


# ---------------------------------------------------------------------------
# propagation


def table_class(table) -> str:
    if isinstance(table, PlanarTable):
        return "planar"
    if isinstance(table, WireTable):
        return "wire"
    if isinstance(table, SurfaceTable):
        return "surface"
    raise TypeError(f"unknown table type {type(table).__name__}")


def state_dim(table) -> int:
    """Length of the position and velocity vectors for ``table``."""
    kind = table_class(table)
    if kind == "planar":
        return 2
    if kind == "surface":
        return 3
    return table.curve.dim


def propagate(table, initial, n_steps: int, policy: BranchPolicy = BranchPolicy.FORWARD) -> Orbit:
    """Apply the table's step up to ``n_steps`` times.

    ``initial`` is a :class:`PhaseState` (planar and surface tables) or a
    :class:`WireChord`.  Step failures end the orbit and set ``flag``.
    """
    kind = table_class(table)
    orbit = Orbit(kind)
    if kind == "wire":
        chord = initial if isinstance(initial, WireChord) else WireChord(*initial)
        orbit.chords = [chord]
        try:
            st = chord_state(table, chord)
        except Termination as exc:
            orbit.flag, orbit.message = exc.flag, str(exc)
            return orbit
        orbit.states.append(st)
        orbit.params.append((chord.s, chord.t))
        for _ in range(n_steps):
            try:
                chord = wire_step(table, chord, policy)
                st = chord_state(table, chord)
            except Termination as exc:
                orbit.flag, orbit.message = exc.flag, str(exc)
                break
            except BilliardError as exc:
                orbit.flag, orbit.message = type(exc).__name__, str(exc)
                break
            orbit.chords.append(chord)
            orbit.states.append(st)
            orbit.params.append((chord.s, chord.t))
        return orbit

    if kind == "planar":
        step = planar_step
        blank = (math.nan,)
    else:
        step = surface_step
        blank = (math.nan, math.nan)
    state = initial
    orbit.states.append(state)
    orbit.params.append(blank if state.hint is None else tuple(state.hint[-len(blank):]))
    for _ in range(n_steps):
        try:
            state = step(table, state)
        except Termination as exc:
            orbit.flag, orbit.message = exc.flag, str(exc)
            break
        except BilliardError as exc:
            orbit.flag, orbit.message = type(exc).__name__, str(exc)
            break
        orbit.states.append(state)
        orbit.params.append(tuple(state.hint[-len(blank):]))
    return orbit


def initial_condition(table, rng):
    """A seeded random start valid for ``table``."""
    if isinstance(table, WireTable):
        return WireChord(*table.sample_chord(rng))
    x, v = table.sample_state(rng)
    return PhaseState.make(x, v, normalize=True)
