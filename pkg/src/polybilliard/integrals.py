"""First integrals polynomial in the velocity, and conservation audits.

Every integral is a callable ``F(x, v)`` that broadcasts over leading axes,
so an audit evaluates whole orbits at once.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateChord, DimensionMismatch
from .geom import SkewMatrix, SurfacePatch

log = logging.getLogger(__name__)

REL_FLOOR = 1e-3


def _fmt(x: float) -> str:
    return repr(float(x)) if x != int(x) else str(int(x))


def angular_momenta(x, v) -> np.ndarray:
    """Antisymmetric matrix ``M_ij = v_j x_i - v_i x_j``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.einsum("...i,...j->...ij", x, v) - np.einsum("...i,...j->...ij", v, x)


def axial_momenta(x, v) -> np.ndarray:
    """``(M1, M2, M3)`` in R^3, i.e. ``x cross v``."""
    return np.cross(np.asarray(x, dtype=float), np.asarray(v, dtype=float))


class IntegralSpec:
    """Base class; subclasses define ``dim``, ``label`` and ``_eval``."""

    dim: Optional[int] = None

    @property
    def label(self) -> str:
        raise NotImplementedError

    def __call__(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if x.shape != v.shape:
            raise DimensionMismatch(f"x has shape {x.shape}, v has shape {v.shape}")
        if self.dim is not None and x.shape[-1] != self.dim:
            raise DimensionMismatch(f"{self.label} needs n = {self.dim}, got n = {x.shape[-1]}")
        return self._eval(x, v)

    def _eval(self, x, v):
        raise NotImplementedError


@dataclass(frozen=True)
class LinearMomentum(IntegralSpec):
    """``F = <x, A v> + <b, v>`` for skew ``A``."""

    A: SkewMatrix
    b: Optional[tuple] = None

    @property
    def dim(self):
        return self.A.n

    @property
    def label(self):
        up = " ".join(_fmt(a) for a in self.A.upper)
        s = f"momentum(n={self.A.n},upper={up}"
        if self.b is not None and any(self.b):
            s += ",b=" + " ".join(_fmt(a) for a in self.b)
        return s + ")"

    def _eval(self, x, v):
        a = self.A.dense()
        out = np.einsum("...i,ij,...j->...", x, a, v)
        if self.b is not None:
            out = out + v @ np.asarray(self.b, dtype=float)
        return out

    def explicit_sum(self, x, v) -> float:
        """``sum_{i<j} a_ij (v_j x_i - v_i x_j) + <b, v>`` term by term."""
        a = self.A.dense()
        total = 0.0
        for i in range(self.A.n):
            for j in range(i + 1, self.A.n):
                total += a[i, j] * (v[j] * x[i] - v[i] * x[j])
        if self.b is not None:
            total += sum(bi * vi for bi, vi in zip(self.b, v))
        return total


@dataclass(frozen=True)
class PlanarDeg1(IntegralSpec):
    """``F = x v2 - y v1 + a v1 + b v2`` (circle integral)."""

    a: float = 0.0
    b: float = 0.0
    dim = 2

    @property
    def label(self):
        if self.a == 0 and self.b == 0:
            return "M"
        return f"planar_deg1(a={_fmt(self.a)},b={_fmt(self.b)})"

    def _eval(self, x, v):
        x1, x2, v1, v2 = x[..., 0], x[..., 1], v[..., 0], v[..., 1]
        return x1 * v2 - x2 * v1 + self.a * v1 + self.b * v2


@dataclass(frozen=True)
class ParabolaIntegral(IntegralSpec):
    """``F = M v2 + lam v1^2`` with ``M = x v2 - y v1``."""

    lam: float
    dim = 2

    @property
    def label(self):
        return f"parabola(lambda={_fmt(self.lam)})"

    def _eval(self, x, v):
        m = x[..., 0] * v[..., 1] - x[..., 1] * v[..., 0]
        return m * v[..., 1] + self.lam * v[..., 0] ** 2


@dataclass(frozen=True)
class ConicIntegral(IntegralSpec):
    """``F = M^2 + lam v1^2`` (ellipse and hyperbola)."""

    lam: float
    dim = 2

    @property
    def label(self):
        return f"conic(lambda={_fmt(self.lam)})"

    def _eval(self, x, v):
        m = x[..., 0] * v[..., 1] - x[..., 1] * v[..., 0]
        return m * m + self.lam * v[..., 0] ** 2


@dataclass(frozen=True)
class AxialDeg1(IntegralSpec):
    """``F = alpha M3 + beta v3``."""

    alpha: float = 1.0
    beta: float = 0.0
    dim = 3

    @property
    def label(self):
        if self.alpha == 1 and self.beta == 0:
            return "M3"
        return f"axial(alpha={_fmt(self.alpha)},beta={_fmt(self.beta)})"

    def _eval(self, x, v):
        m3 = x[..., 0] * v[..., 1] - x[..., 1] * v[..., 0]
        return self.alpha * m3 + self.beta * v[..., 2]


@dataclass(frozen=True)
class Degree2Axial(IntegralSpec):
    """``F2 = a (M1^2 + M2^2) + b (M1 v2 - M2 v1) + c (v1^2 + v2^2)``."""

    a: float
    b: float
    c: float
    dim = 3

    @property
    def label(self):
        return f"F2(a={_fmt(self.a)},b={_fmt(self.b)},c={_fmt(self.c)})"

    def _eval(self, x, v):
        m = np.cross(x, v)
        m1, m2 = m[..., 0], m[..., 1]
        v1, v2 = v[..., 0], v[..., 1]
        return (self.a * (m1 * m1 + m2 * m2) + self.b * (m1 * v2 - m2 * v1)
                + self.c * (v1 * v1 + v2 * v2))


def eval_integral(spec: IntegralSpec, state) -> float:
    return float(spec(state.x, state.v))


def tangential_data(patch: SurfacePatch, u1: float, u2: float, v) -> tuple:
    """``(S1, S2) = ((v, r_u1), (v, r_u2))``."""
    ru1, ru2 = patch.partials(u1, u2)
    v = np.asarray(v, dtype=float)
    return float(v @ ru1), float(v @ ru2)


def axial_multipliers(patch: SurfacePatch, u1: float, u2: float, alpha: float) -> tuple:
    """``(h1, h2)`` with ``alpha M3 + beta v3 = h1 S1 + h2 S2`` on a solution surface."""
    r = patch.eval(u1, u2)
    ru1, ru2 = patch.partials(u1, u2)
    h1 = alpha * (r[0] * ru2[0] + r[1] * ru2[1]) / (ru2[0] * ru1[1] - ru1[0] * ru2[1])
    h2 = alpha * (r[0] * ru1[0] + r[1] * ru1[1]) / (ru1[0] * ru2[1] - ru2[0] * ru1[1])
    return float(h1), float(h2)


def degree2_multipliers(a: float, b: float, c: float, t, f, fp) -> dict:
    """Multipliers in ``F2 = h11 S1^2 + h12 S1 S2 + h22 S2^2 + h`` on ``z = f(x^2 + y^2)``.

    ``t = u1^2 + u2^2``.  The constant term is ``a t - 4 h11 t f'^2``;
    matching the ``v3^2`` coefficient fixes the square on ``f'``.
    """
    h11 = (b - 2.0 * a * f) / (4.0 * fp)
    h = a * t - 4.0 * h11 * t * fp * fp
    return {"h11": h11, "h12": 0.0 * h11, "h22": h11, "h": h}


def degree2_constraint_residual(a, b, c, t, f, fp, printed: bool = False):
    """Residual of the compatibility relation between ``h11`` and ``f``.

    The consistent form is ``h11 (1 - 4 f'^2 t) = a f^2 - b f + c - a t``,
    which is equivalent to the profile ODE.  ``printed=True`` evaluates the
    variant with ``(a - b) f`` on the right; the two agree only when
    ``a = 0``.
    """
    h11 = (b - 2.0 * a * f) / (4.0 * fp)
    lhs = h11 * (1.0 - 4.0 * fp * fp * t)
    if printed:
        rhs = (a - b) * f + (c - a * t)
    else:
        rhs = a * f * f - b * f + c - a * t
    return lhs - rhs


def check_degree2_constraint(a, b, c, t, f, fp, tol: float = 1e-9) -> bool:
    """Log a consistency warning when the printed relation is violated."""
    r = np.max(np.abs(degree2_constraint_residual(a, b, c, t, f, fp, printed=True)))
    if r > tol:
        log.warning("printed h11 relation violated by %.3g for (a, b, c) = (%g, %g, %g); "
                    "using a f^2 - b f + c - a t", r, a, b, c)
        return False
    return True


@dataclass
class ConservationReport:
    integral: str
    F0: float
    max_abs_drift: float
    max_rel_drift: float
    n_impacts: int
    values: np.ndarray = field(repr=False, default_factory=lambda: np.empty(0))

    def passed(self, threshold: float) -> bool:
        return self.n_impacts > 0 and bool(self.max_rel_drift <= threshold)

    def to_record(self, threshold: Optional[float] = None) -> dict:
        rec = {
            "integral": self.integral,
            "F0": None if not math.isfinite(self.F0) else self.F0,
            "max_abs_drift": self.max_abs_drift,
            "max_rel_drift": self.max_rel_drift,
            "n_impacts": self.n_impacts,
        }
        if threshold is not None:
            rec["threshold"] = threshold
            rec["pass"] = self.passed(threshold)
        return rec


def audit_series(xs: np.ndarray, vs: np.ndarray, spec: IntegralSpec) -> np.ndarray:
    """Integral values along an orbit given its post-impact states.

    Order: initial state, then per impact the previous segment's midpoint,
    the incoming state and the outgoing state.
    """
    xs = np.asarray(xs, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if len(xs) == 0:
        return np.empty(0)
    f0 = np.atleast_1d(spec(xs[0], vs[0]))
    if len(xs) == 1:
        return f0
    mid = spec(0.5 * (xs[:-1] + xs[1:]), vs[:-1])
    inc = spec(xs[1:], vs[:-1])
    out = spec(xs[1:], vs[1:])
    return np.concatenate([f0, np.stack([mid, inc, out], axis=1).ravel()])


def report_from_series(label: str, values: np.ndarray, n_impacts: int) -> ConservationReport:
    if values.size == 0:
        return ConservationReport(label, math.nan, 0.0, 0.0, 0, values)
    f0 = float(values[0])
    dev = np.abs(values - f0)
    max_abs = float(np.max(dev))
    return ConservationReport(label, f0, max_abs, max_abs / max(abs(f0), REL_FLOOR),
                              n_impacts, values)


def audit_states(xs, vs, specs: Sequence[IntegralSpec]) -> list:
    n_impacts = max(len(xs) - 1, 0)
    return [report_from_series(s.label, audit_series(xs, vs, s), n_impacts) for s in specs]


def audit_orbit(orbit, specs: Sequence[IntegralSpec]) -> list:
    """Conservation reports for each integral along ``orbit``."""
    if not orbit.states:
        return [report_from_series(s.label, np.empty(0), 0) for s in specs]
    xs = np.array([st.x for st in orbit.states])
    vs = np.array([st.v for st in orbit.states])
    return audit_states(xs, vs, specs)


def wire_chord_integral(table, chord, spec: IntegralSpec, at_end: bool = False) -> float:
    """Integral of the chord ``gamma(s) -> gamma(t)`` evaluated at its start
    (or at its end with ``at_end=True``)."""
    p = np.asarray(table.curve.eval(chord.s))
    q = np.asarray(table.curve.eval(chord.t))
    d = q - p
    nrm = float(np.linalg.norm(d))
    if nrm <= 1e-14:
        raise DegenerateChord(f"zero-length chord ({chord.s}, {chord.t})")
    return float(spec(q if at_end else p, d / nrm))
