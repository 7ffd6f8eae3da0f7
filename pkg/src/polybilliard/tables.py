"""Catalog of billiard tables with polynomial first integrals.

Planar tables are conics given by an implicit quadratic ``phi(x) = 0`` with
``phi < 0`` inside.  Wire tables are curves in R^n.  Surface tables are the
helicoidal graph ``z = -(beta/alpha) arctan(x/y) + f(x^2 + y^2)`` and two
piecewise tables of revolution glued from confocal quadrics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import integrals as ig
from .errors import AxisTouching, EmptyRegion, OutOfDomain
from .geom import Curve, SkewMatrix, SurfacePatch, as_vec
from .roots import quadratic_roots

TWO_PI = 2.0 * math.pi
DISC_TINY = 1e-14


def _stack(*cols):
    return np.stack(np.broadcast_arrays(*cols), axis=-1).astype(float)


# ---------------------------------------------------------------------------
# planar


class PlanarTable:
    kind = "planar"
    curve: Curve

    def phi(self, x) -> float:
        raise NotImplementedError

    def contains(self, x) -> bool:
        return self.phi(x) < 0.0

    def normal(self, x) -> np.ndarray:
        """Unit normal at a boundary point (either orientation)."""
        raise NotImplementedError

    def intersect(self, x, v, eps: float) -> Optional[float]:
        """Smallest ray parameter ``lam > eps`` at which ``x + lam v`` hits the boundary."""
        raise NotImplementedError

    def param_of(self, x) -> float:
        raise NotImplementedError

    def identity_residual(self, t):
        """Residual of the table's defining algebraic identity along ``curve``."""
        raise NotImplementedError

    def natural_integrals(self) -> list:
        return []

    def params(self) -> dict:
        raise NotImplementedError


class ConicTable(PlanarTable):
    """``phi(x) = q1 x^2 + q2 y^2 + g1 x + g2 y + k``."""

    q: tuple
    g: tuple
    k: float

    def phi(self, x):
        x1, x2 = float(x[0]), float(x[1])
        return (self.q[0] * x1 * x1 + self.q[1] * x2 * x2
                + self.g[0] * x1 + self.g[1] * x2 + self.k)

    def grad(self, x):
        return np.array([2.0 * self.q[0] * x[0] + self.g[0],
                         2.0 * self.q[1] * x[1] + self.g[1]])

    def normal(self, x):
        n = self.grad(x)
        return n / math.hypot(n[0], n[1])

    def on_branch(self, x1: float, x2: float) -> bool:
        return True

    def intersect(self, x, v, eps):
        x1, x2 = float(x[0]), float(x[1])
        v1, v2 = float(v[0]), float(v[1])
        q1, q2 = self.q
        a = q1 * v1 * v1 + q2 * v2 * v2
        b = 2.0 * (q1 * x1 * v1 + q2 * x2 * v2) + self.g[0] * v1 + self.g[1] * v2
        c = q1 * x1 * x1 + q2 * x2 * x2 + self.g[0] * x1 + self.g[1] * x2 + self.k
        if abs(a) < 1e-15 * (abs(b) + abs(c) + 1.0):
            a = 0.0
        for lam in quadratic_roots(a, b, c, DISC_TINY):
            if lam > eps and self.on_branch(x1 + lam * v1, x2 + lam * v2):
                return lam
        return None


class CircleTable(ConicTable):
    """``(x + b)^2 + (y - a)^2 = R^2``, centre ``(-b, a)``."""

    kind = "circle"

    def __init__(self, R: float = 1.0, a: float = 0.0, b: float = 0.0):
        if not R > 0:
            raise ValueError("circle radius must be positive")
        self.R, self.a, self.b = float(R), float(a), float(b)
        self.center = np.array([-self.b, self.a])
        self.q = (1.0, 1.0)
        self.g = (2.0 * self.b, -2.0 * self.a)
        self.k = self.b ** 2 + self.a ** 2 - self.R ** 2
        cx, cy, r = -self.b, self.a, self.R
        self.curve = Curve(
            eval=lambda t: _stack(cx + r * np.cos(t), cy + r * np.sin(t)),
            deriv=lambda t: _stack(-r * np.sin(t), r * np.cos(t)),
            dim=2, period=TWO_PI)

    def param_of(self, x):
        return math.atan2(x[1] - self.a, x[0] + self.b)

    def identity_residual(self, t):
        g = self.curve.eval(t)
        return (g[..., 0] + self.b) ** 2 + (g[..., 1] - self.a) ** 2 - self.R ** 2

    def natural_integrals(self):
        return [ig.PlanarDeg1(self.a, self.b)]

    def params(self):
        return {"R": self.R, "a": self.a, "b": self.b}

    def sample_state(self, rng):
        while True:
            p = rng.uniform(-1, 1, 2)
            if p @ p < 0.9:
                break
        th = rng.uniform(0, TWO_PI)
        return self.center + self.R * p, np.array([math.cos(th), math.sin(th)])


class _ConfocalCentral(ConicTable):
    """``x^2 / a2 + y^2 / (a2 - lam) = 1``."""

    def __init__(self, a2: float, lam: float):
        self.a2, self.lam = float(a2), float(lam)
        self.b2 = self.a2 - self.lam
        if not self.a2 > 0:
            raise ValueError("a^2 must be positive")

    def identity_residual(self, t):
        g = self.curve.eval(t)
        return g[..., 0] ** 2 / self.a2 + g[..., 1] ** 2 / self.b2 - 1.0

    def natural_integrals(self):
        return [ig.ConicIntegral(self.lam)]

    def params(self):
        return {"a2": self.a2, "lam": self.lam}


class EllipseTable(_ConfocalCentral):
    kind = "ellipse"

    def __init__(self, a2: float = 2.0, lam: float = 1.0):
        super().__init__(a2, lam)
        if not self.b2 > 0:
            raise ValueError("ellipse needs a2 > lam")
        self.q = (1.0 / self.a2, 1.0 / self.b2)
        self.g = (0.0, 0.0)
        self.k = -1.0
        ra, rb = math.sqrt(self.a2), math.sqrt(self.b2)
        self.curve = Curve(
            eval=lambda t: _stack(ra * np.cos(t), rb * np.sin(t)),
            deriv=lambda t: _stack(-ra * np.sin(t), rb * np.cos(t)),
            dim=2, period=TWO_PI)

    def param_of(self, x):
        return math.atan2(x[1] / math.sqrt(self.b2), x[0] / math.sqrt(self.a2))

    def sample_state(self, rng):
        while True:
            p = rng.uniform(-1, 1, 2)
            if p @ p < 0.9:
                break
        th = rng.uniform(0, TWO_PI)
        return (np.array([p[0] * math.sqrt(self.a2), p[1] * math.sqrt(self.b2)]),
                np.array([math.cos(th), math.sin(th)]))


class HyperbolaTable(_ConfocalCentral):
    """Region inside the right branch (the side holding the focus)."""

    kind = "hyperbola"

    def __init__(self, a2: float = 1.0, lam: float = 2.0):
        super().__init__(a2, lam)
        if not self.b2 < 0:
            raise ValueError("hyperbola needs lam > a2")
        # inside means x^2/a2 + y^2/b2 > 1, so phi is the negated form
        self.q = (-1.0 / self.a2, -1.0 / self.b2)
        self.g = (0.0, 0.0)
        self.k = 1.0
        ra, rb = math.sqrt(self.a2), math.sqrt(-self.b2)
        self.curve = Curve(
            eval=lambda t: _stack(ra * np.cosh(t), rb * np.sinh(t)),
            deriv=lambda t: _stack(ra * np.sinh(t), rb * np.cosh(t)),
            dim=2)

    def on_branch(self, x1, x2):
        return x1 > 0.0

    def contains(self, x):
        return x[0] > 0.0 and self.phi(x) < 0.0

    def param_of(self, x):
        return math.asinh(x[1] / math.sqrt(-self.b2))

    def sample_state(self, rng):
        ra = math.sqrt(self.a2)
        y = rng.uniform(-1, 1)
        xb = ra * math.sqrt(1.0 - y * y / self.b2)
        th = rng.uniform(0, TWO_PI)
        return np.array([xb + rng.uniform(0.05, 1.0), y]), np.array([math.cos(th), math.sin(th)])


class ParabolaTable(ConicTable):
    """``p^2 - 2 p lam + 2 p x = y^2``; the focus sits at ``(lam, 0)``."""

    kind = "parabola"

    def __init__(self, p: float = 1.0, lam: float = 0.0):
        if p == 0:
            raise ValueError("parabola needs p != 0")
        self.p, self.lam = float(p), float(lam)
        self.q = (0.0, 1.0)
        self.g = (-2.0 * self.p, 0.0)
        self.k = 2.0 * self.p * self.lam - self.p ** 2
        pp, c0 = self.p, self.p ** 2 - 2.0 * self.p * self.lam
        self.curve = Curve(
            eval=lambda t: _stack((np.asarray(t) ** 2 - c0) / (2.0 * pp), t),
            deriv=lambda t: _stack(np.asarray(t) / pp, np.ones_like(np.asarray(t, dtype=float))),
            dim=2)

    def param_of(self, x):
        return float(x[1])

    def identity_residual(self, t):
        g = self.curve.eval(t)
        return self.p ** 2 - 2 * self.p * self.lam + 2 * self.p * g[..., 0] - g[..., 1] ** 2

    def natural_integrals(self):
        return [ig.ParabolaIntegral(self.lam)]

    def params(self):
        return {"p": self.p, "lam": self.lam}

    def sample_state(self, rng):
        y = rng.uniform(-1, 1) * abs(self.p)
        xb = (y * y - self.p ** 2 + 2 * self.p * self.lam) / (2 * self.p)
        x = xb + math.copysign(rng.uniform(0.05, 1.0) * abs(self.p), self.p)
        th = rng.uniform(0, TWO_PI)
        return np.array([x, y]), np.array([math.cos(th), math.sin(th)])


class RadialTable(PlanarTable):
    """Star-shaped table ``rho(theta) (cos theta, sin theta)`` with a generic
    (scan-based) ray intersection.  Used for perturbed, non-integrable tables."""

    kind = "radial"

    def __init__(self, rho: Callable, drho: Callable, rmax: float, label: str = "radial"):
        self.rho, self.drho, self.rmax, self.label = rho, drho, float(rmax), label

        def ev(t):
            r = rho(t)
            return _stack(r * np.cos(t), r * np.sin(t))

        def dv(t):
            r, dr = rho(t), drho(t)
            return _stack(dr * np.cos(t) - r * np.sin(t), dr * np.sin(t) + r * np.cos(t))

        self.curve = Curve(eval=ev, deriv=dv, dim=2, period=TWO_PI)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return np.hypot(x[..., 0], x[..., 1]) - self.rho(np.arctan2(x[..., 1], x[..., 0]))

    def contains(self, x):
        return float(self.phi(x)) < 0.0

    def param_of(self, x):
        return math.atan2(x[1], x[0])

    def normal(self, x):
        d = self.curve.deriv(self.param_of(x))
        n = np.array([d[1], -d[0]])
        return n / np.linalg.norm(n)

    def intersect(self, x, v, eps):
        from .roots import first_root
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)

        def fn(lam):
            lam = np.asarray(lam, dtype=float)
            return self.phi(x + lam[..., None] * v)

        return first_root(fn, eps, 2.05 * self.rmax)

    def params(self):
        return {"label": self.label}

    def sample_state(self, rng):
        th = rng.uniform(0, TWO_PI)
        r = float(self.rho(th)) * math.sqrt(rng.uniform(0, 0.8))
        phi = rng.uniform(0, TWO_PI)
        return r * np.array([math.cos(th), math.sin(th)]), np.array([math.cos(phi), math.sin(phi)])


def perturbed_ellipse(a2: float = 2.0, lam: float = 1.0, eps: float = 1e-2, k: int = 3) -> RadialTable:
    """Ellipse ``x^2/a2 + y^2/(a2 - lam) = 1`` with radius scaled by ``1 + eps cos(k theta)``."""
    b2 = a2 - lam

    def rho(t):
        c, s = np.cos(t), np.sin(t)
        return (1 + eps * np.cos(k * t)) / np.sqrt(c * c / a2 + s * s / b2)

    def drho(t):
        c, s = np.cos(t), np.sin(t)
        r0 = 1 / np.sqrt(c * c / a2 + s * s / b2)
        dr0 = r0 ** 3 * s * c * (1 / a2 - 1 / b2)
        return dr0 * (1 + eps * np.cos(k * t)) - r0 * eps * k * np.sin(k * t)

    table = RadialTable(rho, drho, math.sqrt(max(a2, b2)) * (1 + abs(eps)),
                        label=f"perturbed_ellipse(eps={eps},k={k})")
    # compared against the unperturbed confocal integral
    table.lam = lam
    table.natural_integrals = lambda: [ig.ConicIntegral(lam)]
    return table


# ---------------------------------------------------------------------------
# wires


class WireTable:
    kind = "wire"
    curve: Curve
    period: Optional[float] = None
    # linear system gamma' = A gamma + b the wire is expected to satisfy
    A: Optional[SkewMatrix] = None
    b: Optional[np.ndarray] = None

    def natural_integrals(self) -> list:
        return []

    def sample_chord(self, rng):
        s = rng.uniform(0, self.period or TWO_PI)
        return s, s + rng.uniform(0.3, 2.0)


class ExpWire(WireTable):
    """``gamma(t) = exp(A t) gamma0`` with ``A`` skew."""

    kind = "exp_wire"

    def __init__(self, A: SkewMatrix, gamma0, period: Optional[float] = None):
        self.A = A
        self.gamma0 = as_vec(gamma0, A.n)
        self.b = np.zeros(A.n)
        self.period = period
        a = A.dense()
        freqs = A.rotation_blocks()
        g0 = self.gamma0
        if freqs is not None:
            def ev(t):
                t = np.asarray(t, dtype=float)
                cols = []
                for k, w in enumerate(freqs):
                    c, s = np.cos(w * t), np.sin(w * t)
                    x, y = g0[2 * k], g0[2 * k + 1]
                    cols += [c * x - s * y, s * x + c * y]
                if A.n % 2:
                    cols.append(np.full_like(t, g0[-1]))
                return _stack(*cols)
        else:
            lam, vecs = np.linalg.eig(a)
            coef = np.linalg.solve(vecs, g0.astype(complex))

            def ev(t):
                t = np.asarray(t, dtype=float)
                ph = np.exp(np.multiply.outer(t, lam)) * coef
                return np.real(ph @ vecs.T)

        def dv(t):
            return ev(t) @ a.T

        self.curve = Curve(eval=ev, deriv=dv, dim=A.n, period=period)

    def natural_integrals(self):
        return [ig.LinearMomentum(self.A)]

    def params(self):
        return {"n": self.A.n, "upper": self.A.upper.tolist(), "gamma0": self.gamma0.tolist(),
                "period": self.period}


class ToricKnot(ExpWire):
    """``(a e^{ikt}, b e^{imt})`` in C^2 = R^4."""

    kind = "toric_knot"

    def __init__(self, a: float = 1.0, b: float = 1.0, k: int = 2, m: int = 3):
        if not (a > 0 and b > 0):
            raise ValueError("toric knot radii must be positive")
        self.ra, self.rb, self.k, self.m = float(a), float(b), int(k), int(m)
        super().__init__(SkewMatrix.block_rotation(k, m), [a, 0.0, b, 0.0], period=TWO_PI)

    def identity_residual(self, t):
        g = self.curve.eval(t)
        return np.stack([np.hypot(g[..., 0], g[..., 1]) - self.ra,
                         np.hypot(g[..., 2], g[..., 3]) - self.rb], axis=-1)

    def params(self):
        return {"a": self.ra, "b": self.rb, "k": self.k, "m": self.m}


class Spiral(WireTable):
    """Circular helix ``(R sin t, R cos t, a t)``; closed when ``a = 0``."""

    kind = "spiral"

    def __init__(self, R: float = 1.0, a: float = 1.0):
        if not R > 0:
            raise ValueError("spiral radius must be positive")
        self.R, self.a = float(R), float(a)
        r, h = self.R, self.a
        self.curve = Curve(
            eval=lambda t: _stack(r * np.sin(t), r * np.cos(t), h * np.asarray(t, dtype=float)),
            deriv=lambda t: _stack(r * np.cos(t), -r * np.sin(t), h * np.ones_like(np.asarray(t, dtype=float))),
            dim=3, period=TWO_PI if self.a == 0 else None)
        self.period = self.curve.period
        # gamma' = A gamma + b
        self.A = SkewMatrix.from_dense([[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
        self.b = np.array([0.0, 0.0, self.a])

    def natural_integrals(self):
        # y v1 - x v2 + a v3 = <x, A^T v> + <b, v>
        return [ig.LinearMomentum(-self.A, (0.0, 0.0, self.a))]

    def params(self):
        return {"R": self.R, "a": self.a}

    def sample_chord(self, rng):
        s = rng.uniform(0, TWO_PI)
        return s, s + rng.uniform(0.3, 1.5)


class CustomWire(WireTable):
    kind = "custom_wire"

    def __init__(self, curve: Curve, A: Optional[SkewMatrix] = None, b=None, label="custom"):
        self.curve = curve
        self.period = curve.period
        self.A = A
        self.b = None if b is None else np.asarray(b, dtype=float)
        self.label = label

    def natural_integrals(self):
        return [] if self.A is None else [ig.LinearMomentum(self.A, None if self.b is None else tuple(self.b))]


def perturbed_toric_knot(a=1.0, b=1.0, k=2, m=3, eps=0.1) -> CustomWire:
    """Toric knot whose first radius is modulated by ``1 + eps cos t``."""
    A = SkewMatrix.block_rotation(k, m)

    def ev(t):
        t = np.asarray(t, dtype=float)
        r = a * (1 + eps * np.cos(t))
        return _stack(r * np.cos(k * t), r * np.sin(k * t), b * np.cos(m * t), b * np.sin(m * t))

    def dv(t):
        t = np.asarray(t, dtype=float)
        r = a * (1 + eps * np.cos(t))
        dr = -a * eps * np.sin(t)
        return _stack(dr * np.cos(k * t) - k * r * np.sin(k * t),
                      dr * np.sin(k * t) + k * r * np.cos(k * t),
                      -m * b * np.sin(m * t), m * b * np.cos(m * t))

    return CustomWire(Curve(ev, dv, 4, period=TWO_PI), A=A, label=f"perturbed_toric_knot(eps={eps})")


# ---------------------------------------------------------------------------
# profiles of revolution


@dataclass(frozen=True)
class ProfileFamily:
    """Closed-form solutions ``f(t)`` of the profile ODE, ``t = x^2 + y^2``.

    ``a = 0``: ``f = s t + (4 s c - b) / (4 s b)``.
    ``a != 0``: ``(f - b/(2a))^2 + A t - s = 0`` with
    ``A = 4 a^2 s / (4 a^2 s - b^2 + 4 a c)``; ``sigma`` picks the root.
    """

    a: float
    b: float
    c: float
    s: float
    sigma: int = 1

    def __post_init__(self):
        if self.a == 0:
            if self.s == 0 or self.b == 0:
                raise ValueError("linear profile needs s != 0 and b != 0")
        else:
            if 4 * self.a ** 2 * self.s - self.b ** 2 + 4 * self.a * self.c == 0:
                raise ValueError("conic profile needs 4a^2 s - b^2 + 4ac != 0")
            if self.sigma not in (1, -1):
                raise ValueError("sigma must be +1 or -1")

    @property
    def kind(self) -> str:
        return "linear" if self.a == 0 else "conic"

    @property
    def A(self) -> float:
        a, b, c, s = self.a, self.b, self.c, self.s
        return 4 * a * a * s / (4 * a * a * s - b * b + 4 * a * c)

    @property
    def D(self) -> float:
        """Shift with ``s / A = s + D``; ``D = (4ac - b^2) / (4a^2)``."""
        return (4 * self.a * self.c - self.b ** 2) / (4 * self.a ** 2)

    @property
    def z0(self) -> float:
        return self.b / (2 * self.a) if self.a else 0.0

    def eval(self, t):
        """Return ``(f, f')`` at ``t``; broadcasts over arrays."""
        t = np.asarray(t, dtype=float)
        if self.a == 0:
            f = self.s * t + (4 * self.s * self.c - self.b) / (4 * self.s * self.b)
            return f, np.full_like(t, self.s)
        rad = self.s - self.A * t
        if np.any(rad <= 0):
            raise OutOfDomain(f"s - A t <= 0 at t = {t[rad <= 0] if t.ndim else t}")
        r = np.sqrt(rad)
        return self.z0 + self.sigma * r, -self.sigma * self.A / (2 * r)

    def implicit(self, t, f):
        t = np.asarray(t, dtype=float)
        if self.a == 0:
            return f - self.s * t - (4 * self.s * self.c - self.b) / (4 * self.s * self.b)
        return (f - self.z0) ** 2 + self.A * t - self.s

    def t_max(self) -> float:
        """Supremum of the admissible ``t`` (conic family with ``A > 0``)."""
        if self.a == 0 or self.A <= 0:
            return math.inf
        return self.s / self.A

    def patch(self) -> SurfacePatch:
        """Graph ``(u1, u2, f(u1^2 + u2^2))``."""
        def ev(u1, u2):
            f, _ = self.eval(u1 * u1 + u2 * u2)
            return np.array([u1, u2, float(f)])

        def partials(u1, u2):
            _, fp = self.eval(u1 * u1 + u2 * u2)
            fp = float(fp)
            return np.array([1.0, 0.0, 2 * u1 * fp]), np.array([0.0, 1.0, 2 * u2 * fp])

        def contains(u1, u2):
            t = u1 * u1 + u2 * u2
            return self.a == 0 or self.s - self.A * t > 0

        return SurfacePatch(ev, partials, contains, graph=True)


def profile_eval(fam: ProfileFamily, t, sigma: Optional[int] = None):
    if sigma is not None and sigma != fam.sigma:
        fam = ProfileFamily(fam.a, fam.b, fam.c, fam.s, sigma)
    return fam.eval(t)


# ---------------------------------------------------------------------------
# surfaces


class SurfaceTable:
    kind = "surface"

    def natural_integrals(self) -> list:
        return []


class ArctanSurface(SurfaceTable):
    """``z = -(beta/alpha) atan2(x, y) + f(x^2 + y^2)`` over the chart ``y > 0``.

    The billiard side is below the graph.
    """

    kind = "arctan_surface"

    def __init__(self, alpha: float = 1.0, beta: float = 1.0,
                 f: Optional[Callable] = None, fp: Optional[Callable] = None,
                 f_slope: float = 1.0, f_offset: float = 0.0, y_min: float = 1e-6):
        if alpha == 0:
            raise ValueError("alpha must be nonzero")
        self.alpha, self.beta = float(alpha), float(beta)
        self.f_slope, self.f_offset = float(f_slope), float(f_offset)
        if f is None:
            f = lambda t: self.f_slope * t + self.f_offset  # noqa: E731
            fp = lambda t: self.f_slope + 0.0 * t  # noqa: E731
        elif fp is None:
            raise ValueError("f needs its derivative fp")
        self.f, self.fp = f, fp
        self.y_min = y_min
        k = self.beta / self.alpha

        def ev(u1, u2):
            return np.array([u1, u2, self.height(u1, u2)])

        def partials(u1, u2):
            rho2 = u1 * u1 + u2 * u2
            d = fp(rho2)
            return (np.array([1.0, 0.0, -k * u2 / rho2 + 2 * u1 * d]),
                    np.array([0.0, 1.0, k * u1 / rho2 + 2 * u2 * d]))

        self.patch = SurfacePatch(ev, partials, lambda u1, u2: u2 > 0, graph=True)

    def height(self, x, y):
        return -(self.beta / self.alpha) * np.arctan2(x, y) + self.f(x * x + y * y)

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 2] - self.height(x[..., 0], x[..., 1])

    def contains(self, x):
        return x[1] > 0 and self.phi(x) < 0

    def natural_integrals(self):
        return [ig.AxialDeg1(self.alpha, self.beta)]

    def params(self):
        return {"alpha": self.alpha, "beta": self.beta, "f_slope": self.f_slope,
                "f_offset": self.f_offset}

    def sample_state(self, rng):
        """A point below the graph and an upward-leaning direction."""
        x, y = rng.uniform(-1, 1), rng.uniform(0.3, 1.5)
        z = self.height(x, y) - rng.uniform(0.05, 0.5)
        v = rng.normal(size=3)
        v[2] = abs(v[2]) + 0.3
        return np.array([x, y, z]), v / np.linalg.norm(v)


@dataclass(frozen=True)
class QuadricPatch:
    """``phi(x) = cR (x^2 + y^2) + cZ z^2 + dZ z + e``, negative on the billiard side.

    ``valid`` restricts the quadric to the piece used by the table;
    ``corners`` are the ``(R, z)`` edge circles bounding the piece.
    """

    name: str
    cR: float
    cZ: float
    dZ: float
    e: float
    profile: ProfileFamily
    valid: Callable
    corners: tuple

    def phi(self, x):
        x = np.asarray(x, dtype=float)
        return (self.cR * (x[..., 0] ** 2 + x[..., 1] ** 2) + self.cZ * x[..., 2] ** 2
                + self.dZ * x[..., 2] + self.e)

    def grad(self, x):
        return np.array([2 * self.cR * x[0], 2 * self.cR * x[1], 2 * self.cZ * x[2] + self.dZ])

    def ray_roots(self, x, v) -> list:
        x1, x2, x3 = float(x[0]), float(x[1]), float(x[2])
        v1, v2, v3 = float(v[0]), float(v[1]), float(v[2])
        a = self.cR * (v1 * v1 + v2 * v2) + self.cZ * v3 * v3
        b = 2 * self.cR * (x1 * v1 + x2 * v2) + 2 * self.cZ * x3 * v3 + self.dZ * v3
        c = self.cR * (x1 * x1 + x2 * x2) + self.cZ * x3 * x3 + self.dZ * x3 + self.e
        if abs(a) < 1e-15 * (abs(b) + abs(c) + 1.0):
            a = 0.0
        return quadratic_roots(a, b, c, DISC_TINY)


class PiecewiseSurfaceTable(SurfaceTable):
    kind = "piecewise"

    def __init__(self, kind: str, patches: list, contains: Callable, params: dict,
                 abc: tuple, edges: list):
        self.kind = kind
        self.patches = patches
        self._contains = contains
        self._params = params
        self.abc = abc
        self.edges = edges

    def contains(self, x) -> bool:
        return bool(self._contains(np.asarray(x, dtype=float)))

    def params(self):
        return dict(self._params)

    def natural_integrals(self):
        a, b, c = self.abc
        return [ig.AxialDeg1(1.0, 0.0), ig.Degree2Axial(a, b, c)]

    def edge_distance(self, x) -> float:
        R = math.hypot(x[0], x[1])
        return min(math.hypot(R - er, x[2] - ez) for er, ez in self.edges)

    def sample_state(self, rng):
        x = self._sample_point(rng)
        v = rng.normal(size=3)
        return x, v / np.linalg.norm(v)


def _paraboloid_offset(b, c, s):
    return (4 * s * c - b) / (4 * s * b)


def make_parabolic_lens(b: float = 2.0, c: float = 1.0, s1: float = 1.0, s2: float = -0.5) -> PiecewiseSurfaceTable:
    """Solid between the confocal paraboloids ``z = s R^2 + (4sc - b)/(4sb)``,
    ``s1 > 0`` below and ``s2 < 0`` above."""
    if b == 0:
        raise ValueError("parabolic lens needs b != 0")
    if not (s1 > 0 > s2):
        raise EmptyRegion(f"paraboloids with s1 = {s1}, s2 = {s2} bound no solid (need s1 > 0 > s2)")
    k1, k2 = _paraboloid_offset(b, c, s1), _paraboloid_offset(b, c, s2)
    if not k1 < k2:
        raise EmptyRegion("lower apex is not below upper apex")
    r2 = (k2 - k1) / (s1 - s2)
    r_edge, z_edge = math.sqrt(r2), s1 * r2 + k1
    tol = 1e-12 * max(1.0, r2)
    fam1, fam2 = ProfileFamily(0.0, b, c, s1), ProfileFamily(0.0, b, c, s2)

    def valid(x):
        return x[0] ** 2 + x[1] ** 2 <= r2 + tol

    corner = ((r_edge, z_edge),)
    lower = QuadricPatch("lower", s1, 0.0, -1.0, k1, fam1, valid, corner)
    upper = QuadricPatch("upper", -s2, 0.0, 1.0, -k2, fam2, valid, corner)

    def contains(x):
        return lower.phi(x) <= 0 and upper.phi(x) <= 0

    table = PiecewiseSurfaceTable("parabolic_lens", [lower, upper], contains,
                                  {"b": b, "c": c, "s1": s1, "s2": s2}, (0.0, b, c), [corner[0]])
    table.r_edge, table.z_edge = r_edge, z_edge

    def sample(rng):
        R = r_edge * math.sqrt(rng.uniform(0, 0.8))
        lo, hi = s1 * R * R + k1, s2 * R * R + k2
        z = lo + (hi - lo) * rng.uniform(0.1, 0.9)
        ph = rng.uniform(0, TWO_PI)
        return np.array([R * math.cos(ph), R * math.sin(ph), z])

    table._sample_point = sample
    return table


def confocal_coordinates(x, D: float, z0: float = 0.0) -> tuple:
    """``(s_e, s_h)``: the two family parameters of the confocal conics
    ``(z - z0)^2 / s + R^2 / (s + D) = 1`` through ``x``; ``s_e >= s_h``."""
    X = x[0] ** 2 + x[1] ** 2
    Z = (x[2] - z0) ** 2
    roots = quadratic_roots(1.0, D - X - Z, -Z * D)
    if len(roots) < 2:
        return math.nan, math.nan
    return roots[1], roots[0]


def tetragon_corner(s_e: float, s_h: float, D: float) -> tuple:
    """``(R^2, (z - z0)^2)`` of the corner where two confocal conics meet."""
    return (s_e + D) * (s_h + D) / D, -s_e * s_h / D


def make_tetragon_torus(a: float = 1.0, b: float = 0.0, c: float = 1.0,
                        s_e1: float = 1.0, s_e2: float = 2.0,
                        s_h1: float = -0.25, s_h2: float = -0.5,
                        upper: bool = True) -> PiecewiseSurfaceTable:
    """Solid torus from rotating the cell ``s_e in [s_e1, s_e2]``,
    ``s_h in [s_h1, s_h2]`` of confocal conics about the z-axis.

    The cell lies on one side of the plane ``z = b/(2a)``; ``upper`` picks it.
    """
    if a == 0:
        raise ValueError("tetragon torus needs a != 0")
    D = (4 * a * c - b * b) / (4 * a * a)
    if D == 0:
        raise EmptyRegion("degenerate confocal family (4ac = b^2)")
    z0 = b / (2 * a)
    sig = 1 if upper else -1
    scale = max(1.0, abs(D))
    for s in (s_h1, s_h2):
        if abs(s + D) <= 1e-14 * scale:
            raise AxisTouching(f"hyperbola s = {s} degenerates onto the axis")
    for s in (s_e1, s_e2):
        if not (s > 0 and s + D > 0):
            raise EmptyRegion(f"s = {s} is not an ellipse of the family (D = {D})")
    for s in (s_h1, s_h2):
        if not s * (s + D) < 0:
            raise EmptyRegion(f"s = {s} is not a hyperbola of the family (D = {D})")
    se1, se2 = sorted((s_e1, s_e2))
    sh1, sh2 = sorted((s_h1, s_h2))
    if se1 == se2 or sh1 == sh2:
        raise EmptyRegion("coincident conics bound an empty tetragon")

    corners = {}
    for se in (se1, se2):
        for sh in (sh1, sh2):
            R2, Z2 = tetragon_corner(se, sh, D)
            if R2 <= 1e-12 * scale:
                raise AxisTouching(f"corner ({se}, {sh}) lies on the axis")
            if Z2 <= 0:
                raise EmptyRegion(f"corner ({se}, {sh}) is not off the symmetry plane")
            corners[se, sh] = (math.sqrt(R2), z0 + sig * math.sqrt(Z2))

    tol = 1e-12

    def side(x):
        return sig * (x[2] - z0) > 0

    def on_h_range(x):
        _, sh = confocal_coordinates(x, D, z0)
        return side(x) and sh1 - tol <= sh <= sh2 + tol

    def on_e_range(x):
        se, _ = confocal_coordinates(x, D, z0)
        return side(x) and se1 - tol <= se <= se2 + tol

    def quadric(name, s, orient, valid, corner_keys):
        # orient * ((z - z0)^2 / s + R^2 / (s + D) - 1)
        return QuadricPatch(
            name, orient / (s + D), orient / s, -2 * orient * z0 / s, orient * (z0 * z0 / s - 1),
            ProfileFamily(a, b, c, s, sig), valid, tuple(corners[k] for k in corner_keys))

    patches = [
        quadric("ellipse_inner", se1, -1, on_h_range, [(se1, sh1), (se1, sh2)]),
        quadric("ellipse_outer", se2, 1, on_h_range, [(se2, sh1), (se2, sh2)]),
        quadric("hyperbola_lower", sh1, -1, on_e_range, [(se1, sh1), (se2, sh1)]),
        quadric("hyperbola_upper", sh2, 1, on_e_range, [(se1, sh2), (se2, sh2)]),
    ]

    def contains(x):
        if not side(x):
            return False
        se, sh = confocal_coordinates(x, D, z0)
        return se1 <= se <= se2 and sh1 <= sh <= sh2

    table = PiecewiseSurfaceTable(
        "tetragon_torus", patches, contains,
        {"a": a, "b": b, "c": c, "s_e1": s_e1, "s_e2": s_e2, "s_h1": s_h1, "s_h2": s_h2},
        (a, b, c), list(corners.values()))
    table.D, table.z0, table.sigma = D, z0, sig
    table.s_ranges = ((se1, se2), (sh1, sh2))
    table.corners = corners

    def sample(rng):
        se = se1 + (se2 - se1) * rng.uniform(0.05, 0.95)
        sh = sh1 + (sh2 - sh1) * rng.uniform(0.05, 0.95)
        R2, Z2 = tetragon_corner(se, sh, D)
        R, ph = math.sqrt(R2), rng.uniform(0, TWO_PI)
        return np.array([R * math.cos(ph), R * math.sin(ph), z0 + sig * math.sqrt(Z2)])

    table._sample_point = sample
    return table


PLANAR_KINDS = {"circle": CircleTable, "ellipse": EllipseTable,
                "hyperbola": HyperbolaTable, "parabola": ParabolaTable}
