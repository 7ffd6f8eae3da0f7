"""Vectors, curves, surface patches and skew matrices.

Curves and patches carry analytic derivatives.  ``eval``/``deriv`` accept a
scalar parameter (returning shape ``(n,)``) or a 1-d array of parameters
(returning shape ``(k, n)``) so that root scans can be vectorised.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateNormal, DegenerateTangent, DimensionMismatch

TANGENT_EPS = 1e-12
NORMAL_EPS = 1e-12


def as_vec(x, n: Optional[int] = None) -> np.ndarray:
    """Convert to a finite float vector, optionally checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise DimensionMismatch(f"expected a vector of length >= 2, got shape {v.shape}")
    if n is not None and v.size != n:
        raise DimensionMismatch(f"expected length {n}, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite components")
    return v


@dataclass(frozen=True)
class Curve:
    """Differentiable curve ``t -> R^n``; not assumed arc-length."""

    eval: Callable
    deriv: Callable
    dim: int
    domain: tuple = (-math.inf, math.inf)
    period: Optional[float] = None

    def __call__(self, t):
        return self.eval(t)


@dataclass(frozen=True)
class SurfacePatch:
    """Parametrised patch ``(u1, u2) -> R^3``.

    ``partials`` returns ``(r_u1, r_u2)``.  ``graph`` marks charts with
    ``r1 = u1, r2 = u2``.
    """

    eval: Callable
    partials: Callable
    contains: Callable = field(default=lambda u1, u2: True)
    graph: bool = False

    def __call__(self, u1, u2):
        return self.eval(u1, u2)


class SkewMatrix:
    """Element of so(n), stored as its strict upper triangle."""

    __slots__ = ("n", "_upper")

    def __init__(self, n: int, upper):
        upper = np.asarray(upper, dtype=float).ravel()
        if n < 2 or upper.size != n * (n - 1) // 2:
            raise DimensionMismatch(
                f"so({n}) needs {n * (n - 1) // 2} upper entries, got {upper.size}"
            )
        self.n = int(n)
        self._upper = upper.copy()
        self._upper.setflags(write=False)

    @classmethod
    def from_dense(cls, a, atol: float = 0.0) -> "SkewMatrix":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"square matrix required, got {a.shape}")
        if np.max(np.abs(a + a.T)) > atol:
            raise ValueError("matrix is not skew-symmetric")
        iu = np.triu_indices(a.shape[0], 1)
        return cls(a.shape[0], a[iu])

    @classmethod
    def block_rotation(cls, *freqs: float) -> "SkewMatrix":
        """``block-diag(w1 J, w2 J, ...)`` with ``J = [[0, -1], [1, 0]]``."""
        n = 2 * len(freqs)
        a = np.zeros((n, n))
        for k, w in enumerate(freqs):
            a[2 * k, 2 * k + 1] = -w
            a[2 * k + 1, 2 * k] = w
        return cls.from_dense(a)

    @property
    def upper(self) -> np.ndarray:
        return self._upper

    def dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, 1)
        a[iu] = self._upper
        return a - a.T

    def __neg__(self) -> "SkewMatrix":
        return SkewMatrix(self.n, -self._upper)

    def __eq__(self, other):
        return (
            isinstance(other, SkewMatrix)
            and other.n == self.n
            and np.array_equal(other._upper, self._upper)
        )

    def __hash__(self):
        return hash((self.n, self._upper.tobytes()))

    def __repr__(self):
        return f"SkewMatrix({self.n}, {self._upper.tolist()})"

    def rotation_blocks(self) -> Optional[list]:
        """Frequencies if the matrix is block-diag of 2x2 rotations, else None."""
        a = self.dense()
        freqs = []
        mask = np.ones_like(a, dtype=bool)
        for k in range(self.n // 2):
            i = 2 * k
            freqs.append(a[i + 1, i])
            mask[i, i + 1] = mask[i + 1, i] = False
        if np.any(a[mask] != 0.0):
            return None
        return freqs


def unit_tangent(curve: Curve, t: float) -> np.ndarray:
    d = np.asarray(curve.deriv(t), dtype=float)
    nrm = math.sqrt(float(d @ d))
    if nrm <= TANGENT_EPS:
        raise DegenerateTangent(f"|gamma'({t})| = {nrm:.3g}")
    return d / nrm


def _expm_series(m: np.ndarray) -> np.ndarray:
    # scaling and squaring on the truncated Taylor series
    nrm = np.max(np.sum(np.abs(m), axis=1)) if m.size else 0.0
    s = max(0, int(math.ceil(math.log2(nrm / 0.5))) if nrm > 0.5 else 0)
    x = m / (2.0 ** s)
    result = np.eye(m.shape[0])
    term = np.eye(m.shape[0])
    for k in range(1, 40):
        term = term @ x / k
        result = result + term
        if np.max(np.abs(term)) < 1e-15 * np.max(np.abs(result)):
            break
    for _ in range(s):
        result = result @ result
    return result


def expm_skew(a: SkewMatrix, t: float) -> np.ndarray:
    """``exp(A t)`` as a dense orthogonal matrix."""
    freqs = a.rotation_blocks()
    if freqs is not None:
        out = np.eye(a.n)
        for k, w in enumerate(freqs):
            c, s = math.cos(w * t), math.sin(w * t)
            i = 2 * k
            out[i, i], out[i, i + 1] = c, -s
            out[i + 1, i], out[i + 1, i + 1] = s, c
        return out
    return _expm_series(a.dense() * t)


def matrix_exp_action(a: SkewMatrix, t: float, x0) -> np.ndarray:
    """Return ``exp(A t) x0``."""
    x0 = as_vec(x0, a.n)
    return expm_skew(a, t) @ x0


def surface_normal(patch: SurfacePatch, u1: float, u2: float) -> np.ndarray:
    ru1, ru2 = patch.partials(u1, u2)
    n = np.cross(ru1, ru2)
    nrm = math.sqrt(float(n @ n))
    if nrm <= NORMAL_EPS:
        raise DegenerateNormal(f"|r_u1 x r_u2| = {nrm:.3g} at ({u1}, {u2})")
    return n / nrm


def curve_fd_error(curve: Curve, ts, h: float = 1e-6) -> float:
    """Largest relative gap between ``deriv`` and a central difference."""
    worst = 0.0
    for t in np.atleast_1d(ts):
        fd = (np.asarray(curve.eval(t + h)) - np.asarray(curve.eval(t - h))) / (2 * h)
        d = np.asarray(curve.deriv(t))
        worst = max(worst, float(np.linalg.norm(fd - d) / max(np.linalg.norm(d), 1.0)))
    return worst


def patch_fd_error(patch: SurfacePatch, us, h: float = 1e-6) -> float:
    worst = 0.0
    for u1, u2 in us:
        ru1, ru2 = patch.partials(u1, u2)
        fd1 = (patch.eval(u1 + h, u2) - patch.eval(u1 - h, u2)) / (2 * h)
        fd2 = (patch.eval(u1, u2 + h) - patch.eval(u1, u2 - h)) / (2 * h)
        for d, fd in ((ru1, fd1), (ru2, fd2)):
            worst = max(worst, float(np.linalg.norm(fd - d) / max(np.linalg.norm(d), 1.0)))
    return worst
