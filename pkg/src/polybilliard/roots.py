"""Root finding used by the step operations.

Bracketing first (dense scan, then bisection), Newton only as a final
polish that is rejected if it leaves the bracket.
"""
from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np

SCAN_POINTS = 2048
BISECT_TOL = 1e-13
NEWTON_ITERS = 5


def quadratic_roots(a: float, b: float, c: float, tiny: float = 0.0) -> list:
    """Real roots of ``a x^2 + b x + c`` in ascending order.

    Uses the cancellation-free form.  A negative discriminant within
    ``tiny`` of zero is clamped to a double root.
    """
    if a == 0.0:
        if b == 0.0:
            return []
        return [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        if disc < -tiny:
            return []
        disc = 0.0
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        return [0.0, 0.0]
    r1, r2 = q / a, c / q
    return sorted((r1, r2))


def scan_brackets(fn: Callable, lo: float, hi: float, n: int = SCAN_POINTS) -> list:
    """Sign-change brackets of ``fn`` on a uniform grid of ``n`` cells.

    ``fn`` must accept an array.  Cells touching a non-finite value are
    skipped.  Exact zeros on grid nodes produce a zero-width bracket.
    """
    xs = np.linspace(lo, hi, n + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        ys = np.asarray(fn(xs), dtype=float)
    finite = np.isfinite(ys)
    out = []
    zero = np.flatnonzero(finite & (ys == 0.0))
    change = np.flatnonzero(
        finite[:-1] & finite[1:] & (np.sign(ys[:-1]) * np.sign(ys[1:]) < 0)
    )
    for i in sorted(set(zero.tolist()) | set(change.tolist())):
        if ys[i] == 0.0:
            out.append((xs[i], xs[i], 0.0, 0.0))
        else:
            out.append((xs[i], xs[i + 1], ys[i], ys[i + 1]))
    return out


def bisect(fn: Callable, lo: float, hi: float, flo: Optional[float] = None,
           tol: float = BISECT_TOL) -> float:
    if flo is None:
        flo = float(fn(lo))
    if lo == hi:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = float(fn(mid))
        if fm == 0.0:
            return mid
        if (fm < 0.0) == (flo < 0.0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def newton_polish(fn: Callable, dfn: Optional[Callable], x: float, lo: float, hi: float,
                  iters: int = NEWTON_ITERS) -> float:
    """A few safeguarded Newton steps; each must stay in ``[lo, hi]`` and
    must not increase ``|fn|``."""
    if dfn is None:
        return x
    fx = float(fn(x))
    for _ in range(iters):
        if fx == 0.0:
            break
        d = float(dfn(x))
        if d == 0.0 or not math.isfinite(d):
            break
        nx = x - fx / d
        if not (lo <= nx <= hi):
            break
        fn_x = float(fn(nx))
        if not abs(fn_x) < abs(fx):
            break
        x, fx = nx, fn_x
    return x


def refine(fn: Callable, bracket: tuple, dfn: Optional[Callable] = None,
           tol: float = BISECT_TOL) -> float:
    lo, hi, flo, _ = bracket
    # pad by the bisection tolerance so Newton can move across the final cell
    x = bisect(fn, lo, hi, flo, tol)
    return newton_polish(fn, dfn, x, lo - tol, hi + tol)


def first_root(fn: Callable, lo: float, hi: float, dfn: Optional[Callable] = None,
               n: int = SCAN_POINTS) -> Optional[float]:
    """Smallest root of ``fn`` in ``[lo, hi]`` found by scan, or ``None``."""
    brackets = scan_brackets(fn, lo, hi, n)
    if not brackets:
        return None
    return refine(fn, brackets[0], dfn)
