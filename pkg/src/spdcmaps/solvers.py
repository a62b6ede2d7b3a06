"""Scalar root finding: bracketed bisection refined by secant steps.

All solvers in the package funnel through this routine so that tolerance
semantics are uniform.  No derivative information is assumed; the target
functions (longitudinal mismatch vs angle, delay vs tilt) are smooth and
monotone near their roots, which the bisection stage guarantees we reach
before the secant stage accelerates.
"""

import math

from .errors import NoSolutionError

__all__ = ["bisect_secant"]


def bisect_secant(func, lo, hi, xtol=1e-12, max_iter=200):
    """Root of func on [lo, hi] with a sign change at the ends.

    Bisection runs until the bracket shrinks to ~1e3*xtol, then secant
    iterations finish the job; every secant iterate is clamped back into
    the current bracket so convergence cannot be lost.  Returns the root
    abscissa.  Raises NoSolutionError when func(lo) and func(hi) have the
    same (nonzero) sign.
    """
    flo = func(lo)
    fhi = func(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise NoSolutionError(
            f"no sign change on [{lo!r}, {hi!r}]: f(lo)={flo!r}, f(hi)={fhi!r}")

    a, b, fa, fb = lo, hi, flo, fhi
    # bisection: cheap, safe, brings the secant stage into its basin
    while (b - a) > 1e3 * xtol:
        mid = 0.5 * (a + b)
        if mid == a or mid == b:
            break
        fmid = func(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0.0) == (fa > 0.0):
            a, fa = mid, fmid
        else:
            b, fb = mid, fmid

    x0, f0 = a, fa
    x1, f1 = b, fb
    for _ in range(max_iter):
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not (a <= x2 <= b) or not math.isfinite(x2):
            x2 = 0.5 * (a + b)
        if abs(x2 - x1) < xtol:
            return x2
        f2 = func(x2)
        if f2 == 0.0:
            return x2
        if (f2 > 0.0) == (fa > 0.0):
            a, fa = x2, f2
        else:
            b, fb = x2, f2
        x0, f0 = x1, f1
        x1, f1 = x2, f2
        if (b - a) < xtol:
            return 0.5 * (a + b)
    return 0.5 * (a + b)
