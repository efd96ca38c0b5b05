"""Scalar bracketing root finder and golden-section minimiser."""

from __future__ import annotations

import math
from typing import Callable, Tuple

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class BracketError(ValueError):
    pass


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    ftol: float = 0.0,
    xtol: float = 0.0,
    max_iter: int = 200,
) -> float:
    """Root of ``f`` on ``[lo, hi]`` by bisection.

    Stops when ``|f(mid)| <= ftol``, when the bracket is narrower than ``xtol``
    or when it can no longer be split in floating point.
    """
    flo = f(lo)
    if flo == 0.0:
        return lo
    fhi = f(hi)
    if fhi == 0.0:
        return hi
    if (flo < 0) == (fhi < 0):
        raise BracketError(f"f({lo!r})={flo!r} and f({hi!r})={fhi!r} do not bracket a root")
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = f(mid)
        if abs(fm) <= ftol:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= xtol:
            break
    return 0.5 * (lo + hi)


def golden_section(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    xtol: float = 1e-8,
    max_evals: int = 200,
) -> Tuple[float, float]:
    """Minimise a unimodal ``f`` on ``[a, b]``; returns ``(x_min, f(x_min))``.

    The bracket endpoints are evaluated too, so a minimum sitting on the
    boundary is returned exactly.
    """
    a, b = min(a, b), max(a, b)
    a0, b0 = a, b
    fa, fb = f(a0), f(b0)
    evals = 2
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    evals += 2
    while b - a > xtol and evals < max_evals:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
        evals += 1
    best = min((fa, a0), (fb, b0), (fc, c), (fd, d))
    # (value, x) ordering keeps ties deterministic
    return best[1], best[0]
