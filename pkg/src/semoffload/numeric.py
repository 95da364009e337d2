"""Scalar root finding and 1-D maximisation shared by the solvers.

Both routines accept numpy arrays for the bracket so that many independent
problems (one per user) are solved in a single vectorised sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BracketError, ConvergenceError, DomainError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi
INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0  # 1/phi^2


@dataclass
class BracketedScalarProblem:
    evaluate: Callable[[float], float]
    lo: float
    hi: float
    tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError(f"empty bracket [{self.lo}, {self.hi}]")
        if not self.tol > 0:
            raise DomainError("tol must be > 0")


def bisect_root(problem: BracketedScalarProblem) -> float:
    """Bisection on a sign-changing bracket.

    Returns the midpoint of the final bracket, whose width is at most
    ``problem.tol``.  Raises :class:`BracketError` when the end values share a
    sign and :class:`ConvergenceError` (carrying the midpoint) when
    ``max_iter`` halvings do not reach ``tol``.
    """
    f = problem.evaluate
    lo, hi = float(problem.lo), float(problem.hi)
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise BracketError(f"no sign change on [{lo}, {hi}]: f={flo:.3g}, {fhi:.3g}")
    for _ in range(problem.max_iter):
        if hi - lo <= problem.tol:
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    if hi - lo <= problem.tol:
        return 0.5 * (lo + hi)
    raise ConvergenceError(
        f"bisection did not reach tol={problem.tol} in {problem.max_iter} steps",
        best=0.5 * (lo + hi),
    )


def maximize_concave_1d(evaluate, lo, hi, tol=1e-8, max_iter=200):
    """Golden-section search for the maximiser of a unimodal function.

    ``lo``/``hi`` may be arrays, in which case ``evaluate`` must be vectorised
    and every bracket is searched simultaneously.  The end points are
    compared against the interior estimate at the end, so maxima sitting on
    the boundary are returned exactly.  Never evaluates outside ``[lo, hi]``.

    Returns ``(argmax, max)`` with the same shape as the broadcast bracket.
    """
    a = np.asarray(lo, dtype=float)
    b = np.asarray(hi, dtype=float)
    a0, b0 = (np.array(v) for v in np.broadcast_arrays(a, b))
    a, b = a0.copy(), b0.copy()
    if np.any(a > b):
        raise DomainError("lo > hi")
    scalar = a.ndim == 0

    f_lo = np.asarray(evaluate(a0), dtype=float)
    f_hi = np.asarray(evaluate(b0), dtype=float)

    h = b - a
    c = a + INV_PHI2 * h
    d = a + INV_PHI * h
    fc = np.asarray(evaluate(c), dtype=float)
    fd = np.asarray(evaluate(d), dtype=float)
    for _ in range(max_iter):
        if np.all(h <= tol):
            break
        left = fc >= fd  # maximiser lies in [a, d]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        h = b - a
        new_c = np.where(left, a + INV_PHI2 * h, d)
        new_d = np.where(left, c, a + INV_PHI * h)
        probe = np.where(left, new_c, new_d)
        fp = np.asarray(evaluate(probe), dtype=float)
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = new_c, new_d

    x_best = np.where(fc >= fd, c, d)
    f_best = np.maximum(fc, fd)
    use_lo = f_lo >= f_best
    x_best = np.where(use_lo, a0, x_best)
    f_best = np.where(use_lo, f_lo, f_best)
    use_hi = f_hi > f_best
    x_best = np.where(use_hi, b0, x_best)
    f_best = np.where(use_hi, f_hi, f_best)
    if scalar:
        return float(x_best), float(f_best)
    return x_best, f_best
