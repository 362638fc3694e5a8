"""
One-dimensional numeric kernel: bracketing root finder, golden-section minimizer
and adaptive Simpson quadrature.
"""

import logging
import math
import sys
from dataclasses import dataclass
from typing import Callable, Tuple

from array_pooling.exceptions import ConvergenceError, NoSignChangeError, QuadratureError

logger = logging.getLogger(__name__)

EPS = sys.float_info.epsilon

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQUARED = (3 - math.sqrt(5)) / 2

# Simpson error estimates below this many ulps of the integrand are rounding noise
NOISE_ULPS = 64

RealFunction = Callable[[float], float]


@dataclass(frozen=True)
class Tolerance:
    """Stopping rule shared by the root finder, minimizer and quadrature."""

    abs_x: float = 1e-12
    abs_f: float = 0.0
    max_iter: int = 200

    def __post_init__(self) -> None:
        if not self.abs_x > 0:
            raise ValueError(f"abs_x must be positive, got {self.abs_x}")
        if self.abs_f < 0:
            raise ValueError(f"abs_f must be non-negative, got {self.abs_f}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")


@dataclass(frozen=True)
class Bracket:
    """Interval [lo, hi] with the function values at both ends."""

    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"Bracket requires lo < hi, got [{self.lo}, {self.hi}]")

    @classmethod
    def around(cls, f: RealFunction, lo: float, hi: float) -> "Bracket":
        """Evaluate ``f`` at both ends of ``[lo, hi]``.

        :param f: Function to bracket.
        :param lo: Left end.
        :param hi: Right end.
        :return: Bracket carrying ``f(lo)`` and ``f(hi)``.
        """
        return cls(lo, hi, f(lo), f(hi))

    def has_sign_change(self) -> bool:
        return self.f_lo == 0 or self.f_hi == 0 or (self.f_lo < 0) != (self.f_hi < 0)


def _extrapolate(fcur: float, fpre: float, fblk: float, dpre: float, dblk: float) -> float:
    return -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))


def find_root(f: RealFunction, bracket: Bracket, tol: Tolerance = Tolerance()) -> float:
    """Find a root of ``f`` inside ``bracket`` with Brent's method.

    Secant and inverse-quadratic steps are accepted only while they stay inside the
    current bracket and shrink it fast enough; otherwise the step is a bisection.

    :param f: Continuous function with a sign change across the bracket.
    :param bracket: Initial bracket.
    :param tol: Stopping rule; the final bracket is narrower than ``tol.abs_x``.
    :return: Root location within the bracket.
    :raises NoSignChangeError: If the bracket ends have the same sign.
    :raises ConvergenceError: If ``tol.max_iter`` iterations do not suffice.
    """
    xpre, xcur = bracket.lo, bracket.hi
    fpre, fcur = bracket.f_lo, bracket.f_hi
    xblk, fblk, spre, scur = 0.0, 0.0, 0.0, 0.0

    if fpre == 0:
        return xpre
    if fcur == 0:
        return xcur
    if not bracket.has_sign_change():
        raise NoSignChangeError(
            f"No sign change on [{bracket.lo}, {bracket.hi}]: "
            f"f(lo)={bracket.f_lo}, f(hi)={bracket.f_hi}"
        )

    for i in range(tol.max_iter):
        if fpre != 0 and fcur != 0 and (fpre < 0) != (fcur < 0):
            xblk = xpre
            fblk = fpre
            spre = scur = xcur - xpre

        if abs(fblk) < abs(fcur):
            xpre, xcur, xblk = xcur, xblk, xcur
            fpre, fcur, fblk = fcur, fblk, fcur

        delta = (tol.abs_x + 4 * EPS * abs(xcur)) / 2
        sbis = (xblk - xcur) / 2
        if fcur == 0 or abs(sbis) < delta or abs(fcur) <= tol.abs_f:
            logger.debug(f"Root {xcur!r} after {i} iterations")
            return xcur

        if abs(spre) > delta and abs(fcur) < abs(fpre):
            if xpre == xblk:
                # interpolate
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                # extrapolate
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = _extrapolate(fcur, fpre, fblk, dpre, dblk)

            if 2 * abs(stry) < min(abs(spre), 3 * abs(sbis) - delta):
                spre = scur
                scur = stry
            else:
                spre = sbis
                scur = sbis
        else:
            spre = sbis
            scur = sbis

        xpre = xcur
        fpre = fcur
        if abs(scur) > delta:
            xcur += scur
        else:
            xcur += delta if sbis > 0 else -delta
        fcur = f(xcur)

    raise ConvergenceError(
        f"Root finder did not converge in {tol.max_iter} iterations "
        f"on [{bracket.lo}, {bracket.hi}]"
    )


def minimize_unimodal(
    f: RealFunction, lo: float, hi: float, tol: Tolerance = Tolerance()
) -> Tuple[float, float]:
    """Golden-section search for the minimum of a unimodal function.

    :param f: Function with a single local minimum on ``[lo, hi]``.
    :param lo: Left end.
    :param hi: Right end.
    :param tol: The search stops once the interval is narrower than ``tol.abs_x``.
    :return: Tuple of the minimizer and the function value there.
    :raises ConvergenceError: If the required contractions exceed ``tol.max_iter``.
    """
    a, b = min(lo, hi), max(lo, hi)
    h = b - a
    if h <= tol.abs_x:
        x = (a + b) / 2
        return x, f(x)

    steps = int(math.ceil(math.log(tol.abs_x / h) / math.log(INV_PHI)))
    if steps > tol.max_iter:
        raise ConvergenceError(
            f"Golden-section search needs {steps} contractions, more than {tol.max_iter}"
        )

    c = a + INV_PHI_SQUARED * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    for _ in range(steps - 1):
        if yc < yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARED * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    if yc < yd:
        b = d
    else:
        a = c
    x = (a + b) / 2
    return x, f(x)


def integrate(
    f: RealFunction,
    lo: float,
    hi: float,
    tol: Tolerance = Tolerance(),
    max_depth: int = 50,
) -> float:
    """Adaptive Simpson quadrature.

    The absolute error target is ``tol.abs_x * (hi - lo)``; it is halved together with
    the interval at every subdivision. A subinterval is accepted once its error estimate
    falls below the rounding noise of its function values, or once it can no longer be
    split in floating point.

    :param f: Bounded, piecewise-smooth integrand.
    :param lo: Lower limit.
    :param hi: Upper limit.
    :param tol: Error target per unit length.
    :param max_depth: Maximum subdivision depth.
    :return: Estimate of the integral.
    :raises QuadratureError: If some subinterval does not converge within ``max_depth``.
    """
    if lo == hi:
        return 0.0
    if lo > hi:
        return -integrate(f, hi, lo, tol, max_depth)

    def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
        return h / 3.0 * (fa + 4.0 * fm + fb)

    def _adaptive(
        a: float, b: float, fa: float, fm: float, fb: float, whole: float, depth: int, eps: float
    ) -> float:
        m = (a + b) / 2.0
        h = (b - a) / 2.0
        lm = (a + m) / 2.0
        rm = (m + b) / 2.0
        if not a < lm < m < rm < b:
            return whole
        flm = f(lm)
        frm = f(rm)

        left = _simpson(fa, flm, fm, h / 2.0)
        right = _simpson(fm, frm, fb, h / 2.0)
        error_estimate = (left + right - whole) / 15.0
        scale = max(abs(fa), abs(flm), abs(fm), abs(frm), abs(fb))
        noise = NOISE_ULPS * (b - a) * math.ulp(scale)

        if abs(error_estimate) <= max(eps, noise):
            return left + right + error_estimate
        if depth >= max_depth:
            raise QuadratureError(
                f"Adaptive Simpson reached depth {max_depth} on [{a}, {b}] "
                f"with error estimate {abs(error_estimate):.3e}"
            )

        return _adaptive(a, m, fa, flm, fm, left, depth + 1, eps / 2.0) + _adaptive(
            m, b, fm, frm, fb, right, depth + 1, eps / 2.0
        )

    fa = f(lo)
    fb = f(hi)
    fm = f((lo + hi) / 2.0)
    whole = _simpson(fa, fm, fb, (hi - lo) / 2.0)
    return _adaptive(lo, hi, fa, fm, fb, whole, 0, tol.abs_x * (hi - lo))
