"""The curve family g_{A,B}: solutions of (sigma^2/2) g' + mu g + h = mu A.

With ``lam = 2 mu / sigma^2`` and minimiser ``a`` of ``h``,

    g_{A,B}(x) = A - B e^{-lam (x-a)} - (lam/mu) int_a^x h(y) e^{-lam (x-y)} dy.

Integrating by parts gives the form used throughout,

    g_{A,B}(x) = A - h(x)/mu - F1(B, x) e^{-lam (x-a)},
    F1(B, x)   = B - (1/mu) int_a^x h'(y) e^{lam (y-a)} dy,
    g'_{A,B}(x) = lam F1(B, x) e^{-lam (x-a)},

so a value and its slope cost a single quadrature.  The product
``F1 e^{-lam (x-a)}`` is assembled so that no exponential with a positive
argument is formed on the right of ``a``.  Everything here assumes
``mu > 0``; negative drift is handled by reflection in the solvers.

Near ``Bbar`` the left extremum sits where ``B - (1/mu) int_a^x h' e^{lam (y-a)}``
cancels to many digits, so the backlog solvers carry the gap
``Bbar - B`` instead of ``B``.  With ``T(x) = -(1/mu) int_{-inf}^x h' e^{lam (y-a)} dy``
the left branch reads ``F1 = T(x) - gap``, free of cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError
from .model import ProblemSpec
from .quadrature import adaptive_simpson, integrate_tail
from .roots import XTOL, expand_bracket, monotone_root

QUAD_TOL = 1e-10
# beyond this many e-folds left of a, T(x) comes from a direct tail integral
TAIL_SWITCH = 2.0
# Gauss-Laguerre rules for int_0^inf f(t) e^{-t} dt; the pair doubles as an error check
_LAGUERRE = tuple(np.polynomial.laguerre.laggauss(n) for n in (24, 40))


def _require_positive_drift(spec):
    if not spec.mu > 0:
        raise DomainError("curve evaluation requires mu > 0 (reflect the problem first)")


def _panel_integral(f, a, x, tol):
    """``int_a^x f`` over panels of widths 1, 1, 2, 4, ... measured from ``a``.

    Keeps each Simpson panel short relative to the exponential scale of
    the integrands, so no mass near an endpoint can be skipped.
    """
    if x == a:
        return 0.0
    sign = 1.0 if x > a else -1.0
    dist = abs(x - a)
    edges = [0.0]
    w = 1.0
    while edges[-1] < dist:
        edges.append(min(dist, edges[-1] + w))
        if len(edges) > 2:
            w *= 2.0
    n = len(edges) - 1
    total = 0.0
    for i in range(n):
        lo, hi = a + sign * edges[i], a + sign * edges[i + 1]
        total += adaptive_simpson(f, min(lo, hi), max(lo, hi), tol / n)
    return sign * total


def _p_integral(spec, x, tol):
    """``(1/mu) int_a^x h'(y) e^{lam (y-a)} dy``; stable for ``x <= a``."""
    a, lam, hp = spec.a, spec.lam, spec.holding.hprime_left
    return _panel_integral(lambda y: hp(y) * math.exp(lam * (y - a)), a, x, tol) / spec.mu


def _scaled_f1(spec, B, x, tol):
    """``F1(B, x) e^{-lam (x-a)}``; +-inf when the left-side factor overflows."""
    a, lam, hp = spec.a, spec.lam, spec.holding.hprime
    if x >= a:
        tail = _panel_integral(lambda y: hp(y) * math.exp(lam * (y - x)), a, x, tol)
        return B * math.exp(-lam * (x - a)) - tail / spec.mu
    f1 = B - _p_integral(spec, x, tol)
    try:
        return f1 * math.exp(lam * (a - x))
    except OverflowError:
        return math.copysign(math.inf, f1)


def g_and_slope(spec, A, B, x, tol=QUAD_TOL):
    """``(g_{A,B}(x), g'_{A,B}(x))`` from one quadrature."""
    s = _scaled_f1(spec, B, x, tol)
    return A - spec.holding.h(x) / spec.mu - s, spec.lam * s


def left_tail_scaled(spec, x, Bbar, tol=QUAD_TOL):
    """``T(x) e^{lam (a-x)} = -(1/mu) int_{-inf}^x h'(y) e^{lam (y-x)} dy`` for ``x <= a``."""
    a, lam = spec.a, spec.lam
    if lam * (a - x) <= TAIL_SWITCH:
        return (Bbar - _p_integral(spec, x, tol)) * math.exp(lam * (a - x))
    hp = spec.holding.hprime_left
    # y = x - t/lam turns the integral into a Laguerre weight
    coarse, fine = (math.fsum(w * hp(x - t / lam) for t, w in zip(*rule)) for rule in _LAGUERRE)
    if abs(fine - coarse) <= 0.1 * tol * lam * abs(spec.mu):
        return -fine / (lam * spec.mu)
    return -integrate_tail(lambda y: hp(y) * math.exp(lam * (y - x)), x, -1, tol=tol) / spec.mu


def g_and_slope_gap(spec, A, gap, x, Bbar, tol=QUAD_TOL):
    """``(g, g')`` for the curve with ``B = Bbar - gap``, accurate for tiny gaps."""
    if x >= spec.a:
        return g_and_slope(spec, A, Bbar - gap, x, tol)
    t = left_tail_scaled(spec, x, Bbar, tol)
    try:
        s = t - gap * math.exp(spec.lam * (spec.a - x))
    except OverflowError:
        s = -math.inf
    return A - spec.holding.h(x) / spec.mu - s, spec.lam * s


@dataclass(frozen=True)
class GCurve:
    """``g_{A,B}``; pass ``gap = Bbar - B`` (and ``Bbar``) to evaluate close to ``Bbar``."""

    A: float
    B: float
    spec: ProblemSpec
    quad_tol: float = QUAD_TOL
    gap: float | None = None
    Bbar: float | None = None

    def __post_init__(self):
        _require_positive_drift(self.spec)
        if self.gap is not None and self.Bbar is None:
            raise DomainError("a gap needs the matching Bbar")

    def _pair(self, x):
        if self.gap is None:
            return g_and_slope(self.spec, self.A, self.B, x, self.quad_tol)
        return g_and_slope_gap(self.spec, self.A, self.gap, x, self.Bbar, self.quad_tol)

    def value(self, x):
        return eval_g(self, x)

    def slope(self, x):
        return eval_g_prime(self, x)

    def integral(self, lo, hi):
        """``int_lo^hi g``, exact given g at the endpoints (no quadrature of g itself)."""
        return integral_of_g(self.spec, self.A, self.B, lo, hi, self.quad_tol)


@dataclass(frozen=True)
class ExtremaPair:
    x1: float
    x2: float
    x1_clamped_at_zero: bool = False


def _finite_or_raise(v, x):
    if not math.isfinite(v):
        raise NumericError(f"g overflows at x={x!r}", stage="gcurve")
    return v


def eval_g(curve: GCurve, x: float) -> float:
    g, _ = curve._pair(x)
    return _finite_or_raise(g, x)


def eval_g_prime(curve: GCurve, x: float) -> float:
    _, gp = curve._pair(x)
    return _finite_or_raise(gp, x)


def eval_F1(spec: ProblemSpec, B: float, x: float, tol=QUAD_TOL) -> float:
    _require_positive_drift(spec)
    if x <= spec.a:
        return B - _p_integral(spec, x, tol)
    a, lam, hp = spec.a, spec.lam, spec.holding.hprime
    # e^{lam (y-a)} = e^{lam (x-a)} e^{lam (y-x)} keeps the integrand bounded
    inner = _panel_integral(lambda y: hp(y) * math.exp(lam * (y - x)), a, x, tol)
    return B - math.exp(lam * (x - a)) * inner / spec.mu


def integral_of_g(spec, A, B, lo, hi, tol=QUAD_TOL):
    """``int_lo^hi g_{A,B}`` via the ODE: ``A (hi-lo) - (1/mu) int h - (g(hi)-g(lo))/lam``."""
    g_hi, _ = g_and_slope(spec, A, B, hi, tol)
    g_lo, _ = g_and_slope(spec, A, B, lo, tol)
    return A * (hi - lo) - spec.holding.integral(lo, hi, tol) / spec.mu - (g_hi - g_lo) / spec.lam


def compute_Bbar(spec: ProblemSpec, tol=QUAD_TOL) -> float:
    """``-(1/mu) int_{-inf}^a h'(y) e^{lam (y-a)} dy``; the supremum of admissible B."""
    _require_positive_drift(spec)
    a, lam, hp = spec.a, spec.lam, spec.holding.hprime_left
    total = integrate_tail(lambda y: hp(y) * math.exp(lam * (y - a)), a, -1, tol=tol)
    return -total / spec.mu


def compute_Bbar1(spec: ProblemSpec, tol=QUAD_TOL) -> float:
    """No-backlog threshold ``-(1/mu) int_0^a h'(y) e^{lam (y-a)} dy``; 0 when ``a = 0``."""
    _require_positive_drift(spec)
    if spec.a < 0:
        raise DomainError(f"no-backlog mode needs a >= 0 (got {spec.a})")
    return _p_integral(spec, 0.0, tol)


def _f1_with_slope(spec, B, tol):
    a, lam, mu, hp = spec.a, spec.lam, spec.mu, spec.holding.hprime

    def fun(x):
        return eval_F1(spec, B, x, tol), -hp(x) * math.exp(lam * (x - a)) / mu

    return fun


def _bracket(fun, a, direction):
    """``(inner, outer)`` with ``F1 >= 0`` at ``inner`` and ``F1 < 0`` at ``outer``."""
    return expand_bracket(lambda x: fun(x)[0], a, direction, want_positive=False,
                          stage="extrema")


def find_extrema(spec: ProblemSpec, B: float, nonneg: bool = False, *, Bbar=None,
                 Bbar1=None, tol=QUAD_TOL, xtol=XTOL) -> ExtremaPair:
    """Local minimiser ``x1 <= a`` and maximiser ``x2 > a`` of ``g_{A,B}``.

    Roots of ``F1(B, .)``, increasing on ``x < a`` and decreasing on
    ``x > a``.  In no-backlog mode ``x1`` is searched on ``(0, a)`` and
    clamped to 0 once ``B >= Bbar1``.
    """
    _require_positive_drift(spec)
    a = spec.a
    if not B > 0:
        raise DomainError(f"B must be > 0 (got {B})")
    fun = _f1_with_slope(spec, B, tol)

    clamped = False
    if nonneg:
        if Bbar1 is None:
            Bbar1 = compute_Bbar1(spec, tol)
        if B >= Bbar1:
            x1, clamped = 0.0, True
        else:
            x1 = monotone_root(fun, 0.0, a, increasing=True, with_derivative=True,
                               xtol=xtol, flo=B - Bbar1, fhi=B, stage="extrema")
    else:
        if Bbar is None:
            Bbar = compute_Bbar(spec, tol)
        if not B < Bbar:
            raise DomainError(f"B={B!r} outside (0, Bbar={Bbar!r})")
        inner, outer = _bracket(fun, a, -1)
        x1 = monotone_root(fun, outer, inner, increasing=True, with_derivative=True,
                           xtol=xtol, fhi=B if inner == a else None, stage="extrema")

    inner, outer = _bracket(fun, a, 1)
    x2 = monotone_root(fun, inner, outer, increasing=False, with_derivative=True,
                       xtol=xtol, flo=B if inner == a else None, stage="extrema")
    return ExtremaPair(x1, x2, clamped)


def find_extrema_gap(spec: ProblemSpec, gap: float, Bbar: float, *, tol=QUAD_TOL,
                     xtol=XTOL) -> ExtremaPair:
    """Extrema of the curve with ``B = Bbar - gap``; ``x1`` solves ``T(x1) = gap``."""
    _require_positive_drift(spec)
    a, lam, mu = spec.a, spec.lam, spec.mu
    if not 0 < gap < Bbar:
        raise DomainError(f"gap={gap!r} outside (0, Bbar={Bbar!r})")
    hp_left = spec.holding.hprime_left

    def left(x):
        w = math.exp(lam * (x - a))
        return left_tail_scaled(spec, x, Bbar, tol) * w - gap, -hp_left(x) * w / mu

    inner, outer = expand_bracket(lambda x: left(x)[0], a, -1, want_positive=False,
                                  stage="extrema")
    x1 = monotone_root(left, outer, inner, increasing=True, with_derivative=True, xtol=xtol,
                       fhi=Bbar - gap if inner == a else None, stage="extrema")
    fun = _f1_with_slope(spec, Bbar - gap, tol)
    inner, outer = _bracket(fun, a, 1)
    x2 = monotone_root(fun, inner, outer, increasing=False, with_derivative=True,
                       xtol=xtol, flo=Bbar - gap if inner == a else None, stage="extrema")
    return ExtremaPair(x1, x2, False)
