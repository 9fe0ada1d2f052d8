"""Root finding for functions known to be strictly monotone on a bracket.

The solvers only ever search brackets on which monotonicity is
guaranteed, so a bisection loop cannot fail.  When the caller can supply
the derivative cheaply, Newton steps are taken inside the bracket and
rejected in favour of bisection whenever they leave it or stall.
"""

import math

from .errors import NumericError

XTOL = 1e-12
MAX_ITER = 300
MAX_EXPANSIONS = 80


def monotone_root(fun, lo, hi, *, increasing=True, with_derivative=False,
                  xtol=XTOL, flo=None, fhi=None, x0=None, max_iter=MAX_ITER, stage=None):
    """Return the unique root of ``fun`` in ``[lo, hi]``.

    ``fun(x)`` returns the value, or ``(value, derivative)`` when
    ``with_derivative`` is set.  ``flo``/``fhi`` may pass already known
    endpoint values (useful at open endpoints where ``fun`` is only
    defined as a limit).  The bracket must straddle a sign change in the
    stated direction.  ``x0`` is an optional first iterate inside the
    bracket (a warm start); the midpoint is used otherwise.
    """
    s = 1.0 if increasing else -1.0

    def ev(x):
        out = fun(x)
        if with_derivative:
            return s * out[0], s * out[1]
        return s * out, None

    if lo > hi:
        lo, hi = hi, lo
    f_lo = s * flo if flo is not None else ev(lo)[0]
    f_hi = s * fhi if fhi is not None else ev(hi)[0]
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo > 0.0 or f_hi < 0.0:
        raise NumericError(
            f"no sign change on [{lo!r}, {hi!r}] (f={s * f_lo:.3e}, {s * f_hi:.3e})",
            stage=stage,
        )

    x = x0 if (x0 is not None and lo < x0 < hi) else 0.5 * (lo + hi)
    step_old = hi - lo
    step = step_old
    fx, dfx = ev(x)
    for _ in range(max_iter):
        if fx == 0.0:
            return x
        if fx < 0.0:
            lo = x
        else:
            hi = x
        newton_ok = (
            dfx is not None
            and dfx > 0.0
            and math.isfinite(dfx)
            and lo < x - fx / dfx < hi
            and abs(2.0 * fx) <= abs(step_old * dfx)
        )
        step_old = step
        if newton_ok:
            step = fx / dfx
            x = x - step
        else:
            step = 0.5 * (hi - lo)
            x = lo + step
        if abs(step) <= xtol or hi - lo <= xtol:
            return x
        fx, dfx = ev(x)
    raise NumericError(
        f"root not located to {xtol:g} after {max_iter} iterations "
        f"(bracket width {hi - lo:.3e})",
        stage=stage,
        bound=hi - lo,
    )


def expand_bracket(fun, start, direction, *, want_positive, step0=1.0,
                   max_expansions=MAX_EXPANSIONS, stage=None):
    """Walk from ``start`` in ``direction`` with doubling steps until ``fun`` has the wanted sign.

    Returns ``(previous_point, point)``: the last point that did not have
    the sign and the first one that did.
    """
    prev = start
    step = step0
    for _ in range(max_expansions):
        x = start + direction * step
        val = fun(x)
        if (val > 0.0) == want_positive and val != 0.0:
            return prev, x
        prev = x
        step *= 2.0
    raise NumericError(
        f"bracket expansion from {start!r} exceeded {max_expansions} doublings",
        stage=stage,
    )
