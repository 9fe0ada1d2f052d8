"""Adaptive Simpson quadrature and geometric tail truncation.

Everything here works on scalar callables.  The integrands the solvers
feed in are cheap closed-form expressions, so a plain Python loop is
fast enough and keeps the error control explicit.
"""

import math

from .errors import NumericError

DEFAULT_TOL = 1e-10
MAX_DEPTH = 60


def adaptive_simpson(f, lo, hi, tol=DEFAULT_TOL, max_depth=MAX_DEPTH, min_depth=2):
    """Integrate ``f`` over ``[lo, hi]`` to absolute tolerance ``tol``.

    Reversed limits give the negated integral.  Raises ``NumericError``
    (with the accumulated error estimate in ``.bound``) when a panel
    still fails the local test at ``max_depth``.
    """
    if lo == hi:
        return 0.0
    if hi < lo:
        return -adaptive_simpson(f, hi, lo, tol, max_depth, min_depth)

    flo, fhi = f(lo), f(hi)
    mid = 0.5 * (lo + hi)
    fmid = f(mid)
    whole = (hi - lo) * (flo + 4.0 * fmid + fhi) / 6.0

    total = 0.0
    err_total = 0.0
    failed = False
    # (a, b, fa, fm, fb, whole, tol, depth)
    stack = [(lo, hi, flo, fmid, fhi, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, s, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = f(lm)
        frm = f(rm)
        left = (m - a) * (fa + 4.0 * flm + fm) / 6.0
        right = (b - m) * (fm + 4.0 * frm + fb) / 6.0
        delta = left + right - s
        if depth >= min_depth and abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
            err_total += abs(delta) / 15.0
        elif depth >= max_depth:
            total += left + right + delta / 15.0
            err_total += abs(delta) / 15.0
            failed = True
        else:
            stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth + 1))
            stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth + 1))

    if failed or not math.isfinite(total):
        raise NumericError(
            f"adaptive Simpson did not converge on [{lo}, {hi}] "
            f"(estimated error {err_total:.3e})",
            stage="quadrature",
            bound=err_total,
        )
    return total


def integrate_piecewise(f, lo, hi, breaks=(), tol=DEFAULT_TOL):
    """Integrate over ``[lo, hi]`` splitting at interior ``breaks`` (kinks of ``f``)."""
    if lo == hi:
        return 0.0
    sign = 1.0
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0
    pts = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    n = len(pts) - 1
    return sign * sum(
        adaptive_simpson(f, pts[i], pts[i + 1], tol / n) for i in range(n)
    )


def integrate_tail(f, start, direction=-1, tol=DEFAULT_TOL, max_panels=80):
    """Integrate ``f`` from ``start`` to ``direction * inf`` by doubling panels.

    Panels are ``[start, start+1], [start+1, start+2], [start+2, start+4], ...``
    (mirrored for ``direction=-1``; the result is always the integral taken
    away from ``start``).  Stops once a panel contributes less than ``tol``.
    A tail that keeps contributing after ``max_panels`` doublings is
    reported as divergent via ``NumericError``.
    """
    if direction not in (-1, 1):
        raise ValueError("direction must be +1 or -1")
    total = 0.0
    inner, width = 0.0, 1.0
    small_in_a_row = 0
    for _ in range(max_panels):
        outer = inner + width
        a, b = start + direction * inner, start + direction * outer
        lo_, hi_ = min(a, b), max(a, b)
        try:
            coarse = (hi_ - lo_) * (f(lo_) + 4.0 * f(0.5 * (lo_ + hi_)) + f(hi_)) / 6.0
            # relative accuracy on large panels, else a divergent tail never resolves
            inc = adaptive_simpson(f, lo_, hi_, max(tol, 1e-12 * abs(coarse)))
        except (OverflowError, NumericError) as exc:
            raise NumericError(
                f"tail integral diverges beyond {a}", stage="tail"
            ) from exc
        if not math.isfinite(inc) or abs(inc) > 1e100:
            raise NumericError(f"tail integral diverges beyond {a}", stage="tail")
        total += inc
        # two quiet panels in a row guard against a lucky zero crossing
        small_in_a_row = small_in_a_row + 1 if abs(inc) < tol else 0
        if small_in_a_row >= 2:
            return total
        inner = outer
        width = outer  # doubling: [w, 2w]
    raise NumericError(
        f"tail integral did not settle after {max_panels} panels "
        f"(last increment {inc:.3e})",
        stage="tail",
        bound=abs(inc),
    )
