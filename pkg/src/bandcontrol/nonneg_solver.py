"""Fixed-cost band solver when backlog is forbidden (inventory kept >= 0).

Same cascade as the backlog solver with three changes: the curve minimum
``x1(B)`` is clamped at 0 once ``B >= Bbar1``, the shape constant ranges
over ``(0, inf)``, and the lower trigger ``d`` may sit at 0.  In the latter
case the multiplier ``alpha = -(k + g(0))`` absorbs the slack in the
lower smooth-pasting condition.
"""

from __future__ import annotations

import time

from .errors import DomainError, InvalidParameterError
from .gcurve import QUAD_TOL
from .impulse_solver import BandPolicy, Cascade, Solution, _prepare, residuals_for
from .model import ProblemSpec
from .roots import XTOL


def solve_nonneg(spec: ProblemSpec, *, tol_root=XTOL, tol_quad=QUAD_TOL) -> Solution:
    """Optimal band on ``[0, inf)``.  ``Solution.Bbar`` holds the clamp threshold Bbar1."""
    t0 = time.perf_counter()
    _prepare(spec)
    if spec.mu < 0:
        raise DomainError("no-backlog mode supports only mu > 0")
    if spec.a < 0:
        raise DomainError(f"no-backlog mode needs the minimiser a >= 0 (got {spec.a})")
    if not (spec.K > 0 and spec.L > 0):
        raise InvalidParameterError("no-backlog impulse mode requires K > 0 and L > 0")

    c = Cascade(spec, nonneg=True, quad_tol=tol_quad, xtol=tol_root)
    B1 = c.solve_B1()
    B2 = c.solve_B2(B1)
    Bs = c.solve_Bstar(B2)
    st = c.state_at(Bs)
    ext = c.extrema(Bs)
    A, d, D, U, u = st["A"], st["d"], st["D"], st["U"], st["u"]
    alpha = 0.0
    if d == 0.0:
        alpha = max(0.0, -(c.k + c.g(A, Bs, 0.0)[0]))
    policy = BandPolicy(d, D, U, u, "nonneg-impulse", alpha)
    res = residuals_for(c, A, Bs, d, D, U, u, alpha)
    return Solution(policy, spec.mu * A, A, Bs, ext.x1, ext.x2, c.Bbar1, B1, B2, res,
                    reflected=False, elapsed=time.perf_counter() - t0)
