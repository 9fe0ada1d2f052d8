"""Two-barrier solver for proportional-only adjustment costs (K = L = 0).

The optimal policy reflects the inventory at ``d* = x1(B1)`` and
``u* = x2(B1)``, where ``B1`` solves ``gtilde(B) = k + ell``.  At that
shape constant the level ``A*`` placing the minimum of the curve at ``-k``
also places its maximum at ``ell``.
"""

from __future__ import annotations

import time

from .errors import InvalidParameterError, NumericError
from .gcurve import QUAD_TOL
from .impulse_solver import BandPolicy, Cascade, Solution, _mirror_solution, _prepare
from .model import ProblemSpec, reflect
from .roots import XTOL

BRANCH_TOL = 1e-8


def _solve_positive_drift(spec, tol_root, tol_quad):
    c = Cascade(spec, nonneg=False, quad_tol=tol_quad, xtol=tol_root)
    s1 = c.solve_B1()
    ext = c.extrema(s1)
    A_upper = c.h(ext.x2) / c.mu + c.ell
    A_lower = c.h(ext.x1) / c.mu - c.k
    return c, s1, ext, A_upper, A_lower


def solve_singular(spec: ProblemSpec, *, tol_root=XTOL, tol_quad=QUAD_TOL) -> Solution:
    t0 = time.perf_counter()
    _prepare(spec)
    if spec.K != 0 or spec.L != 0:
        raise InvalidParameterError("singular mode requires K = 0 and L = 0")
    if spec.mu < 0:
        sol = solve_singular(reflect(spec), tol_root=tol_root, tol_quad=tol_quad)
        out = _mirror_solution(sol)
        out.elapsed = time.perf_counter() - t0
        return out

    c, s1, ext, A_up, A_lo = _solve_positive_drift(spec, tol_root, tol_quad)
    if abs(A_up - A_lo) > BRANCH_TOL * max(1.0, abs(A_up)):
        # refine once with tighter tolerances
        c, s1, ext, A_up, A_lo = _solve_positive_drift(spec, tol_root * 1e-2, tol_quad * 1e-2)
        if abs(A_up - A_lo) > BRANCH_TOL * max(1.0, abs(A_up)):
            raise NumericError(
                f"level mismatch between extrema {abs(A_up - A_lo):.3e}",
                stage="singular", bound=abs(A_up - A_lo))
    A = A_up
    d, u = ext.x1, ext.x2
    g_d, gp_d = c.g(A, s1, d)
    g_u, gp_u = c.g(A, s1, u)
    res = {
        "g_d_plus_k": g_d + c.k,
        "g_u_minus_ell": g_u - c.ell,
        "gprime_d": gp_d,
        "gprime_u": gp_u,
        "level_mismatch": A_up - A_lo,
    }
    policy = BandPolicy(d, d, u, u, "singular")
    B1 = c.B_of(s1)
    return Solution(policy, spec.mu * A, A, B1, d, u, c.Bbar, B1, B1, res,
                    reflected=False, elapsed=time.perf_counter() - t0, B_gap=s1)
