"""Four-parameter free-boundary solver for control bands with fixed costs.

The optimal band {d, D, U, u} and curve constants (A*, B*) are found by a
cascade of one-dimensional monotone root problems in the shape constant B
(carried as the gap Bbar - B when backlog is allowed):

    Bbar  > B2 > B1 > 0           admissible range and its two thresholds
    B1:   gtilde(B) = k + ell
    B2:   Lambda2(Abar(B), B) = L
    B*:   Lambda1(A*(B), B) = -K,  with A*(B) solving Lambda2(A, B) = L

Every stage has a closed-form derivative, which drives safeguarded Newton
steps.  The same machinery serves the no-backlog variant (``nonneg=True``):
x1 is clamped at 0 and d may sit at 0, while the B range is unbounded.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

from .errors import DomainError, InvalidParameterError, NumericError, UnsupportedError
from .gcurve import (QUAD_TOL, ExtremaPair, compute_Bbar, compute_Bbar1, find_extrema,
                     find_extrema_gap, g_and_slope, g_and_slope_gap)
from .model import ProblemSpec, reflect
from .roots import XTOL, expand_bracket, monotone_root

# halvings of the gap reach the smallest subnormal well before this
MAX_APPROACH = 1100


@dataclass(frozen=True)
class BandPolicy:
    d: float
    D: float
    U: float
    u: float
    mode: str = "impulse"
    alpha: float = 0.0

    def __post_init__(self):
        for name in ("d", "D", "U", "u", "alpha"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def check(self):
        """Raise ``DomainError`` unless the thresholds are ordered for ``mode``."""
        d, D, U, u = self.d, self.D, self.U, self.u
        if self.mode == "singular":
            if not (d < u and D == d and U == u):
                raise DomainError(f"singular band needs d < u with D = d, U = u (got {self})")
        elif self.mode == "nonneg-impulse":
            if not 0.0 <= d < D < U < u:
                raise DomainError(f"no-backlog band needs 0 <= d < D < U < u (got {self})")
            if self.alpha < 0 or self.alpha * d != 0.0:
                raise DomainError(f"multiplier must satisfy alpha >= 0, alpha*d = 0 (got {self})")
        elif not d < D < U < u:
            raise DomainError(f"impulse band needs d < D < U < u (got {self})")
        return self

    def mirrored(self):
        """The band seen through ``x -> -x``."""
        return replace(self, d=-self.u, D=-self.U, U=-self.D, u=-self.d)

    def as_dict(self):
        return {"d": self.d, "D": self.D, "U": self.U, "u": self.u, "alpha": self.alpha}


@dataclass
class Solution:
    policy: BandPolicy
    gamma: float
    A_star: float
    B_star: float
    x1: float
    x2: float
    Bbar: float
    B1: float
    B2: float
    residuals: dict = field(default_factory=dict)
    reflected: bool = False
    elapsed: float = 0.0
    # Bbar - B_star with backlog, kept exactly since B_star may round to Bbar
    B_gap: float | None = None

    def as_dict(self):
        return {
            "band": self.policy.as_dict(),
            "mode": self.policy.mode,
            "gamma": self.gamma,
            "A_star": self.A_star,
            "B_star": self.B_star,
            "x1": self.x1,
            "x2": self.x2,
            "B_bar": self.Bbar,
            "B1": self.B1,
            "B2": self.B2,
            "residuals": dict(self.residuals),
            "reflected": self.reflected,
        }


class Cascade:
    """Stage functions of the B-cascade for one (mu > 0) problem instance.

    Internally every stage takes a shape coordinate ``s`` rather than ``B``:
    the gap ``s = Bbar - B`` with backlog, where ``B`` may sit within
    rounding of ``Bbar``, and ``s = B`` without.  Extrema are memoised per
    ``s``; the instance is private to a single solve.
    """

    def __init__(self, spec: ProblemSpec, nonneg=False, quad_tol=QUAD_TOL, xtol=XTOL):
        if not spec.mu > 0:
            raise DomainError("cascade requires mu > 0")
        self.spec = spec
        self.nonneg = nonneg
        self.tol = quad_tol
        self.xtol = xtol
        self.mu, self.lam, self.a = spec.mu, spec.lam, spec.a
        self.k, self.ell, self.K, self.L = spec.k, spec.ell, spec.K, spec.L
        self.h = spec.holding.h
        if nonneg:
            self.Bbar = math.inf
            self.Bbar1 = compute_Bbar1(spec, quad_tol)
        else:
            try:
                self.Bbar = compute_Bbar(spec, min(quad_tol, 1e-12))
            except NumericError as exc:
                raise NumericError(str(exc), stage="Bbar", bound=exc.bound) from exc
            self.Bbar1 = None
        # dB/ds
        self.sgn = 1.0 if nonneg else -1.0
        self._ext = {}
        self._u_hint = None

    def B_of(self, s):
        return s if self.nonneg else self.Bbar - s

    def s_of(self, B):
        return B if self.nonneg else self.Bbar - B

    # -- curve primitives -------------------------------------------------
    def g(self, A, s, x):
        if self.nonneg:
            return g_and_slope(self.spec, A, s, x, self.tol)
        return g_and_slope_gap(self.spec, A, s, x, self.Bbar, self.tol)

    def weight(self, x):
        """``-d g_{A,B}(x) / dB = e^{-lam (x-a)}``."""
        return math.exp(-self.lam * (x - self.a))

    def extrema(self, s) -> ExtremaPair:
        ext = self._ext.get(s)
        if ext is None:
            if self.nonneg:
                ext = find_extrema(self.spec, s, True, Bbar1=self.Bbar1, tol=self.tol,
                                   xtol=self.xtol)
            else:
                ext = find_extrema_gap(self.spec, s, self.Bbar, tol=self.tol, xtol=self.xtol)
            self._ext[s] = ext
        return ext

    def g0_at_x1(self, s, ext):
        """``g_{0,B}(x1(B))``; at a clamped minimiser the curve is evaluated at 0."""
        if ext.x1_clamped_at_zero:
            return self.g(0.0, s, 0.0)[0]
        return -self.h(ext.x1) / self.mu

    def h_integral(self, lo, hi):
        return self.spec.holding.integral(lo, hi, self.tol)

    # -- stage functions --------------------------------------------------
    def gtilde(self, s):
        """``(gtilde, d gtilde / ds)``."""
        ext = self.extrema(s)
        val = -self.h(ext.x2) / self.mu - self.g0_at_x1(s, ext)
        return val, self.sgn * (self.weight(ext.x1) - self.weight(ext.x2))

    def A_bounds(self, s):
        ext = self.extrema(s)
        return self.h(ext.x2) / self.mu + self.ell, -self.k - self.g0_at_x1(s, ext)

    def find_Uu(self, A, s):
        ext = self.extrema(s)
        x1, x2, ell = ext.x1, ext.x2, self.ell
        f_x1 = A + self.g0_at_x1(s, ext) - ell
        f_x2 = A - self.h(x2) / self.mu - ell
        if not f_x2 > 0:
            raise DomainError(f"A={A!r} not above the lower bound {A - f_x2!r}")
        if not f_x1 < 0:
            raise DomainError(f"A={A!r} exceeds the upper bound for B={self.B_of(s)!r}")

        def shifted(x):
            g, gp = self.g(A, s, x)
            return g - ell, gp

        U = monotone_root(shifted, x1, x2, increasing=True, with_derivative=True,
                          xtol=self.xtol, flo=f_x1, fhi=f_x2, stage="Uu")
        step0 = 1.0
        if self._u_hint is not None and self._u_hint > x2:
            step0 = 1.25 * (self._u_hint - x2)
        inner, outer = expand_bracket(lambda x: shifted(x)[0], x2, 1, want_positive=False,
                                      step0=step0, stage="Uu")
        u = monotone_root(shifted, inner, outer, increasing=False, with_derivative=True,
                          xtol=self.xtol, flo=f_x2 if inner == x2 else None, stage="Uu")
        self._u_hint = u
        return U, u

    def Lambda2(self, A, s):
        """``(Lambda2(A,B), U, u)`` with ``Lambda2 = int_U^u (g_{A,B} - ell)``."""
        U, u = self.find_Uu(A, s)
        val = (A - self.ell) * (u - U) - self.h_integral(U, u) / self.mu
        return val, U, u

    def solve_Astar(self, s, A0=None):
        """``(A*(B), U, u)`` solving ``Lambda2(A, B) = L`` on ``(Alow(B), Ahigh(B)]``."""
        A_lo, A_hi = self.A_bounds(s)
        L = self.L
        top, U, u = self.Lambda2(A_hi, s)
        if top - L < 0:
            if top - L > -1e-9 * max(1.0, L):
                return A_hi, U, u
            raise DomainError(f"B={self.B_of(s)!r} below B2: Lambda2(Ahigh) = {top!r} < L")
        cache = {}

        def fun(A):
            val, U_, u_ = self.Lambda2(A, s)
            cache[A] = (U_, u_)
            return val - L, u_ - U_

        A = monotone_root(fun, A_lo, A_hi, increasing=True, with_derivative=True,
                          xtol=self.xtol, flo=-L, fhi=top - L, x0=A0, stage="Astar")
        if A in cache:
            U, u = cache[A]
        elif A != A_hi:
            _, U, u = self.Lambda2(A, s)
        return A, U, u

    def find_dD(self, A, s, strict=True):
        """Roots of ``g_{A,B} = -k`` around ``x1``; ``d`` is clamped at 0 in no-backlog mode."""
        ext = self.extrema(s)
        x1, x2, k = ext.x1, ext.x2, self.k
        f_x1 = A + self.g0_at_x1(s, ext) + k
        if not f_x1 < 0:
            if strict:
                raise DomainError(f"g(x1) = {f_x1 - k!r} is not below -k; no (d, D) pair")
            return x1, x1

        def shifted(x):
            g, gp = self.g(A, s, x)
            return g + k, gp

        f_x2 = A - self.h(x2) / self.mu + k
        D = monotone_root(shifted, x1, x2, increasing=True, with_derivative=True,
                          xtol=self.xtol, flo=f_x1, fhi=f_x2, stage="dD")
        if self.nonneg:
            if x1 <= 0.0:
                return 0.0, D
            f0 = shifted(0.0)[0]
            if f0 <= 0.0:
                return 0.0, D
            d = monotone_root(shifted, 0.0, x1, increasing=False, with_derivative=True,
                              xtol=self.xtol, flo=f0, fhi=f_x1, stage="dD")
            return d, D
        inner, outer = expand_bracket(lambda x: shifted(x)[0], x1, -1, want_positive=True,
                                      stage="dD")
        d = monotone_root(shifted, outer, inner, increasing=False, with_derivative=True,
                          xtol=self.xtol, fhi=f_x1 if inner == x1 else None, stage="dD")
        return d, D

    def Lambda1(self, A, s, d, D):
        """``int_d^D (g_{A,B} + k)`` from endpoint values of g."""
        if D == d:
            return 0.0
        g_D = -self.k
        g_d = self.g(A, s, d)[0] if (self.nonneg and d == 0.0) else -self.k
        return ((A + self.k) * (D - d) - self.h_integral(d, D) / self.mu
                - (g_D - g_d) / self.lam)

    # -- B-level root problems ---------------------------------------------
    def _root_above(self, fun, s0, f0, rising, stage):
        """Root of ``fun`` for B above ``B_of(s0)``, where ``fun(s0) = f0``.

        ``rising`` tells whether ``fun`` increases with B.  With backlog the
        gap is halved towards 0; without, B is doubled.
        """
        prev, f_prev = s0, f0
        for _ in range(MAX_APPROACH):
            if self.nonneg:
                s = prev + max(1.0, prev)
            else:
                s = 0.5 * prev
                if s == 0.0:
                    break
            try:
                val = fun(s)
            except NumericError:
                break
            v = val[0] if isinstance(val, tuple) else val
            if v != 0 and (v > 0) == rising:
                if self.nonneg:
                    lo, hi, flo, fhi = prev, s, f_prev, v
                else:
                    lo, hi, flo, fhi = s, prev, v, f_prev
                return monotone_root(fun, lo, hi, increasing=rising == self.nonneg,
                                     with_derivative=True, xtol=self._stol(lo, hi),
                                     flo=flo, fhi=fhi, stage=stage)
            prev, f_prev = s, v
        raise NumericError(f"no sign change found above B={self.B_of(s0)!r}", stage=stage)

    def _stol(self, lo, hi):
        # a relative tolerance once the gap is far below one
        return min(self.xtol, 1e-12 * max(abs(lo), abs(hi))) if not self.nonneg else self.xtol

    def solve_B1(self):
        target = self.k + self.ell

        def fun(s):
            val, dval = self.gtilde(s)
            return val - target, dval

        return self._root_above(fun, self.s_of(0.0), -target, True, "B1")

    def solve_B2(self, s1):
        L = self.L

        def fun(s):
            ext = self.extrema(s)
            A_lo, A_hi = self.A_bounds(s)
            if not A_hi > A_lo:
                return -L, 0.0
            val, U, u = self.Lambda2(A_hi, s)
            dval = (u - U) * self.weight(ext.x1) - (self.weight(U) - self.weight(u)) / self.lam
            return val - L, self.sgn * dval

        return self._root_above(fun, s1, -L, True, "B2")

    def state_at(self, s, A0=None):
        """Everything attached to ``s`` on the ``A*(B)`` branch; slopes are per unit ``s``."""
        A, U, u = self.solve_Astar(s, A0)
        d, D = self.find_dD(A, s, strict=False)
        lam1 = self.Lambda1(A, s, d, D)
        dA = (self.weight(U) - self.weight(u)) / (self.lam * (u - U)) if u > U else 0.0
        dlam1 = (D - d) * dA - (self.weight(d) - self.weight(D)) / self.lam
        return {"A": A, "U": U, "u": u, "d": d, "D": D, "Lambda1": lam1,
                "dLambda1": self.sgn * dlam1, "dA": self.sgn * dA}

    def solve_Bstar(self, s2):
        K = self.K
        last = {}

        def fun(s):
            A0 = None
            if last:
                A0 = last["A"] + last["dA"] * (s - last["s"])
            st = self.state_at(s, A0)
            st["s"] = s
            last.clear()
            last.update(st)
            return st["Lambda1"] + K, st["dLambda1"]

        return self._root_above(fun, s2, K, False, "Bstar")


def _prepare(spec):
    if spec.mu == 0:
        raise UnsupportedError("lambda undefined: unsupported drift (mu = 0)")
    if not (spec.sigma2 > 0 and spec.k > 0 and spec.ell > 0):
        raise InvalidParameterError("need sigma2 > 0, k > 0, ell > 0")
    return spec


def _cascade(spec, **kw):
    _prepare(spec)
    if spec.mu < 0:
        raise DomainError("stage functions take mu > 0; solve_impulse reflects automatically")
    return Cascade(spec, **kw)


def gtilde(spec: ProblemSpec, B: float) -> float:
    """``g_{0,B}(x2(B)) - g_{0,B}(x1(B))``: rise of the curve between its extrema."""
    c = _cascade(spec)
    return c.gtilde(c.s_of(B))[0]


def solve_B1(spec: ProblemSpec) -> float:
    c = _cascade(spec)
    return c.B_of(c.solve_B1())


def A_bounds(spec: ProblemSpec, B: float):
    c = _cascade(spec)
    B1 = c.B_of(c.solve_B1())
    if not B1 < B < c.Bbar:
        raise DomainError(f"B={B!r} outside (B1={B1!r}, Bbar={c.Bbar!r})")
    return c.A_bounds(c.s_of(B))


def find_Uu(spec: ProblemSpec, A: float, B: float):
    c = _cascade(spec)
    return c.find_Uu(A, c.s_of(B))


def Lambda2(spec: ProblemSpec, A: float, B: float) -> float:
    c = _cascade(spec)
    return c.Lambda2(A, c.s_of(B))[0]


def solve_B2(spec: ProblemSpec) -> float:
    c = _cascade(spec)
    return c.B_of(c.solve_B2(c.solve_B1()))


def solve_Astar(spec: ProblemSpec, B: float) -> float:
    c = _cascade(spec)
    return c.solve_Astar(c.s_of(B))[0]


def find_dD(spec: ProblemSpec, A: float, B: float):
    c = _cascade(spec)
    return c.find_dD(A, c.s_of(B), strict=True)


def Lambda1(spec: ProblemSpec, A: float, B: float) -> float:
    c = _cascade(spec)
    s = c.s_of(B)
    d, D = c.find_dD(A, s, strict=True)
    return c.Lambda1(A, s, d, D)


def residuals_for(cascade: Cascade, A, s, d, D, U, u, alpha=0.0):
    """Defects of the free-boundary system at a candidate solution (``s`` as in ``Cascade``)."""
    k, ell = cascade.k, cascade.ell
    g = lambda x: cascade.g(A, s, x)[0]  # noqa: E731
    out = {
        "g_d_plus_k": g(d) + k + alpha,
        "g_D_plus_k": g(D) + k,
        "g_U_minus_ell": g(U) - ell,
        "g_u_minus_ell": g(u) - ell,
    }
    if D > d:
        g_d = g(d)
        lam1 = ((A + k) * (D - d) - cascade.h_integral(d, D) / cascade.mu
                - (g(D) - g_d) / cascade.lam)
        out["int_g_plus_k_plus_K"] = lam1 + cascade.K
    if u > U:
        lam2 = ((A - ell) * (u - U) - cascade.h_integral(U, u) / cascade.mu
                - (g(u) - g(U)) / cascade.lam)
        out["int_g_minus_ell_minus_L"] = lam2 - cascade.L
    return out


def _mirror_solution(sol: Solution) -> Solution:
    return replace(sol, policy=sol.policy.mirrored(), A_star=-sol.A_star,
                   x1=-sol.x2, x2=-sol.x1, reflected=not sol.reflected)


def solve_impulse(spec: ProblemSpec, *, tol_root=XTOL, tol_quad=QUAD_TOL) -> Solution:
    """Optimal control band for fixed plus proportional adjustment costs (backlog allowed)."""
    t0 = time.perf_counter()
    _prepare(spec)
    if not (spec.K > 0 and spec.L > 0):
        raise InvalidParameterError("impulse mode requires K > 0 and L > 0")
    if spec.mu < 0:
        sol = solve_impulse(reflect(spec), tol_root=tol_root, tol_quad=tol_quad)
        out = _mirror_solution(sol)
        out.elapsed = time.perf_counter() - t0
        return out

    c = Cascade(spec, nonneg=False, quad_tol=tol_quad, xtol=tol_root)
    s1 = c.solve_B1()
    s2 = c.solve_B2(s1)
    ss = c.solve_Bstar(s2)
    st = c.state_at(ss)
    ext = c.extrema(ss)
    A, d, D, U, u = st["A"], st["d"], st["D"], st["U"], st["u"]
    policy = BandPolicy(d, D, U, u, "impulse")
    res = residuals_for(c, A, ss, d, D, U, u)
    return Solution(policy, spec.mu * A, A, c.B_of(ss), ext.x1, ext.x2, c.Bbar, c.B_of(s1),
                    c.B_of(s2), res, reflected=False, elapsed=time.perf_counter() - t0,
                    B_gap=ss)
