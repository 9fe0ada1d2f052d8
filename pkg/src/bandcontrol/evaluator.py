"""Long-run average cost and relative value function of a given band policy.

Inside the band the relative value function solves the Poisson equation
``(sigma^2/2) V'' + mu V' + h = gamma``.  Anchoring at ``m``, its slope is

    V'(x) = gamma/mu + (V'(m) - gamma/mu) e^{-lam (x-m)} - (2/sigma^2) J(x),
    J(x)  = int_m^x h(y) e^{lam (y-x)} dy,

and the two boundary conditions of the policy (cost balance across each
jump for impulse bands, slope conditions for reflecting bands) form a
2x2 linear system in ``(gamma, V'(m))``.  The formulas hold for either
sign of ``mu`` and for any ``h``; no convexity is needed.

The system is solved with the anchor at the band edge the drift moves
away from, where every ``e^{-lam (x-m)}`` on the band is at most 1;
results for the requested ``m`` follow by translation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError
from .impulse_solver import BandPolicy
from .model import ProblemSpec, validate_spec
from .quadrature import integrate_piecewise

SEGMENT_TOL = 1e-12


class _Transforms:
    """``J(x)`` and ``H(x) = int_m^x h`` at arbitrary points, accumulated segment by segment."""

    def __init__(self, spec: ProblemSpec, m: float, tol=SEGMENT_TOL):
        self.h = spec.holding.h
        self.a = spec.a
        self.lam = 2.0 * spec.mu / spec.sigma2
        self.m = m
        self.tol = tol

    def _step(self, x0, x1, J0, H0):
        lam, h = self.lam, self.h
        brk = (self.a,)
        seg_J = integrate_piecewise(lambda y: h(y) * math.exp(lam * (y - x1)), x0, x1, brk, self.tol)
        seg_H = integrate_piecewise(h, x0, x1, brk, self.tol)
        return math.exp(-lam * (x1 - x0)) * J0 + seg_J, H0 + seg_H

    def __call__(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        J = np.empty_like(xs)
        H = np.empty_like(xs)
        order = np.argsort(xs, kind="stable")
        m = self.m
        right = [i for i in order if xs[i] >= m]
        left = [i for i in order[::-1] if xs[i] < m]
        for chain in (right, left):
            x_prev, J_prev, H_prev = m, 0.0, 0.0
            for i in chain:
                x = xs[i]
                if x != x_prev:
                    J_prev, H_prev = self._step(x_prev, x, J_prev, H_prev)
                    x_prev = x
                J[i], H[i] = J_prev, H_prev
        return J, H


@dataclass
class Evaluation:
    """Result of evaluating a band: gamma, V'(m) and the value function on the band."""

    gamma: float
    m: float
    Vprime_m: float
    coefficients: dict
    spec: ProblemSpec = field(repr=False)
    band: BandPolicy = field(repr=False)
    warnings: list = field(default_factory=list)
    # solve anchor and V' there; V is shifted so that V(m) = 0
    anchor: float | None = field(default=None, repr=False)
    Vprime_anchor: float | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.anchor is None:
            self.anchor, self.Vprime_anchor = self.m, self.Vprime_m
        self._V_at_m = 0.0
        if self.anchor != self.m:
            self._V_at_m = float(self._raw([self.m])[1][0])

    def _raw(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        spec = self.spec
        lam = 2.0 * spec.mu / spec.sigma2
        c = 2.0 / spec.sigma2
        A = self.gamma / spec.mu
        m0, vp0 = self.anchor, self.Vprime_anchor
        J, H = _Transforms(spec, m0)(xs)
        Vp = A + (vp0 - A) * np.exp(-lam * (xs - m0)) - c * J
        V = (c * (self.gamma * (xs - m0) - H) - (Vp - vp0)) / lam
        return Vp, V

    def slope_and_value(self, xs):
        """``(V'(x), V(x))`` on an array; ``V(m) = 0``."""
        Vp, V = self._raw(xs)
        return Vp, V - self._V_at_m

    def Vprime(self, x):
        out = self.slope_and_value(x)[0]
        return float(out[0]) if np.ndim(x) == 0 else out

    def V(self, x):
        out = self.slope_and_value(x)[1]
        return float(out[0]) if np.ndim(x) == 0 else out

    def as_dict(self):
        return {
            "gamma": self.gamma,
            "m": self.m,
            "Vprime_m": self.Vprime_m,
            "coefficients": dict(self.coefficients),
            "warnings": list(self.warnings),
        }


def _exp(v):
    # reported quantities at a far anchor may overflow; the solve never does
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _solve2(m11, m12, m21, m22, r1, r2, scale):
    det = m11 * m22 - m12 * m21
    if not math.isfinite(det) or abs(det) <= 1e-14 * scale:
        raise NumericError(f"degenerate evaluation system (det={det:.3e})", stage="evaluate")
    return (r1 * m22 - m12 * r2) / det, (m11 * r2 - m21 * r1) / det, det


def _warnings(spec, check):
    return list(validate_spec(spec).issues) if check else []


def _anchored(spec, band, m, pts):
    """Solve anchor, and ``J``, ``H`` at ``pts`` relative to both the anchor and ``m``."""
    lam = 2.0 * spec.mu / spec.sigma2
    m0 = band.d if spec.mu > 0 else band.u
    J0, H0 = _Transforms(spec, m0)(list(pts) + [m])
    Jm0, Hm0 = J0[-1], H0[-1]
    pts_arr = np.asarray(pts, dtype=float)
    with np.errstate(over="ignore"):
        Jm = J0[:-1] - np.exp(lam * (m - pts_arr)) * Jm0
    return m0, (J0[:-1], H0[:-1]), (Jm, H0[:-1] - Hm0)


def _slope_at(spec, gamma, m0, vp0, m, J0m):
    lam = 2.0 * spec.mu / spec.sigma2
    A = gamma / spec.mu
    return A + (vp0 - A) * _exp(-lam * (m - m0)) - 2.0 / spec.sigma2 * J0m


def _impulse_system(spec, band, m, J, H):
    d, D, U, u = band.d, band.D, band.U, band.u
    lam = 2.0 * spec.mu / spec.sigma2
    c = 2.0 / spec.sigma2
    Jd, JD, JU, Ju = J
    int_dD, int_Uu = H[1] - H[0], H[3] - H[2]
    E = lambda x: _exp(lam * (m - x))  # noqa: E731
    a1 = (E(d) - E(D)) / lam
    a2 = (E(U) - E(u)) / lam
    b1 = -c / lam * ((D - d) - a1)
    b2 = c / lam * ((u - U) - a2)
    c1 = -c / lam * (Jd - JD + int_dD)
    c2 = c / lam * (JU - Ju + int_Uu)
    return {"a1": a1, "a2": a2, "b1": b1, "b2": b2, "c1": c1, "c2": c2}


def evaluate_impulse(spec: ProblemSpec, band: BandPolicy, m=None, check=True) -> Evaluation:
    """gamma and V for a band with jumps d -> D and u -> U."""
    d, D, U, u = band.d, band.D, band.U, band.u
    if not d < D < U < u:
        raise DomainError(f"impulse evaluation needs d < D < U < u (got {band})")
    m = spec.a if m is None else float(m)
    m0, (J0, H0), (Jm, Hm) = _anchored(spec, band, m, [d, D, U, u])
    q = _impulse_system(spec, band, m0, J0, H0)
    rhs1 = spec.K + spec.k * (D - d) + q["c1"]
    rhs2 = spec.L + spec.ell * (u - U) + q["c2"]
    # rows: b1 gamma - a1 V'(m) = rhs1 ;  b2 gamma + a2 V'(m) = rhs2
    scale = max(abs(q["a1"] * q["b2"]), abs(q["a2"] * q["b1"]), 1e-300)
    gamma, vp0, _ = _solve2(q["b1"], -q["a1"], q["b2"], q["a2"], rhs1, rhs2, scale)
    J_at_m = _Transforms(spec, m0)([m])[0][0]
    vpm = _slope_at(spec, gamma, m0, vp0, m, J_at_m)
    coeffs = _impulse_system(spec, band, m, Jm, Hm)
    return Evaluation(gamma, m, vpm, coeffs, spec, band, _warnings(spec, check), m0, vp0)


def evaluate_singular(spec: ProblemSpec, band: BandPolicy, m=None, check=True) -> Evaluation:
    """gamma and V for a band reflecting at d and u, with V'(d) = -k and V'(u) = ell."""
    d, u = band.d, band.u
    if not d < u:
        raise DomainError(f"singular evaluation needs d < u (got {band})")
    m = spec.a if m is None else float(m)
    m0, (J0, _), (Jm, _) = _anchored(spec, band, m, [d, u])
    q = _reflect_system(spec, band, m0, J0)
    # rows: d1 V'(m) - e1 gamma = -(k + f1) ;  d2 V'(m) + e2 gamma = ell + f2
    scale = max(abs(q["d1"] * q["e2"]), abs(q["d2"] * q["e1"]), 1e-300)
    vp0, gamma, _ = _solve2(q["d1"], -q["e1"], q["d2"], q["e2"], -(spec.k + q["f1"]),
                            spec.ell + q["f2"], scale)
    J_at_m = _Transforms(spec, m0)([m])[0][0]
    vpm = _slope_at(spec, gamma, m0, vp0, m, J_at_m)
    coeffs = _reflect_system(spec, band, m, Jm)
    return Evaluation(gamma, m, vpm, coeffs, spec, band, _warnings(spec, check), m0, vp0)


def _reflect_system(spec, band, m, J):
    lam = 2.0 * spec.mu / spec.sigma2
    c = 2.0 / spec.sigma2
    d1 = _exp(lam * (m - band.d))
    d2 = _exp(lam * (m - band.u))
    return {"d1": d1, "d2": d2, "e1": -c * (1.0 - d1) / lam, "e2": c * (1.0 - d2) / lam,
            "f1": -c * J[0], "f2": c * J[1]}


def evaluate(spec: ProblemSpec, band: BandPolicy, m=None, check=True) -> Evaluation:
    if band.mode == "singular":
        return evaluate_singular(spec, band, m, check)
    return evaluate_impulse(spec, band, m, check)


@dataclass
class ExtendedValue:
    """Relative value function continued linearly outside the band."""

    evaluation: Evaluation

    def _pieces(self):
        ev = self.evaluation
        b, spec = ev.band, ev.spec
        if b.mode == "singular":
            lo_anchor, hi_anchor = b.d, b.u
            lo_const, hi_const = 0.0, 0.0
        else:
            lo_anchor, hi_anchor = b.D, b.U
            lo_const, hi_const = spec.K, spec.L
        _, (V_lo, V_hi) = ev.slope_and_value([lo_anchor, hi_anchor])
        return lo_anchor, hi_anchor, lo_const + V_lo, hi_const + V_hi

    def slope_and_value(self, xs):
        ev = self.evaluation
        b, spec = ev.band, ev.spec
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        fp = np.empty_like(xs)
        f = np.empty_like(xs)
        lo_anchor, hi_anchor, lo_base, hi_base = self._pieces()
        below, above = xs < b.d, xs > b.u
        inside = ~(below | above)
        if inside.any():
            fp[inside], f[inside] = ev.slope_and_value(xs[inside])
        fp[below] = -spec.k
        f[below] = lo_base + spec.k * (lo_anchor - xs[below])
        fp[above] = spec.ell
        f[above] = hi_base + spec.ell * (xs[above] - hi_anchor)
        return fp, f

    def __call__(self, x):
        out = self.slope_and_value(x)[1]
        return float(out[0]) if np.ndim(x) == 0 else out

    def prime(self, x):
        out = self.slope_and_value(x)[0]
        return float(out[0]) if np.ndim(x) == 0 else out


def extend_value_function(spec: ProblemSpec, band: BandPolicy, ev: Evaluation) -> ExtendedValue:
    """``f = V`` on ``[d, u]``; slope ``-k`` below ``d`` and ``ell`` above ``u``."""
    return ExtendedValue(ev)


def generator_plus_h(spec: ProblemSpec, ext: ExtendedValue, xs, fd_step=1e-5):
    """``(sigma^2/2) f'' + mu f' + h`` on ``xs`` with ``f''`` from central differences of ``f'``.

    Outside the band ``f''`` is 0 exactly; on the closed band the
    differences use the analytic continuation of ``V'``.
    """
    xs = np.asarray(xs, dtype=float)
    b = ext.evaluation.band
    fp, _ = ext.slope_and_value(xs)
    fpp = np.zeros_like(xs)
    inside = (xs >= b.d) & (xs <= b.u)
    if inside.any():
        xi = xs[inside]
        plus, _ = ext.evaluation.slope_and_value(xi + fd_step)
        minus, _ = ext.evaluation.slope_and_value(xi - fd_step)
        fpp[inside] = (plus - minus) / (2.0 * fd_step)
    return 0.5 * spec.sigma2 * fpp + spec.mu * fp + spec.holding.h_array(xs)


def export_csv(path, spec: ProblemSpec, ev: Evaluation, n_points: int):
    """Uniform grid over ``[d, u]``: columns x, V, Vprime, generator_plus_h."""
    b = ev.band
    xs = np.linspace(b.d, b.u, n_points)
    ext = extend_value_function(spec, b, ev)
    Vp, V = ev.slope_and_value(xs)
    gh = generator_plus_h(spec, ext, xs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "V", "Vprime", "generator_plus_h"])
        for row in zip(xs, V, Vp, gh):
            w.writerow([f"{v:.12g}" for v in row])
    return path
