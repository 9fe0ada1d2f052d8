"""Grid certificate that a band's value function satisfies the optimality inequalities.

For the extended value function f and cost gamma of a band, checks on a
grid covering the band plus a margin:

  (i)   (sigma^2/2) f'' + mu f' + h - gamma >= 0
  (ii)  f(y) - f(x) <= K + k (x - y)      for all y < x
  (iii) f(y) - f(x) <= L + ell (y - x)    for all x < y
  (iv)  sup |f'| <= max(k, ell, sup_band |f'|)

plus continuity of f' at the triggers, which the inequalities presuppose.
The pairwise conditions are evaluated as running maxima in O(n).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .evaluator import Evaluation, extend_value_function, generator_plus_h
from .impulse_solver import BandPolicy
from .model import ProblemSpec

DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class GridSpec:
    span: float = 5.0
    points: int = 2000
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not (self.points >= 3 and self.span >= 0 and self.tol > 0):
            raise ValueError(f"invalid grid (points={self.points}, span={self.span})")


@dataclass
class VerifyReport:
    poisson_min: float
    lbK_max: float
    lbL_max: float
    fprime_bound: float
    fprime_sup: float
    c1_jump_lower: float
    c1_jump_upper: float
    poisson_min_fd: float
    passed: bool
    tol: float
    grid: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def as_dict(self):
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out

    def to_json(self):
        return json.dumps(self.as_dict())


def _grid(spec, band, gs: GridSpec):
    lo = band.d - gs.span
    if spec.mode == "nonneg-impulse" or band.mode == "nonneg-impulse":
        lo = max(0.0, lo)
    hi = band.u + gs.span
    xs = np.linspace(lo, hi, gs.points)
    step = xs[1] - xs[0]
    offset = 0.0
    # keep grid points off the kink of h
    if np.min(np.abs(xs - spec.a)) < 1e-6 * step:
        offset = float(0.5 * step)
        xs = xs + offset
    return xs, offset


def pair_defects(xs, f, K, k, L, ell):
    """``max_{y<x} f(y)-f(x)-K-k(x-y)`` and ``max_{x<y} f(y)-f(x)-L-ell(y-x)`` on a sorted grid."""
    up = f + k * xs
    run_max = np.maximum.accumulate(up)[:-1]
    lbK = float(np.max(run_max - up[1:])) - K
    down = f - ell * xs
    run_min = np.minimum.accumulate(down)[:-1]
    lbL = float(np.max(down[1:] - run_min)) - L
    return lbK, lbL


def verify(spec: ProblemSpec, band: BandPolicy, ev: Evaluation, grid: GridSpec | None = None
           ) -> VerifyReport:
    gs = grid or GridSpec()
    tol = gs.tol
    xs, offset = _grid(spec, band, gs)
    ext = extend_value_function(spec, band, ev)
    fp, f = ext.slope_and_value(xs)
    h = spec.holding.h_array(xs)
    gamma = ev.gamma

    inside = (xs > band.d) & (xs < band.u)
    fpp = np.zeros_like(xs)
    fpp[inside] = (2.0 / spec.sigma2) * (gamma - h[inside] - spec.mu * fp[inside])
    poisson = 0.5 * spec.sigma2 * fpp + spec.mu * fp + h - gamma
    poisson_min = float(np.min(poisson))
    poisson_fd = float(np.min(generator_plus_h(spec, ext, xs) - gamma))

    lbK, lbL = pair_defects(xs, f, spec.K, spec.k, spec.L, spec.ell)

    band_slopes = fp[inside] if inside.any() else np.zeros(1)
    bound = max(spec.k, spec.ell, float(np.max(np.abs(band_slopes))))
    sup = float(np.max(np.abs(fp)))

    edge_slopes = ev.slope_and_value([band.d, band.u])[0]
    notes = []
    if band.mode == "nonneg-impulse" and band.d == 0.0:
        jump_lo = 0.0
        notes.append("lower trigger at 0: slope condition replaced by the multiplier")
    else:
        jump_lo = abs(float(edge_slopes[0]) + spec.k)
    jump_hi = abs(float(edge_slopes[1]) - spec.ell)
    if offset:
        notes.append("grid shifted by half a step to avoid the kink of h")
    notes.append("checks cover the grid only; the line beyond it is not certified")

    passed = (poisson_min >= -tol and lbK <= tol and lbL <= tol and sup <= bound + tol
              and jump_lo <= tol and jump_hi <= tol)
    return VerifyReport(
        poisson_min=poisson_min, lbK_max=lbK, lbL_max=lbL, fprime_bound=bound,
        fprime_sup=sup, c1_jump_lower=jump_lo, c1_jump_upper=jump_hi,
        poisson_min_fd=poisson_fd, passed=bool(passed), tol=tol,
        grid={"lo": float(xs[0]), "hi": float(xs[-1]), "points": int(xs.size),
              "offset": offset},
        notes=notes,
    )
