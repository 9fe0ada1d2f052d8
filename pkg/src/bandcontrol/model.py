"""Problem instances and the holding-cost families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import InvalidParameterError, UnsupportedError
from .quadrature import integrate_tail, integrate_piecewise
from .errors import NumericError

MODES = ("impulse", "singular", "nonneg-impulse")
_MODE_ALIASES = {"nonneg": "nonneg-impulse"}

# family codes understood by the compiled simulator kernel
SIM_LINEAR, SIM_QUADRATIC, SIM_POWER, SIM_CUSTOM = 0, 1, 2, -1


@dataclass(frozen=True)
class HoldingCost:
    """Convex holding-cost rate ``h`` with minimiser ``a`` and derivative ``hprime``.

    ``h`` and ``hprime`` take a float.  ``h_array`` is the vectorised form
    used on grids; ``hprime`` returns the right derivative at a kink and
    ``hprime_left`` the left one (integrals ending at ``a`` from below).
    """

    family: str
    params: dict
    a: float
    h: Callable[[float], float] = field(compare=False, repr=False)
    hprime: Callable[[float], float] = field(compare=False, repr=False)
    h_array: Callable[[np.ndarray], np.ndarray] = field(compare=False, repr=False, default=None)
    hprime_array: Callable[[np.ndarray], np.ndarray] = field(compare=False, repr=False, default=None)
    sim_code: int = field(default=SIM_CUSTOM, compare=False, repr=False)
    sim_params: tuple = field(default=(0.0, 0.0, 0.0), compare=False, repr=False)
    hprime_left: Callable[[float], float] = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        if self.hprime_left is None:
            object.__setattr__(self, "hprime_left", self.hprime)
        if self.h_array is None:
            object.__setattr__(self, "h_array", np.vectorize(self.h, otypes=[float]))
        if self.hprime_array is None:
            object.__setattr__(self, "hprime_array", np.vectorize(self.hprime, otypes=[float]))

    def integral(self, lo, hi, tol=1e-12):
        """``int_lo^hi h(x) dx``, split at the kink."""
        return integrate_piecewise(self.h, lo, hi, breaks=(self.a,), tol=tol)


def make_linear_holding(p, c, a=0.0):
    """``h(x) = p (a - x)`` below ``a`` and ``c (x - a)`` above."""
    if not (p > 0 and c > 0):
        raise InvalidParameterError(f"linear holding slopes must be positive (p={p}, c={c})")
    p, c, a = float(p), float(c), float(a)

    def h(x):
        return p * (a - x) if x < a else c * (x - a)

    def hprime(x):
        return -p if x < a else c

    def h_array(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < a, p * (a - x), c * (x - a))

    def hprime_array(x):
        x = np.asarray(x, dtype=float)
        return np.where(x < a, -p, c)

    return HoldingCost("linear", {"p": p, "c": c, "a": a}, a, h, hprime,
                       h_array, hprime_array, SIM_LINEAR, (p, c, a),
                       hprime_left=lambda x: -p if x <= a else c)


def make_quadratic_holding(q, center=0.0):
    if not q > 0:
        raise InvalidParameterError(f"quadratic curvature must be positive (q={q})")
    q, center = float(q), float(center)

    def h(x):
        return q * (x - center) ** 2

    def hprime(x):
        return 2.0 * q * (x - center)

    def h_array(x):
        return q * (np.asarray(x, dtype=float) - center) ** 2

    def hprime_array(x):
        return 2.0 * q * (np.asarray(x, dtype=float) - center)

    return HoldingCost("quadratic", {"q": q, "center": center}, center, h, hprime,
                       h_array, hprime_array, SIM_QUADRATIC, (q, center, 0.0))


def make_power_holding(exponent, scale=1.0, center=0.0):
    """``h(x) = scale * |x - center| ** exponent`` with ``exponent >= 1``."""
    if not (exponent >= 1 and scale > 0):
        raise InvalidParameterError(
            f"power holding needs exponent >= 1 and scale > 0 (got {exponent}, {scale})")
    e, s, c = float(exponent), float(scale), float(center)

    def h(x):
        return s * abs(x - c) ** e

    def hprime(x):
        r = x - c
        if r == 0.0:
            return s if e == 1.0 else 0.0
        return math.copysign(s * e * abs(r) ** (e - 1.0), r)

    def h_array(x):
        return s * np.abs(np.asarray(x, dtype=float) - c) ** e

    def hprime_array(x):
        r = np.asarray(x, dtype=float) - c
        out = s * e * np.abs(r) ** (e - 1.0) * np.sign(r)
        return np.where(r == 0.0, s if e == 1.0 else 0.0, out)

    def hprime_left(x):
        return -s if (x == c and e == 1.0) else hprime(x)

    return HoldingCost("power", {"exponent": e, "scale": s, "center": c}, c, h, hprime,
                       h_array, hprime_array, SIM_POWER, (e, s, c), hprime_left)


def make_custom_holding(h, hprime, a, h_array=None, hprime_array=None, name="custom",
                        hprime_left=None):
    """Wrap a user-supplied pair ``(h, h')``; both are required."""
    if h is None or hprime is None:
        raise InvalidParameterError("custom holding cost needs both h and hprime")
    return HoldingCost(name, {}, float(a), h, hprime, h_array, hprime_array,
                       hprime_left=hprime_left)


def zero_holding(a=0.0):
    """``h == 0``.  Violates the convexity assumptions; only useful for formula checks."""
    return make_custom_holding(
        lambda x: 0.0, lambda x: 0.0, a,
        h_array=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        hprime_array=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        name="zero",
    )


def reflect_holding(hc: HoldingCost) -> HoldingCost:
    """Holding cost of the mirrored state ``x -> -x``."""
    p = hc.params
    if hc.family == "linear":
        return make_linear_holding(p["c"], p["p"], -p["a"])
    if hc.family == "quadratic":
        return make_quadratic_holding(p["q"], -p["center"])
    if hc.family == "power":
        return make_power_holding(p["exponent"], p["scale"], -p["center"])
    if hc.family == "zero":
        return zero_holding(-hc.a)
    h, hp, hpl = hc.h, hc.hprime, hc.hprime_left
    ha, hpa = hc.h_array, hc.hprime_array
    return make_custom_holding(
        lambda x: h(-x), lambda x: -hpl(-x), -hc.a,
        h_array=lambda x: ha(-np.asarray(x, dtype=float)),
        hprime_array=lambda x: -hpa(-np.asarray(x, dtype=float)),
        name=hc.family,
        hprime_left=lambda x: -hp(-x),
    )


@dataclass(frozen=True)
class ProblemSpec:
    mu: float
    sigma2: float
    K: float
    k: float
    L: float
    ell: float
    holding: HoldingCost
    mode: str = "impulse"

    def __post_init__(self):
        mode = _MODE_ALIASES.get(self.mode, self.mode)
        object.__setattr__(self, "mode", mode)
        for name in ("mu", "sigma2", "K", "k", "L", "ell"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def lam(self):
        """``2 mu / sigma^2``; raises for zero drift or zero variance."""
        if self.mu == 0.0 or self.sigma2 <= 0.0:
            raise UnsupportedError("lambda undefined: unsupported drift (mu = 0) or zero variance")
        return 2.0 * self.mu / self.sigma2

    @property
    def sigma(self):
        return math.sqrt(self.sigma2)

    @property
    def a(self):
        return self.holding.a

    def h(self, x):
        return self.holding.h(x)

    def hprime(self, x):
        return self.holding.hprime(x)


def reflect(spec: ProblemSpec) -> ProblemSpec:
    """Mirror the problem through ``x -> -x``: drift flips, up/down costs swap."""
    return replace(spec, mu=-spec.mu, K=spec.L, k=spec.ell, L=spec.K, ell=spec.k,
                   holding=reflect_holding(spec.holding))


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.issues

    def add(self, msg):
        self.issues.append(msg)

    def __str__(self):
        return "ok" if self.ok else "; ".join(self.issues)


def validate_spec(spec: ProblemSpec, grid=None, half_width=10.0, n_grid=2001,
                  tail_tol=1e-12) -> ValidationReport:
    """Check the parameter ranges and the holding-cost assumptions.

    Never raises.  Convexity and sign conditions are checked on ``grid``
    (default: ``n_grid`` points over ``a +- half_width``, restricted to
    ``x >= 0`` in the no-backlog mode); the tail integrability condition
    by geometric truncation.
    """
    rep = ValidationReport()
    hc = spec.holding
    a = hc.a

    if not spec.sigma2 > 0:
        rep.add(f"sigma2 must be > 0 (got {spec.sigma2})")
    if not spec.k > 0:
        rep.add(f"k must be > 0 (got {spec.k})")
    if not spec.ell > 0:
        rep.add(f"ell must be > 0 (got {spec.ell})")
    if spec.K < 0:
        rep.add(f"K must be >= 0 (got {spec.K})")
    if spec.L < 0:
        rep.add(f"L must be >= 0 (got {spec.L})")
    if spec.mode not in MODES:
        rep.add(f"unknown mode {spec.mode!r}")
    elif spec.mode in ("impulse", "nonneg-impulse") and not (spec.K > 0 and spec.L > 0):
        rep.add(f"mode {spec.mode} requires K > 0 and L > 0")
    elif spec.mode == "singular" and not (spec.K == 0 and spec.L == 0):
        rep.add("mode singular requires K = 0 and L = 0")
    if spec.mu == 0 or not math.isfinite(spec.mu):
        rep.add("lambda undefined: unsupported drift (mu = 0)")
    nonneg = spec.mode == "nonneg-impulse"
    if nonneg:
        if a < 0:
            rep.add(f"no-backlog mode needs the minimiser a >= 0 (got {a})")
        if spec.mu < 0:
            rep.add("no-backlog mode supports only positive drift")

    try:
        ha = hc.h(a)
    except Exception as exc:  # user callables
        rep.add(f"h(a) not evaluable: {exc}")
        return rep
    if abs(ha) > 1e-12:
        rep.add(f"h(a) must be 0 (h({a}) = {ha})")

    if grid is None:
        lo = max(0.0, a - half_width) if nonneg else a - half_width
        grid = np.linspace(lo, a + half_width, n_grid)
    grid = np.asarray(grid, dtype=float)
    hv = np.array([hc.h(x) for x in grid])
    hp = np.array([hc.hprime(x) for x in grid])
    if np.any(hv < -1e-12):
        x = grid[np.argmin(hv)]
        rep.add(f"h negative at x={x:.6g}")
    # h' may underflow to 0 next to a (power family), so skip points that close
    near = np.abs(grid - a) <= 1e-9 * max(1.0, abs(a))
    left = (grid < a) & ~near
    right = (grid > a) & ~near
    if np.any(hp[left] >= 0):
        x = grid[left][np.argmax(hp[left])]
        rep.add(f"h' must be < 0 left of a (fails at x={x:.6g})")
    if np.any(hp[right] <= 0):
        x = grid[right][np.argmin(hp[right])]
        rep.add(f"h' must be > 0 right of a (fails at x={x:.6g})")
    dec = np.diff(hp)
    scale = max(1.0, float(np.max(np.abs(hp))))
    if np.any(dec < -1e-10 * scale):
        i = int(np.argmin(dec))
        rep.add(f"convexity violation: h' decreases between x={grid[i]:.6g} and {grid[i + 1]:.6g}")

    if spec.mu != 0 and spec.sigma2 > 0 and not nonneg:
        lam = 2.0 * spec.mu / spec.sigma2
        direction = -1 if lam > 0 else 1
        # one-sided derivative matching the tail, so the kink sits at the panel edge
        slope = hc.hprime_left if direction < 0 else hc.hprime
        try:
            integrate_tail(lambda y: abs(slope(y)) * math.exp(lam * (y - a)),
                           a, direction, tol=tail_tol)
        except (NumericError, OverflowError):
            side = "left" if direction < 0 else "right"
            rep.add(f"tail condition fails: int |h'| e^(lambda (y-a)) diverges on the {side}")
    return rep
