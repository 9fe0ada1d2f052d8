"""Command-line front end: ``bandcontrol {solve,evaluate,verify,simulate} CONFIG``.

stdout carries exactly one JSON document; diagnostics go to stderr.
Exit codes: 0 ok, 1 usage/config, 2 validation, 3 numeric failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .errors import DomainError, InvalidParameterError, NumericError, UnsupportedError
from .evaluator import evaluate, export_csv
from .impulse_solver import BandPolicy
from .model import (ProblemSpec, make_linear_holding, make_power_holding,
                    make_quadratic_holding, validate_spec, zero_holding)
from .qvi import GridSpec, verify
from .simulator import SimConfig, simulate

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_VERIFY = 0, 1, 2, 3, 4

TOP_KEYS = {"mu", "sigma2", "K", "k", "L", "ell", "mode", "holding", "solver", "sim"}
SOLVER_KEYS = {"tol_root", "tol_quad"}
SIM_KEYS = {"dt", "horizon", "burn_in", "reps", "seed", "z0", "stride", "trapezoid"}
HOLDING = {
    "linear": ({"p", "c"}, {"a"}, lambda q: make_linear_holding(q["p"], q["c"], q.get("a", 0.0))),
    "quadratic": ({"q"}, {"center"},
                  lambda q: make_quadratic_holding(q["q"], q.get("center", 0.0))),
    "power": ({"exponent"}, {"scale", "center"},
              lambda q: make_power_holding(q["exponent"], q.get("scale", 1.0),
                                           q.get("center", 0.0))),
    "zero": (set(), {"a"}, lambda q: zero_holding(q.get("a", 0.0))),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _round(obj):
    """Floats to 12 significant digits; non-finite to null."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, float) or (hasattr(obj, "dtype") and getattr(obj, "ndim", 1) == 0):
        v = float(obj)
        return float(f"{v:.12g}") if math.isfinite(v) else None
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def emit(doc):
    sys.stdout.write(json.dumps(_round(doc), sort_keys=False) + "\n")


def _number(cfg, key, where="config"):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise UsageError(f"{where}: {key} must be a number")
    return float(v)


def load_config(path):
    """Parse a JSON problem file into ``(spec, solver_opts, sim_defaults)``."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    missing = {"mu", "sigma2", "K", "k", "L", "ell", "holding"} - set(cfg)
    if missing:
        raise UsageError(f"missing config keys: {sorted(missing)}")

    hold = cfg["holding"]
    if not isinstance(hold, dict) or "family" not in hold:
        raise UsageError("holding must be an object with a 'family'")
    family = hold["family"]
    if family not in HOLDING:
        raise UsageError(f"unknown holding family {family!r} (choose from {sorted(HOLDING)})")
    required, optional, build = HOLDING[family]
    params = {k: v for k, v in hold.items() if k != "family"}
    extra = set(params) - required - optional
    if extra:
        raise UsageError(f"unknown holding keys for {family}: {sorted(extra)}")
    if required - set(params):
        raise UsageError(f"holding {family} needs {sorted(required - set(params))}")
    params = {k: _number(params, k, "holding") for k in params}
    try:
        holding = build(params)
    except InvalidParameterError as exc:
        raise UsageError(str(exc)) from exc

    mode = cfg.get("mode", "impulse")
    if mode not in ("impulse", "singular", "nonneg", "nonneg-impulse"):
        raise UsageError(f"unknown mode {mode!r}")
    spec = ProblemSpec(*(_number(cfg, k) for k in ("mu", "sigma2", "K", "k", "L", "ell")),
                       holding=holding, mode=mode)

    solver = cfg.get("solver", {}) or {}
    if set(solver) - SOLVER_KEYS:
        raise UsageError(f"unknown solver keys: {sorted(set(solver) - SOLVER_KEYS)}")
    solver_opts = {k: _number(solver, k, "solver") for k in solver}
    sim = cfg.get("sim", {}) or {}
    if set(sim) - SIM_KEYS:
        raise UsageError(f"unknown sim keys: {sorted(set(sim) - SIM_KEYS)}")
    return spec, solver_opts, dict(sim)


def parse_band(text, mode):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"malformed band {text!r}: expected comma-separated numbers") from exc
    if any(not math.isfinite(v) for v in vals):
        raise UsageError(f"malformed band {text!r}: non-finite value")
    if mode == "singular" and len(vals) == 2:
        vals = [vals[0], vals[0], vals[1], vals[1]]
    if len(vals) != 4:
        raise UsageError(f"malformed band {text!r}: expected d,D,U,u")
    band = BandPolicy(*vals, mode=mode)
    try:
        band.check()
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    return band


def _require_valid(spec):
    rep = validate_spec(spec)
    if not rep.ok:
        for issue in rep.issues:
            print(f"validation: {issue}", file=sys.stderr)
        return False
    return True


def _solve(spec, opts):
    from . import solve
    return solve(spec, **opts)


def cmd_solve(args):
    spec, opts, _ = load_config(args.config)
    if not _require_valid(spec):
        return EXIT_VALIDATION
    sol = _solve(spec, opts)
    emit(sol.as_dict())
    return EXIT_OK


def cmd_evaluate(args):
    spec, _, _ = load_config(args.config)
    if args.grid is not None and args.grid < 2:
        raise UsageError("--grid must be at least 2")
    band = parse_band(args.band, spec.mode)
    ev = evaluate(spec, band, m=args.m)
    for w in ev.warnings:
        print(f"warning: {w}", file=sys.stderr)
    doc = {"band": band.as_dict(), **ev.as_dict()}
    if args.csv:
        export_csv(args.csv, spec, ev, args.grid or 200)
        doc["csv"] = args.csv
    emit(doc)
    return EXIT_OK


def _band_or_solve(args, spec, opts):
    if args.band:
        return parse_band(args.band, spec.mode), None
    if not _require_valid(spec):
        return None, EXIT_VALIDATION
    return _solve(spec, opts).policy, None


def cmd_verify(args):
    spec, opts, _ = load_config(args.config)
    if args.points < 3:
        raise UsageError("--points must be at least 3")
    if args.span < 0:
        raise UsageError("--span must be >= 0")
    band, code = _band_or_solve(args, spec, opts)
    if band is None:
        return code
    ev = evaluate(spec, band, check=False)
    rep = verify(spec, band, ev, GridSpec(args.span, args.points, args.tol))
    emit({"band": band.as_dict(), "gamma": ev.gamma, **rep.as_dict()})
    return EXIT_OK if rep.passed else EXIT_VERIFY


def cmd_simulate(args):
    spec, opts, sim = load_config(args.config)
    band, code = _band_or_solve(args, spec, opts)
    if band is None:
        return code
    settings = {"dt": 1e-3, "horizon": 2e4, "burn_in": 100.0, "reps": 8, "seed": 0,
                "z0": None, "stride": 100, "trapezoid": False}
    settings.update(sim)
    for key in ("dt", "horizon", "burn_in", "reps", "seed", "z0", "stride"):
        val = getattr(args, key)
        if val is not None:
            settings[key] = val
    if args.trapezoid:
        settings["trapezoid"] = True
    cfg = SimConfig(dt=settings["dt"], horizon=settings["horizon"],
                    burn_in=settings["burn_in"], replications=settings["reps"],
                    seed=int(settings["seed"]), z0=settings["z0"],
                    trapezoid=bool(settings["trapezoid"]), dump_path=args.dump_path,
                    stride=settings["stride"])
    try:
        cfg.check()
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    res = simulate(spec, band, cfg)
    doc = {"band": band.as_dict(), **res.as_dict(),
           "config": {"dt": cfg.dt, "horizon": cfg.horizon, "burn_in": cfg.burn_in,
                      "reps": cfg.replications, "seed": cfg.seed, "z0": cfg.z0,
                      "trapezoid": cfg.trapezoid}}
    emit(doc)
    return EXIT_OK


def build_parser():
    p = _Parser(prog="bandcontrol", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="compute the optimal band")
    s.add_argument("config")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("evaluate", help="average cost and value function of a band")
    e.add_argument("config")
    e.add_argument("--band", required=True, help="d,D,U,u (or d,u for singular)")
    e.add_argument("--grid", type=int, default=None, help="CSV grid size (default 200)")
    e.add_argument("--csv", default=None, help="write x,V,V',generator table here")
    e.add_argument("--m", type=float, default=None, help="anchor point (default: minimiser of h)")
    e.set_defaults(func=cmd_evaluate)

    v = sub.add_parser("verify", help="check the optimality inequalities on a grid")
    v.add_argument("config")
    v.add_argument("--band", default=None, help="default: solve first")
    v.add_argument("--span", type=float, default=5.0)
    v.add_argument("--points", type=int, default=2000)
    v.add_argument("--tol", type=float, default=1e-6)
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("simulate", help="Monte Carlo average cost of a band")
    m.add_argument("config")
    m.add_argument("--band", default=None, help="default: solve first")
    m.add_argument("--dt", type=float, default=None)
    m.add_argument("--horizon", type=float, default=None)
    m.add_argument("--burn-in", dest="burn_in", type=float, default=None)
    m.add_argument("--reps", type=int, default=None)
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--z0", type=float, default=None)
    m.add_argument("--dump-path", default=None, help="CSV path for the first replication")
    m.add_argument("--stride", type=int, default=None)
    m.add_argument("--trapezoid", action="store_true")
    m.set_defaults(func=cmd_simulate)
    return p


def _attach_band_values(argv):
    # "--band -3,-1,1,2" would otherwise be read as an option
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--band" and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"--band={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(_attach_band_values(argv))
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedError as exc:
        print(f"validation: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InvalidParameterError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericError, OverflowError, ZeroDivisionError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
