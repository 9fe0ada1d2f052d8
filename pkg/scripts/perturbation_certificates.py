"""Verifier report at the optimum of a config and at each one-threshold perturbation."""

import argparse

from bandcontrol import BandPolicy, GridSpec, evaluate, solve, verify
from bandcontrol.cli import load_config


def row(label, spec, band, grid):
    ev = evaluate(spec, band, check=False)
    rep = verify(spec, band, ev, grid)
    print(f"{label:<10} {ev.gamma:10.6f} {rep.poisson_min:11.2e} {rep.lbK_max:10.2e} "
          f"{rep.lbL_max:10.2e} {max(rep.c1_jump_lower, rep.c1_jump_upper):9.2e} "
          f"{'pass' if rep.passed else 'FAIL':>5}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    ap.add_argument("--delta", type=float, default=0.05)
    ap.add_argument("--points", type=int, default=2000)
    args = ap.parse_args()
    spec, opts, _ = load_config(args.config)
    sol = solve(spec, **opts)
    grid = GridSpec(5.0, args.points, 1e-6)
    print(f"{'band':<10} {'gamma':>10} {'poisson':>11} {'lower':>10} {'upper':>10} "
          f"{'C1 jump':>9} {'':>5}")
    row("optimum", spec, sol.policy, grid)
    if sol.policy.mode == "singular":
        return
    for field in ("d", "D", "U", "u"):
        for sign in (-1, 1):
            vals = sol.policy.as_dict()
            vals[field] += sign * args.delta
            band = BandPolicy(vals["d"], vals["D"], vals["U"], vals["u"], sol.policy.mode)
            row(f"{field}{'+' if sign > 0 else '-'}", spec, band, grid)


if __name__ == "__main__":
    main()
