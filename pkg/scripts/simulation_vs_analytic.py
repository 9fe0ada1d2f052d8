"""Monte Carlo average cost of the optimal band for each config, next to the analytic value."""

import argparse
import sys
import time
from pathlib import Path

from bandcontrol import SimConfig, simulate, solve
from bandcontrol.cli import load_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("configs", nargs="*", default=None)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--horizon", type=float, default=2e4)
    ap.add_argument("--reps", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    paths = args.configs or sorted(str(p) for p in CONFIGS.glob("*.json")
                                   if p.stem != "zero_holding")
    cfg = SimConfig(dt=args.dt, horizon=args.horizon, burn_in=min(100.0, args.horizon / 10),
                    replications=args.reps, seed=args.seed)
    print(f"{'config':<22} {'gamma':>10} {'simulated':>10} {'stderr':>9} {'z':>6} {'secs':>6}")
    for path in paths:
        spec, opts, _ = load_config(path)
        sol = solve(spec, **opts)
        t0 = time.perf_counter()
        res = simulate(spec, sol.policy, cfg)
        z = (res.ac_mean - sol.gamma) / res.ac_stderr if res.ac_stderr else float("nan")
        print(f"{Path(path).stem:<22} {sol.gamma:10.5f} {res.ac_mean:10.5f} "
              f"{res.ac_stderr:9.5f} {z:6.2f} {time.perf_counter() - t0:6.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
