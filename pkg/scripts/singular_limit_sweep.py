"""Shrink the fixed costs on the |x| instance and watch the impulse band close onto the reflecting one."""

import argparse

import numpy as np

from bandcontrol import ProblemSpec, make_linear_holding, solve_impulse, solve_singular


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=8)
    ap.add_argument("--largest", type=float, default=1.0)
    ap.add_argument("--smallest", type=float, default=1e-5)
    args = ap.parse_args()

    hold = make_linear_holding(1.0, 1.0, 0.0)
    sing = solve_singular(ProblemSpec(1.0, 2.0, 0.0, 0.5, 0.0, 0.5, hold, "singular"))
    print(f"reflecting band: d={sing.policy.d:.6f} u={sing.policy.u:.6f} gamma={sing.gamma:.6f}")
    print(f"{'K=L':>10} {'d':>10} {'D-d':>10} {'u-U':>10} {'gamma':>10} {'gap':>9}")
    for K in np.geomspace(args.largest, args.smallest, args.points):
        sol = solve_impulse(ProblemSpec(1.0, 2.0, K, 0.5, K, 0.5, hold))
        b = sol.policy
        gap = sol.gamma / sing.gamma - 1.0
        print(f"{K:10.2e} {b.d:10.5f} {b.D - b.d:10.5f} {b.u - b.U:10.5f} "
              f"{sol.gamma:10.6f} {gap:9.2%}")


if __name__ == "__main__":
    main()
