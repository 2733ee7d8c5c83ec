"""Geweke joint-distribution check for one or all sampler combinations.

    python scripts/run_geweke.py --all
    python scripts/run_geweke.py --kernel carlasso --link probit --adaptive --draws 10000
"""

import argparse
import time

from carlasso.geweke import GEWEKE_COMBOS, run_geweke


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--all", action="store_true", help="run every kernel x link x adaptive combination")
    ap.add_argument("--kernel", choices=("carlasso", "bglasso"), default="carlasso")
    ap.add_argument("--link", choices=("identity", "probit", "log", "logit"), default="identity")
    ap.add_argument("--adaptive", action="store_true")
    ap.add_argument("--k", type=int, default=3, help="responses (logit uses k+1 raw columns)")
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--draws", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--sweeps", type=int, default=None, help="kernel sweeps per successive-conditional draw")
    args = ap.parse_args()

    combos = GEWEKE_COMBOS if args.all else [(args.kernel, args.link, args.adaptive)]
    worst = 0.0
    for kernel, link, adaptive in combos:
        k = args.k + 1 if link == "logit" else args.k
        t0 = time.perf_counter()
        r = run_geweke(kernel, link, adaptive, k=k, p=args.p, n=args.n, n_draws=args.draws, seed=args.seed,
                       sweeps_per_draw=args.sweeps)
        worst = max(worst, r.max_abs_z())
        tag = f"{kernel}/{link}/{'adaptive' if adaptive else 'shared'}"
        print(f"== {tag}: max|z| {r.max_abs_z():.2f} in {time.perf_counter() - t0:.0f}s")
        print(r.report(), flush=True)
    print(f"worst |z| over {len(combos)} combination(s): {worst:.2f}")


if __name__ == "__main__":
    main()
