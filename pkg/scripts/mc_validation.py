"""Compare simulated tail constants, VaR and CoTE with the exact constants.

    python3 scripts/mc_validation.py --q 5 --d 5 --p 0.3 --alpha 1.5 --replicates 1000000
"""

import argparse

import numpy as np

from netrisk import exact, model
from netrisk import montecarlo as mc
from netrisk.model import Dependence


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=int, default=5)
    ap.add_argument("--d", type=int, default=5)
    ap.add_argument("--p", type=float, default=0.3)
    ap.add_argument("--alpha", type=float, default=1.5)
    ap.add_argument("--replicates", type=int, default=1_000_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--gamma", type=float, help="also estimate VaR and CoTE at level 1 - gamma")
    args = ap.parse_args()
    cfg = mc.SimConfig(replicates=args.replicates, seed=args.seed, thresholds=tuple(np.geomspace(10, 1000, 5)))
    for regime in Dependence:
        s = model.homogeneous(args.q, args.d, args.p, args.alpha, dependence=regime)
        targets = {"agent 1": (mc.Agent(0), exact.individual_constant(s, 0)),
                   "aggregate": (mc.Aggregate(), exact.systemic_constant(s)),
                   "uninsured": (mc.Uninsured(), exact.uninsured_constant(s))}
        curves = mc.empirical_tail_constants([t for t, _ in targets.values()], s, cfg)
        print(f"== {regime.value}")
        for (name, (target, c)), curve in zip(targets.items(), curves):
            cells = "  ".join(f"t={e.threshold:7.1f}: {e.point:7.4f}+-{e.half_width:.4f}" for e in curve)
            verdict = "covers" if curve.plateau.covers(float(c)) else "MISSES"
            print(f"{name:10s} exact {float(c):.5f}  {verdict}\n    {cells}")
            if args.gamma:
                var, cote = mc.empirical_var_cote(target, s, cfg, args.gamma)
                ratio = var * args.gamma ** (1 / args.alpha) / float(c) ** (1 / args.alpha)
                print(f"    VaR {var:.4f} (ratio to asymptotic {ratio:.4f}), CoTE/VaR {cote / var:.4f}")


if __name__ == "__main__":
    main()
