"""Poisson approximation error against the exact constants on homogeneous markets.

    python3 scripts/poisson_accuracy.py --d 10 --alpha 2 --q 5 10 20 40
"""

import argparse

from netrisk import exact, model, poisson


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=10)
    ap.add_argument("--alpha", type=float, default=2.0)
    ap.add_argument("--q", type=int, nargs="+", default=[5, 10, 20, 40])
    ap.add_argument("--p", type=float, nargs="+", default=[0.01, 0.05, 0.1, 0.2])
    args = ap.parse_args()
    print(f"{'q':>4} {'p':>6} {'C_i exact':>10} {'error':>9} {'bound':>9} {'C_S exact':>10} {'error':>9} {'bound':>9}")
    for q in args.q:
        for p in args.p:
            s = model.homogeneous(q, args.d, p, args.alpha)
            ci, cs = exact.individual_constant_ind(s, 0), exact.systemic_constant_ind(s)
            ai, as_ = poisson.approx_individual_constant(s, 0), poisson.approx_systemic_constant(s)
            print(f"{q:4d} {p:6.2f} {ci:10.5f} {abs(ai.value - ci):9.2e} {ai.bound:9.2e} "
                  f"{cs:10.5f} {abs(as_.value - cs):9.2e} {as_.bound:9.2e}")


if __name__ == "__main__":
    main()
