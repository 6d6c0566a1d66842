"""Compare the master-equation oracle with the reduced rates.

Usage: python scripts/oracle_scan.py [--draws 10] [--seed 1] [--fock 30]
Prints random-draw errors, the detuning scan and the mild-gain check.
"""
import argparse
import time

from maserlab.oracle import detuning_scan, mild_gain_case, random_cases, run_case


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=10)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--fock", type=int, default=30)
    args = ap.parse_args()

    print(f"{'g2/g':>6} {'g2/gm':>8} {'S':>6} {'n_bath':>6} {'rate err':>9} {'n_ss err':>9} {'tail':>8} {'s':>5}")
    for p in random_cases(args.draws, seed=args.seed):
        t0 = time.perf_counter()
        rep, _ = run_case(p, N=args.fock)
        print(f"{p.gamma_2 / p.g:>6.1f} {p.gamma_2 / p.gamma_m:>8.0f} {p.dressed.s_z0:>6.2f} {p.n_bath:>6.2f} "
              f"{rep.rate_error:>+9.2%} {rep.steady_error:>+9.2%} {rep.tail:>8.1e} {time.perf_counter() - t0:>5.1f}")

    print(f"\n{'delta':>6} {'fitted':>12} {'Gamma_opt':>12} {'error':>8}")
    for delta, fitted, predicted in detuning_scan(N=args.fock):
        print(f"{delta:>6.2f} {fitted:>12.5e} {predicted:>12.5e} {fitted / predicted - 1:>+8.2%}")

    rep, _ = run_case(mild_gain_case(), N=40, n_start=0)
    print(f"\nmild gain (S below threshold): rate err {rep.rate_error:+.2%}, "
          f"n_ss {rep.fit.asymptote:.4f} vs {rep.n_ss_theory:.4f} ({rep.steady_error:+.2%}), tail {rep.tail:.1e}")


if __name__ == "__main__":
    main()
