"""Print the gain and saturation benchmarks per coupling next to exact values.

Usage: python scripts/reproduce_table_two.py [--out table.csv]
"""
import argparse

from maserlab.experiments import table_two
from maserlab.io import write_csv

COLUMNS = ["eta", "g", "s_z_th", "gamma_opt_max", "gain_margin", "n_sat"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", help="CSV path (default: aligned text on stdout)")
    args = ap.parse_args()
    rows = table_two()
    if args.out:
        write_csv(args.out, COLUMNS, ([r[c] for c in COLUMNS] for r in rows))
        return
    print("  ".join(f"{c:>14}" for c in COLUMNS))
    for r in rows:
        print("  ".join(f"{r[c]:>14.6g}" for c in COLUMNS))
    print("\nrounded to 3 significant digits:")
    for r in rows:
        print("  ".join(f"{float(f'{r[c]:.2e}'):>14g}" for c in COLUMNS))


if __name__ == "__main__":
    main()
