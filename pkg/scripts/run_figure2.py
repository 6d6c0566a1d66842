"""Ring diagnostics and the g2 crossover at the representative operating point.

Usage: python scripts/run_figure2.py [--traj 2000] [--seed 0] [--threads 4]
Writes nothing; for the CSV/JSON panel data use ``maserlab figure2``.
"""
import argparse
import time

from maserlab.core import table_one
from maserlab.experiments import crossover_grid, g2_sweep, ring_run
from maserlab.rates import threshold_inversion


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--traj", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int)
    args = ap.parse_args()
    p = table_one()

    t0 = time.perf_counter()
    ring = ring_run(p, n_traj=args.traj, seed=args.seed, threads=args.threads)
    print(f"ring run ({args.traj} trajectories, {time.perf_counter() - t0:.1f} s)")
    print(f"  window            {ring.window[0]:.1f} .. {ring.window[1]:.1f}")
    print(f"  plateau <n>       {ring.plateau.value:.3f} +/- {ring.plateau.stderr:.3f}")
    print(f"  Fokker-Planck <n> {ring.fp.mean_n:.3f}   (z = {ring.z_score:+.2f})")
    print(f"  n_las             {ring.n_las:.3f}")
    print(f"  r0                {ring.r0:.3f}")
    print(f"  P(r) mode         {ring.radial.mode:.3f}   FP mode {ring.fp.mode_r:.3f}")
    print(f"  Wigner ring       {ring.wigner.ring_radius():.3f}")
    print(f"  angular p-value   {ring.angular_p:.3f}")

    s_th = threshold_inversion(p)
    t0 = time.perf_counter()
    points = g2_sweep(p, crossover_grid(p), n_traj=args.traj, seed=args.seed + 100, threads=args.threads)
    print(f"\ng2 crossover (S_th = {s_th:.5f}, {time.perf_counter() - t0:.1f} s)")
    print(f"{'s_z0':>10} {'g2':>8} {'+/-':>7} {'normal':>8} {'<n>':>10} {'t_end':>7} {'dt':>6}")
    for q in points:
        print(f"{q.s_z0:>10.5f} {q.g2.value:>8.3f} {q.g2.stderr:>7.3f} {q.g2_normal.value:>8.3f} "
              f"{q.mean_n:>10.2f} {q.t_end:>7.0f} {q.dt:>6.3f}")


if __name__ == "__main__":
    main()
