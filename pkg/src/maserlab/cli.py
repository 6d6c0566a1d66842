"""Command-line front end: ``maserlab <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical-validity failure,
4 regime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import (OracleConfig, RunConfig, RunManifest, SweepSpec, config_hash, parse_config,
                     parse_config_text, parse_range, table_one_config)
from .errors import ConfigError, MaserlabError, NumericalError
from .io import json_text, write_csv, write_json

RATE_FIELDS = ("gamma_minus", "gamma_plus", "gamma_opt", "gamma_eff_n", "lamb_shift", "s_z_th",
               "n_sat", "n_las", "a_minus", "a_plus", "d_w")


def _load(args) -> RunConfig:
    if args.config is None:
        return parse_config_text(json.dumps(table_one_config()), source="<default operating point>")
    return parse_config(args.config)


def _langevin_cfg(args, run: RunConfig):
    from .langevin import LangevinConfig

    cfg = run.langevin or LangevinConfig()
    over = {"n_traj": args.traj, "dt": args.dt, "t_end": args.t_end, "seed": args.seed}
    return replace(cfg, **{k: v for k, v in over.items() if v is not None})


# --- commands ------------------------------------------------------------------

def cmd_rates(args) -> int:
    from .rates import rate_set

    run = _load(args)
    p = run.physical
    deltas = [p.delta]
    if args.delta_sweep:
        lo, hi, steps = parse_range(args.delta_sweep)
        deltas = SweepSpec("delta", lo, hi, steps).values()
    rows = []
    for delta in deltas:
        q = replace(p, delta=float(delta))
        rs = rate_set(q)
        rows.append([float(delta)] + [getattr(rs, f) for f in RATE_FIELDS])
    write_csv(args.out, ["delta", *RATE_FIELDS], rows)
    return 0


def cmd_meanfield(args) -> int:
    from .meanfield import integrate_mb

    p = _load(args).physical
    scale = max(p.gamma_1, p.gamma_2, p.g)
    dt = args.dt if args.dt is not None else 0.1 / scale
    traj = integrate_mb(None, p, p.dressed, t_end=args.t_end, dt=dt, stride=args.stride,
                        stop_at_steady=args.stop_at_steady)
    rows = zip(traj.t, traj.alpha.real, traj.alpha.imag, traj.intensity, traj.s.real, traj.s.imag, traj.w)
    write_csv(args.out, ["t", "re_alpha", "im_alpha", "abs_alpha2", "re_s", "im_s", "w"], rows)
    return 0


def cmd_langevin(args) -> int:
    from . import langevin as lv

    run = _load(args)
    p = run.physical
    cfg = _langevin_cfg(args, run)
    ens = lv.simulate_ensemble(cfg, p, threads=args.threads)
    if args.emit == "moments":
        write_csv(args.out, ["t", "mean_n", "var_n"], zip(ens.times, ens.mean_n, ens.var_n))
        return 0
    window = lv.stationary_window(ens, margin=args.margin)
    if args.emit == "radial":
        rd = lv.radial_histogram(ens, window, bins=args.bins)
        write_csv(args.out, ["r_mid", "density"], zip(rd.r_mid, rd.density))
    elif args.emit == "wigner":
        wg = lv.wigner_reconstruct(ens, window, cell=args.cell)
        Z, P = np.meshgrid(wg.z, wg.p, indexing="ij")
        write_csv(args.out, ["z", "p", "W"], zip(Z.ravel(), P.ravel(), wg.W.ravel()))
    else:
        est = lv.g2_zero(ens, window)
        write_json(args.out, {"value": est.value, "stderr": est.stderr, "window": list(est.window)})
    return 0


def cmd_fp(args) -> int:
    from .fokker_planck import stationary_radial_distribution
    from .rates import rate_set

    p = _load(args).physical
    sol = stationary_radial_distribution(p, n_points=args.points)
    write_csv(args.out, ["r", "density"], zip(sol.r_grid, sol.density))
    side = {"mean_n": sol.mean_n, "mode_r": sol.mode_r, "n_las": rate_set(p).n_las}
    if args.out and str(args.out) != "-":
        write_json(Path(args.out).with_suffix(".json"), side)
    else:
        sys.stderr.write(json_text(side))
    return 0


def _oracle_params(run: RunConfig):
    oc = run.oracle or OracleConfig()
    p = run.physical.rescaled(run.physical.omega_m) if oc.rescale else run.physical
    return p, oc


def cmd_oracle(args) -> int:
    from . import oracle as orc
    from .rates import gain

    run = _load(args)
    p, oc = _oracle_params(run)
    oc = replace(oc, **{k: v for k, v in {"fock": args.fock, "t_end": args.t_end, "dt": args.dt,
                                          "stride": args.stride, "n_start": args.n_start,
                                          "cutoff": args.cutoff}.items() if v is not None})
    gen = orc.build_generator(p, p.dressed, oc.fock)
    t_end = oc.t_end
    if t_end is None:
        gamma_eff = gain(p, p.dressed)[1]
        if gamma_eff <= 0:
            raise ConfigError("oracle needs --t-end when the point is at or above threshold")
        t_end = 12 / gamma_eff
    dt = oc.dt if oc.dt is not None else 0.1 / gen.scale
    res = orc.evolve(orc.fock_state(p.dressed, oc.n_start, oc.fock), gen, t_end=t_end, dt=dt,
                     stride=oc.stride, cutoff=oc.cutoff)
    write_csv(args.out, ["t", "mean_n", "sz", "trace_err", "tail"],
              zip(res.times, res.mean_n, res.sz, res.trace_err, res.tail))
    ok, tail = orc.truncation_check(res)
    if not ok:
        raise NumericalError(f"truncation tail {tail:.3g} exceeds cutoff {oc.cutoff:g}; increase --fock")
    return 0


def cmd_oracle_validate(args) -> int:
    from . import oracle as orc

    oc = OracleConfig()
    if args.config is not None:
        oc = parse_config(args.config).oracle or oc
    seed = 0 if args.seed is None else args.seed
    draws = []
    for p in orc.random_cases(args.draws, seed=seed):
        rep, _ = orc.run_case(p, N=oc.fock, cutoff=oc.cutoff)
        draws.append({"g": p.g, "gamma_m": p.gamma_m, "gamma_1": p.gamma_1, "s_z0": p.dressed.s_z0,
                      "n_bath": p.n_bath, "gamma_eff": rep.gamma_eff, "fitted_rate": rep.fit.rate,
                      "n_ss": rep.n_ss_theory, "fitted_n_ss": rep.fit.asymptote,
                      "rate_error": rep.rate_error, "steady_error": rep.steady_error,
                      "tail": rep.tail, "valid": rep.valid,
                      "pass": rep.valid and abs(rep.rate_error) < 0.05 and abs(rep.steady_error) < 0.05})
    scan = []
    for delta, fitted, predicted in orc.detuning_scan(N=oc.fock):
        err = fitted / predicted - 1
        scan.append({"delta": delta, "fitted": fitted, "predicted": predicted, "error": err,
                     "pass": abs(err) < 0.07})
    passed = all(d["pass"] for d in draws) and all(s["pass"] for s in scan)
    write_json(args.out, {"passed": passed, "draws": draws, "detuning": scan, "seed": seed})
    return 0 if passed else 3


def cmd_tables(args) -> int:
    from .experiments import table_two

    p = _load(args).physical
    rows = table_two(p)
    cols = ["eta", "g", "s_z_th", "gamma_opt_max", "gain_margin", "n_sat"]
    write_csv(args.out, cols, ([r[c] for c in cols] for r in rows))
    return 0


def _apply_sweep(p, variable: str, value: float):
    if variable == "delta":
        return replace(p, delta=value)
    if variable == "s_z0":
        return p.with_inversion(value)
    if variable == "g":
        return replace(p, g=value)
    if variable == "eta":
        return replace(p, g=value * p.omega_m)
    return p  # gamma_cool leaves the parameters alone


def _sweep_point(p, spec: SweepSpec, value: float, diags: set, n_traj: int, seed: int) -> list:
    from .rates import cooling_tradeoff, rate_set

    q = _apply_sweep(p, spec.variable, float(value))
    rs = rate_set(q)
    row = [float(value)] + [getattr(rs, f) for f in RATE_FIELDS]
    if spec.variable == "gamma_cool":
        dw = cooling_tradeoff(q, float(value), d=q.dressed)
        row += [dw.gamma_tot, dw.n_eff, dw.s_z_th_tot, dw.threshold_occupation_product, dw.t_eff_max]
    if "meanfield" in diags:
        from .meanfield import integrate_mb

        scale = max(q.gamma_1, q.gamma_2, q.g)
        t_end = 20 / q.gamma_m if q.gamma_m > 0 else 1e3
        tr = integrate_mb(None, q, q.dressed, t_end=t_end, dt=0.1 / scale, stride=10 ** 6, stop_at_steady=True)
        row += [float(tr.intensity[-1]), float(tr.w[-1])]
    if "langevin" in diags:
        from .experiments import g2_settings
        from .langevin import g2_zero, plateau_mean, simulate_ensemble

        cfg = replace(g2_settings(q), n_traj=n_traj, seed=seed)
        ens = simulate_ensemble(cfg, q, threads=1)
        window = (cfg.t_end / 3, float(ens.times[-1]))
        est = g2_zero(ens, window)
        row += [plateau_mean(ens, window).value, est.value, est.stderr]
    return row


def cmd_sweep(args) -> int:
    from .langevin import resolve_threads

    run = _load(args)
    spec = SweepSpec.parse(args.var, args.range, args.scale)
    diags = {d for d in (args.diag or "").split(",") if d}
    bad = diags - {"meanfield", "langevin"}
    if bad:
        raise ConfigError(f"unknown diagnostic(s): {', '.join(sorted(bad))}")
    header = [spec.variable, *RATE_FIELDS]
    if spec.variable == "gamma_cool":
        header += ["gamma_tot", "n_eff", "s_z_th_tot", "threshold_occupation_product", "t_eff_max"]
    if "meanfield" in diags:
        header += ["mb_n", "mb_w"]
    if "langevin" in diags:
        header += ["mean_n", "g2", "g2_stderr"]
    seed = 0 if args.seed is None else args.seed
    values = spec.values()
    work = [(v, seed + i) for i, v in enumerate(values)]
    with ThreadPoolExecutor(max_workers=resolve_threads(args.threads)) as pool:
        rows = list(pool.map(lambda vs: _sweep_point(run.physical, spec, vs[0], diags, args.traj, vs[1]), work))
    write_csv(args.out, header, rows)
    if args.out and str(args.out) != "-":
        RunManifest(config_hash(run.raw), seed, "sweep", [str(args.out)]).write(str(args.out) + ".manifest.json")
    return 0


def cmd_figure2(args) -> int:
    from . import experiments as ex
    from .rates import threshold_inversion

    run = _load(args)
    p = run.physical
    out = Path(args.out or "figure2")
    out.mkdir(parents=True, exist_ok=True)
    seed = 0 if args.seed is None else args.seed
    n_traj = args.traj or (400 if args.quick else 2000)
    files = []

    x, gmap = ex.gain_map(p)
    cols = [f"s_z0={s:g}" for s in ex.PANEL_A_INVERSIONS]
    write_csv(out / "a_gain.csv", ["delta_over_gamma2", *cols], (np.r_[xi, row] for xi, row in zip(x, gmap)))
    files.append("a_gain.csv")

    ring = ex.ring_run(p, n_traj=n_traj, t_end=1000.0, seed=seed, threads=args.threads)
    ens = ring.ensemble
    write_csv(out / "b_mean_n.csv", ["t", "mean_n"], zip(ens.times, ens.mean_n))
    write_json(out / "b_reference.json", {"n_las": ring.n_las, "mean_n_fp": ring.fp.mean_n,
                                           "plateau": ring.plateau.value, "plateau_stderr": ring.plateau.stderr,
                                           "window": list(ring.window)})
    files += ["b_mean_n.csv", "b_reference.json"]

    fp_at = np.interp(ring.radial.r_mid, ring.fp.r_grid, ring.fp.density)
    write_csv(out / "c_radial.csv", ["r", "density_langevin", "density_fp"],
              zip(ring.radial.r_mid, ring.radial.density, fp_at))
    write_json(out / "c_reference.json", {"r0": ring.r0, "mode_langevin": ring.radial.mode,
                                           "mode_fp": ring.fp.mode_r, "wigner_ring_radius": ring.wigner.ring_radius(),
                                           "angular_p_value": ring.angular_p})
    files += ["c_radial.csv", "c_reference.json"]

    pts = ex.g2_sweep(p, ex.crossover_grid(p), n_traj=n_traj, seed=seed + 1000, threads=args.threads)
    write_csv(out / "d_g2.csv", ["s_z0", "g2", "g2_stderr", "g2_normal_ordered", "mean_n"],
              ([q.s_z0, q.g2.value, q.g2.stderr, q.g2_normal.value, q.mean_n] for q in pts))
    write_json(out / "d_reference.json", {"s_z_th": threshold_inversion(p)})
    files += ["d_g2.csv", "d_reference.json"]

    RunManifest(config_hash(run.raw), seed, "figure2", files).write(out / "manifest.json")
    print(out)
    return 0


# --- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration (default: the representative operating point)")
    common.add_argument("--out", help="output file ('-' or omitted: stdout)")
    common.add_argument("--seed", type=int, help="base RNG seed")
    common.add_argument("--threads", type=int, help="worker threads (default: MASERLAB_THREADS or 1)")

    parser = argparse.ArgumentParser(prog="maserlab", description="Phonon maser rate, mean-field, "
                                     "stochastic and master-equation calculations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", parents=[common], help="closed-form rates (CSV)")
    p.add_argument("--delta-sweep", metavar="MIN:MAX:STEPS")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("meanfield", parents=[common], help="Maxwell-Bloch trajectory (CSV)")
    p.add_argument("--t-end", type=float, default=2000.0)
    p.add_argument("--dt", type=float)
    p.add_argument("--stride", type=int, default=1000)
    p.add_argument("--stop-at-steady", action="store_true")
    p.set_defaults(func=cmd_meanfield)

    p = sub.add_parser("langevin", parents=[common], help="stochastic ensemble diagnostics")
    p.add_argument("--traj", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--emit", choices=["moments", "radial", "g2", "wigner"], default="moments")
    p.add_argument("--bins", type=int, default=200)
    p.add_argument("--cell", type=float, default=0.25)
    p.add_argument("--margin", type=float, default=2.0, help="window starts at margin * saturation time")
    p.set_defaults(func=cmd_langevin)

    p = sub.add_parser("fp", parents=[common], help="stationary radial density (CSV + JSON sidecar)")
    p.add_argument("--points", type=int, default=4096)
    p.set_defaults(func=cmd_fp)

    p = sub.add_parser("oracle", parents=[common], help="full master-equation run (CSV)")
    p.add_argument("--fock", type=int)
    p.add_argument("--t-end", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--stride", type=int)
    p.add_argument("--n-start", type=int)
    p.add_argument("--cutoff", type=float)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("oracle-validate", parents=[common], help="oracle equivalence suite (JSON verdict)")
    p.add_argument("--draws", type=int, default=10)
    p.set_defaults(func=cmd_oracle_validate)

    p = sub.add_parser("tables", parents=[common], help="gain and saturation benchmarks per eta (CSV)")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("sweep", parents=[common], help="one-parameter sweep (CSV)")
    p.add_argument("--var", required=True, choices=["delta", "s_z0", "g", "eta", "gamma_cool"])
    p.add_argument("--range", required=True, metavar="MIN:MAX:STEPS")
    p.add_argument("--scale", choices=["linear", "log"], default="linear")
    p.add_argument("--diag", default="", help="comma list of meanfield, langevin")
    p.add_argument("--traj", type=int, default=500)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure2", parents=[common], help="data for the four gain/ring/statistics panels")
    p.add_argument("--traj", type=int)
    p.add_argument("--quick", action="store_true", help="fewer trajectories")
    p.set_defaults(func=cmd_figure2)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MaserlabError as exc:
        print(f"maserlab: error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
