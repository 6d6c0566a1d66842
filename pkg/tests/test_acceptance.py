"""Acceptance criteria; every test prints one PASS/FAIL line with its runtime.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear inline) or
``pytest -m acceptance``.
"""
import time

import numpy as np
import pytest

from maserlab.core import DressedState, PhysicalParams, table_one, validate_timescales
from maserlab.errors import NoThresholdError
from maserlab.experiments import crossover_grid, g2_sweep, ring_run, table_two
from maserlab.fokker_planck import radial_log_weight, radial_log_weight_quad
from maserlab.meanfield import integrate_mb
from maserlab.oracle import detuning_scan, random_cases, run_case
from maserlab.rates import gain, saturation_and_intensity, threshold_inversion

pytestmark = pytest.mark.acceptance

# published benchmark table: eta -> (g, S_z_th, |Gamma_opt|_max, ratio to gamma_m, n_sat)
BENCHMARK_PUBLISHED = {
    0.05: (1.57e1, 6.37e-2, 4.93e-1, 1.57e1, 5.07e2),
    0.10: (3.14e1, 1.59e-2, 1.97, 6.27e1, 1.27e2),
    0.25: (7.85e1, 2.55e-3, 1.23e1, 3.92e2, 2.03e1),
}
BENCHMARK_COLUMNS = ("g", "s_z_th", "gamma_opt_max", "gain_margin", "n_sat")


@pytest.fixture
def report(capsys):
    def emit(number, passed, summary, seconds):
        verdict = "NOT-ATTEMPTED" if passed is None else ("PASS" if passed else "FAIL")
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} {verdict} [{seconds:.2f} s] {summary}")
    return emit


def round_sig(x, digits=3):
    return float(f"{x:.{digits - 1}e}")


def test_1_benchmark_table(report):
    t0 = time.perf_counter()
    rows = table_two()
    elapsed = time.perf_counter() - t0
    mismatches = []
    for row in rows:
        for col, published in zip(BENCHMARK_COLUMNS, BENCHMARK_PUBLISHED[row["eta"]]):
            if round_sig(row[col]) != published:
                mismatches.append(f"eta={row['eta']} {col}: {row[col]:.6g} -> {round_sig(row[col]):g}, "
                                  f"published {published:g}")
    passed = not mismatches and elapsed < 1.0
    report(1, passed, f"{15 - len(mismatches)}/15 entries agree to 3 significant digits"
           + ("; " + "; ".join(mismatches) if mismatches else ""), elapsed)
    assert not mismatches
    assert elapsed < 1.0


def _valid_threshold_draws(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        gamma_1 = 10 ** rng.uniform(0, 4)
        gamma_2 = gamma_1 / 2 + 10 ** rng.uniform(-1, 4)
        g = min(gamma_1, gamma_2) / 10 ** rng.uniform(1, 3)
        gamma_m = min(gamma_1, gamma_2) / 10 ** rng.uniform(1, 6)
        delta = gamma_2 * rng.uniform(-5, 5)
        p = PhysicalParams.from_relaxation(omega_m=1.0, gamma_m=gamma_m, gamma_1=gamma_1, gamma_2=gamma_2,
                                           s_z0=0.0, g=g, delta=delta, n_bath=rng.uniform(0, 20))
        if not validate_timescales(p, warn=False).valid:
            continue
        try:
            s_th = threshold_inversion(p)
        except NoThresholdError:
            continue
        if s_th <= 1:  # threshold reachable by some inversion
            out.append((p, s_th))
    return out


def test_2_threshold_identity(report):
    draws = _valid_threshold_draws(1000, seed=2)
    t0 = time.perf_counter()
    worst = max(abs(gain(p, DressedState.from_inversion(s_th))[1]) / p.gamma_m for p, s_th in draws)
    elapsed = time.perf_counter() - t0
    passed = worst <= 1e-12 and elapsed < 1.0
    report(2, passed, f"1000 valid draws, max |gamma_eff(S_th)|/gamma_m = {worst:.2e}", elapsed)
    assert worst <= 1e-12
    assert elapsed < 1.0


def test_3_maxwell_bloch_convergence(report):
    p = table_one()
    d = p.dressed
    n_las, s_th = saturation_and_intensity(p, d)[1], threshold_inversion(p)
    t0 = time.perf_counter()
    traj = integrate_mb(None, p, d, t_end=2000.0, dt=0.1 / max(p.gamma_1, p.gamma_2, p.g), stop_at_steady=True)
    elapsed = time.perf_counter() - t0
    err_n = abs(traj.final.alpha) ** 2 / n_las - 1
    err_w = traj.final.w / s_th - 1
    passed = abs(err_n) < 1e-3 and abs(err_w) < 1e-3 and elapsed < 10.0
    report(3, passed, f"|alpha|^2 = {abs(traj.final.alpha) ** 2:.6g} (n_las {n_las:.6g}, {err_n:+.1e}); "
           f"w = {traj.final.w:.6g} (S_th {s_th:.6g}, {err_w:+.1e}); t = {traj.t[-1]:.1f}", elapsed)
    assert abs(err_n) < 1e-3 and abs(err_w) < 1e-3
    assert elapsed < 10.0


@pytest.fixture(scope="module")
def ring():
    t0 = time.perf_counter()
    run = ring_run(table_one(), n_traj=2000, t_end=1000.0, dt=0.1, seed=0)
    return run, time.perf_counter() - t0


def test_4_langevin_matches_fokker_planck(ring, report):
    run, elapsed = ring
    z = run.z_score
    passed = abs(z) < 3 and run.plateau.value > run.n_las and elapsed < 300
    report(4, passed, f"plateau {run.plateau.value:.2f} +/- {run.plateau.stderr:.2f} over t in "
           f"[{run.window[0]:.0f}, {run.window[1]:.0f}], FP mean {run.fp.mean_n:.2f} (z = {z:+.2f}), "
           f"n_las {run.n_las:.2f}", elapsed)
    assert abs(z) < 3
    assert run.plateau.value > run.n_las
    assert elapsed < 300


def test_5_ring_geometry(ring, report):
    run, elapsed = ring
    mode_err = run.radial.mode / run.r0 - 1
    wigner_err = run.wigner.ring_radius() / run.r0 - 1
    passed = abs(mode_err) < 0.05 and abs(wigner_err) < 0.05 and run.angular_p > 0.01
    report(5, passed, f"P(r) mode {run.radial.mode:.3f} vs r0 {run.r0:.3f} ({mode_err:+.2%}); Wigner ring "
           f"{run.wigner.ring_radius():.3f} ({wigner_err:+.2%}); angular chi2 p = {run.angular_p:.3f}", elapsed)
    assert abs(mode_err) < 0.05
    assert abs(wigner_err) < 0.05
    assert run.angular_p > 0.01


def test_6_intensity_statistics_crossover(report):
    p = table_one()
    s_th = threshold_inversion(p)
    grid = crossover_grid(p)
    t0 = time.perf_counter()
    points = g2_sweep(p, grid, n_traj=2000, seed=100)
    elapsed = time.perf_counter() - t0
    thermal = [q for q in points if q.s_z0 <= s_th / 2]
    coherent = [q for q in points if q.s_z0 == 0.2]
    bad = [q for q in thermal if not 1.8 <= q.g2.value <= 2.2] + [q for q in coherent if not q.g2.value <= 1.1]
    listing = ", ".join(f"S={q.s_z0:.4g}: {q.g2.value:.3f}" for q in points)
    normal = ", ".join(f"{q.g2_normal.value:.3f}" for q in thermal)
    passed = not bad and elapsed < 600
    report(6, passed, f"g2 [{listing}]; outside band: {[round(q.s_z0, 4) for q in bad]}; "
           f"normal-ordered on the thermal side [{normal}]", elapsed)
    assert not bad
    assert elapsed < 600


def test_7_oracle_equivalence(report):
    t0 = time.perf_counter()
    reports = [run_case(p, N=30)[0] for p in random_cases(10, seed=1)]
    scan = detuning_scan()
    elapsed = time.perf_counter() - t0
    assert all(r.params.gamma_2 / r.params.g >= 20 and r.params.n_bath <= 3 for r in reports)
    rate = max(abs(r.rate_error) for r in reports)
    steady = max(abs(r.steady_error) for r in reports)
    shape = max(abs(fit / pred - 1) for _, fit, pred in scan)
    all_valid = all(r.valid for r in reports)
    passed = all_valid and rate < 0.05 and steady < 0.05 and shape < 0.07 and elapsed < 600
    report(7, passed, f"10 draws: max rate error {rate:.2%}, max steady error {steady:.2%}, "
           f"max tail {max(r.tail for r in reports):.1e}; detuning scan max error {shape:.2%}", elapsed)
    assert all_valid
    assert rate < 0.05 and steady < 0.05
    assert shape < 0.07
    assert elapsed < 600


def test_8_closed_form_vs_quadrature(report):
    rng = np.random.default_rng(8)
    cases = []
    for _ in range(100):
        gamma_1 = 10 ** rng.uniform(0, 3)
        p = PhysicalParams.from_relaxation(
            omega_m=1.0, gamma_m=10 ** rng.uniform(-4, 0), gamma_1=gamma_1,
            gamma_2=gamma_1 / 2 + 10 ** rng.uniform(-1, 3), s_z0=rng.uniform(-1, 1),
            g=10 ** rng.uniform(-2, 1.5), delta=rng.uniform(-100, 100), n_bath=rng.uniform(0, 20))
        cases.append((p, 10 ** rng.uniform(-2, 2.5)))
    t0 = time.perf_counter()
    worst = 0.0
    for p, r in cases:
        d = p.dressed
        closed, quad = radial_log_weight(r, p, d), radial_log_weight_quad(r, p, d)
        worst = max(worst, abs(closed - quad) / abs(quad))
    elapsed = time.perf_counter() - t0
    passed = worst <= 1e-10 and elapsed < 1.0
    report(8, passed, f"100 random (r, params): max relative difference {worst:.2e}", elapsed)
    assert worst <= 1e-10
    assert elapsed < 1.0


def test_9_out_of_scope(report):
    report(9, None, "by design: full-quantum above-threshold steady state (N ~ 1e3 Fock levels) "
           "and laboratory-scale quantities; covered by criteria 3-7", 0.0)
    pytest.skip("full-quantum above-threshold and laboratory quantities are out of scope")
