"""Run recipes shared by the command line, the scripts and the acceptance tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import PhysicalParams, table_one
from .fokker_planck import RadialSolution, stationary_radial_distribution
from .langevin import (Estimate, LangevinConfig, RadialDistribution, TrajectoryEnsemble, WignerGrid,
                       angular_uniformity, g2_zero, max_stable_dt, plateau_mean, radial_histogram,
                       simulate_ensemble, stationary_window, wigner_reconstruct)
from .rates import gain, saturation_and_intensity, table_two_row, threshold_inversion

TABLE_TWO_ETAS = (0.05, 0.10, 0.25)
PANEL_A_INVERSIONS = (-0.2, -0.05, 0.0, 0.016, 0.05, 0.2)


def table_two(p: PhysicalParams | None = None, etas=TABLE_TWO_ETAS) -> list[dict[str, float]]:
    """One benchmark row per eta, with g = eta * omega_m."""
    p = table_one() if p is None else p
    rows = []
    for eta in etas:
        row = {"eta": eta}
        row.update(table_two_row(replace(p, g=eta * p.omega_m)))
        rows.append(row)
    return rows


def gain_map(p: PhysicalParams, inversions=PANEL_A_INVERSIONS, x=None) -> tuple[np.ndarray, np.ndarray]:
    """Gamma_opt/gamma_m on a grid of delta/gamma_2 (rows) for each inversion (columns)."""
    x = np.linspace(-5, 5, 201) if x is None else np.asarray(x, dtype=float)
    out = np.empty((len(x), len(inversions)))
    for j, s in enumerate(inversions):
        ps = p.with_inversion(s)
        for i, xi in enumerate(x):
            q = replace(ps, delta=xi * p.gamma_2)
            out[i, j] = gain(q, q.dressed)[0] / p.gamma_m
    return x, out


@dataclass
class RingRun:
    ensemble: TrajectoryEnsemble
    window: tuple[float, float]
    plateau: Estimate
    fp: RadialSolution
    n_las: float
    radial: RadialDistribution
    wigner: WignerGrid
    angular_p: float

    @property
    def r0(self) -> float:
        return math.sqrt(2 * self.n_las)

    @property
    def z_score(self) -> float:
        return (self.plateau.value - self.fp.mean_n) / self.plateau.stderr


def ring_run(p: PhysicalParams, n_traj: int = 2000, t_end: float = 1000.0, dt: float = 0.1,
             seed: int = 0, threads: int | None = None, margin: float = 2.0, stride: int = 10,
             bins: int = 200, cell: float = 0.25) -> RingRun:
    """Above-threshold ensemble from the bath state with every ring diagnostic."""
    d = p.dressed
    cfg = LangevinConfig(n_traj=n_traj, dt=dt, t_end=t_end, seed=seed, output_stride=stride)
    ens = simulate_ensemble(cfg, p, d, threads=threads)
    window = stationary_window(ens, margin=margin)
    _, n_las = saturation_and_intensity(p, d)
    r0 = math.sqrt(2 * n_las)
    return RingRun(ensemble=ens, window=window, plateau=plateau_mean(ens, window),
                   fp=stationary_radial_distribution(p, d), n_las=n_las,
                   radial=radial_histogram(ens, window, bins=bins),
                   wigner=wigner_reconstruct(ens, window, cell=cell),
                   angular_p=angular_uniformity(ens, r0, band=0.25 * r0))


def g2_settings(p: PhysicalParams, dt_cap: float = 0.25, samples: int = 400) -> LangevinConfig:
    """Step, duration and stride scaled to the relaxation time at this inversion.

    Near threshold the relaxation slows down; the run length is capped at 4000.
    """
    d = p.dressed
    gamma_eff = abs(gain(p, d)[1])
    t_end = min(4000.0, max(600.0, 60.0 / gamma_eff if gamma_eff > 0 else math.inf))
    dt = min(dt_cap, max_stable_dt(p, d))
    stride = max(1, int(round(t_end / dt / samples)))
    return LangevinConfig(dt=dt, t_end=t_end, output_stride=stride)


@dataclass(frozen=True)
class G2Point:
    s_z0: float
    g2: Estimate
    g2_normal: Estimate
    mean_n: float
    t_end: float
    dt: float


def g2_sweep(p: PhysicalParams, inversions, n_traj: int = 2000, seed: int = 0,
             threads: int | None = None) -> list[G2Point]:
    """g2(0) over a grid of inversions; each point discards the first third of its run."""
    out = []
    for k, s in enumerate(inversions):
        ps = p.with_inversion(float(s))
        base = g2_settings(ps)
        cfg = replace(base, n_traj=n_traj, seed=seed + k)
        ens = simulate_ensemble(cfg, ps, threads=threads)
        window = (cfg.t_end / 3, float(ens.times[-1]))
        out.append(G2Point(float(s), g2_zero(ens, window), g2_zero(ens, window, ordering="normal"),
                           plateau_mean(ens, window).value, cfg.t_end, cfg.dt))
    return out


def crossover_grid(p: PhysicalParams) -> np.ndarray:
    """Inversions spanning cooling, the thermal side, threshold and the coherent side."""
    s_th = threshold_inversion(p)
    return np.array([-0.2, -0.05, 0.0, s_th / 2, s_th, 2 * s_th, 0.05, 0.2])
