"""Ito Langevin simulation of the saturated amplitude dynamics and its diagnostics.

Quadratures are z = (a + a^dag)/sqrt2, p = (a - a^dag)/(i sqrt2); the phonon
number used everywhere here is the semiclassical n = (z^2 + p^2)/2, which is
the symmetric-ordered (Wigner) value and exceeds <a^dag a> by 1/2.

Each trajectory draws from its own counter-based Philox stream keyed by
(seed, trajectory index), so results do not depend on how trajectories are
split between workers.
"""
from __future__ import annotations

import hashlib
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np
from scipy import signal, stats

from .core import DressedState, PhysicalParams
from .errors import ConfigError, NumericalError
from .rates import diffusion_dw, gain, lorentzian_gain, saturation_number

_CHUNK = 512
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class LangevinConfig:
    """Ensemble settings.

    ``init`` is ``"thermal"`` (isotropic Gaussian cloud with Wigner variance
    n0 + 1/2, ``n0`` defaulting to the bath occupation) or ``"point"``
    (every trajectory starts at ``point``).  ``saturate=False`` replaces the
    saturated drift by its small-signal value, and ``noise_scale`` multiplies
    the noise amplitude (0 gives the deterministic limit).
    """

    n_traj: int = 2000
    dt: float = 0.1
    t_end: float = 600.0
    seed: int = 0
    omega_rot: float = 0.0
    output_stride: int = 10
    init: str = "thermal"
    n0: float | None = None
    point: tuple[float, float] = (0.0, 0.0)
    saturate: bool = True
    noise_scale: float = 1.0

    def __post_init__(self):
        if self.n_traj < 1:
            raise ConfigError("n_traj must be >= 1")
        if not self.dt > 0 or not self.t_end > 0:
            raise ConfigError("dt and t_end must be > 0")
        if self.output_stride < 1:
            raise ConfigError("output_stride must be >= 1")
        if self.init not in ("thermal", "point"):
            raise ConfigError(f"unknown initial condition {self.init!r}")
        if self.noise_scale < 0:
            raise ConfigError("noise_scale must be >= 0")
        if not 0 <= self.seed <= _MASK64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9))


@dataclass
class TrajectoryEnsemble:
    times: np.ndarray
    samples: np.ndarray  # (n_traj, n_times, 2) holding (z, p)
    config: LangevinConfig
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> np.ndarray:
        return 0.5 * (self.samples[..., 0] ** 2 + self.samples[..., 1] ** 2)

    @property
    def mean_n(self) -> np.ndarray:
        return self.n.mean(axis=0)

    @property
    def var_n(self) -> np.ndarray:
        return self.n.var(axis=0)

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.samples).tobytes()).hexdigest()

    def window_mask(self, window: tuple[float, float] | None) -> np.ndarray:
        if window is None:
            window = stationary_window(self)
        t0, t1 = window
        mask = (self.times >= t0) & (self.times <= t1)
        if not mask.any():
            raise ConfigError(f"window {window} contains no stored times")
        return mask


@dataclass(frozen=True)
class Drift:
    """Coefficients of mu(n) = -gamma_m/2 + gain/(1 + n/n_sat), plus D_W."""

    half_loss: float
    gain: float
    inv_n_sat: float
    d_w: float

    @classmethod
    def from_params(cls, p: PhysicalParams, d: DressedState, saturate: bool = True) -> "Drift":
        G = lorentzian_gain(p)
        d_w = diffusion_dw(p, d)
        if not saturate or G == 0:
            return cls(half_loss=p.gamma_m / 2, gain=G * d.s_z0, inv_n_sat=0.0, d_w=d_w)
        return cls(half_loss=p.gamma_m / 2, gain=G * d.s_z0, inv_n_sat=1 / saturation_number(p), d_w=d_w)

    def mu(self, n):
        return -self.half_loss + self.gain / (1 + n * self.inv_n_sat)


def max_stable_dt(p: PhysicalParams, d: DressedState, omega_rot: float = 0.0) -> float:
    """Largest step allowed by dt <= 0.05 / max(|mu(0)|, gamma_m, Omega_m, D_W/n_sat)."""
    mu0 = -gain(p, d)[1] / 2
    rates = [abs(mu0), p.gamma_m, abs(omega_rot)]
    if p.g > 0:
        rates.append(diffusion_dw(p, d) / saturation_number(p))
    scale = max(rates)
    return math.inf if scale == 0 else 0.05 / scale


def langevin_step(z, p_q, params: PhysicalParams, d: DressedState, dt: float, xi_z, xi_p,
                  omega_rot: float = 0.0, saturate: bool = True, noise_scale: float = 1.0):
    """One Euler-Maruyama step; ``xi_z``, ``xi_p`` are standard normals."""
    drift = Drift.from_params(params, d, saturate)
    z = np.asarray(z, dtype=float)
    p_q = np.asarray(p_q, dtype=float)
    n = 0.5 * (z * z + p_q * p_q)
    mu = drift.mu(n)
    amp = noise_scale * math.sqrt(2 * drift.d_w * dt)
    z_new = z + (mu * z + omega_rot * p_q) * dt + amp * xi_z
    p_new = p_q + (mu * p_q - omega_rot * z) * dt + amp * xi_p
    if not (np.all(np.isfinite(z_new)) and np.all(np.isfinite(p_new))):
        raise NumericalError("non-finite Langevin state")
    return z_new, p_new


@numba.njit(cache=True)
def _em_chunk(z, p, noise, n_steps, dt, half_loss, gain_, inv_n_sat, omega, amp, stride,
              step0, out, out_k0):
    """Advance trajectories through ``n_steps`` steps, storing every ``stride``.

    ``noise`` has shape (n_traj, n_steps, 2).  Returns False on overflow.
    """
    for i in range(z.shape[0]):
        zi = z[i]
        pi = p[i]
        k = out_k0
        for j in range(n_steps):
            n = 0.5 * (zi * zi + pi * pi)
            mu = -half_loss + gain_ / (1.0 + n * inv_n_sat)
            zn = zi + (mu * zi + omega * pi) * dt + amp * noise[i, j, 0]
            pn = pi + (mu * pi - omega * zi) * dt + amp * noise[i, j, 1]
            zi = zn
            pi = pn
            if (step0 + j + 1) % stride == 0:
                out[i, k, 0] = zi
                out[i, k, 1] = pi
                k += 1
        if not (np.isfinite(zi) and np.isfinite(pi)):
            return False
        z[i] = zi
        p[i] = pi
    return True


def _stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(int(index) << 64) | (int(seed) & _MASK64)))


def _run_block(indices: np.ndarray, cfg: LangevinConfig, drift: Drift, n0: float, n_out: int) -> np.ndarray:
    gens = [_stream(cfg.seed, i) for i in indices]
    m = len(indices)
    init = np.array([g.standard_normal(2) for g in gens]).reshape(m, 2)
    if cfg.init == "thermal":
        init = init * math.sqrt(n0 + 0.5)
    else:
        init = np.tile(np.asarray(cfg.point, dtype=float), (m, 1))
    z = init[:, 0].copy()
    p = init[:, 1].copy()
    out = np.empty((m, n_out, 2))
    out[:, 0, 0] = z
    out[:, 0, 1] = p
    amp = cfg.noise_scale * math.sqrt(2 * drift.d_w * cfg.dt)
    done, k = 0, 1
    while done < cfg.n_steps:
        steps = min(_CHUNK, cfg.n_steps - done)
        noise = np.stack([g.standard_normal((steps, 2)) for g in gens])
        ok = _em_chunk(z, p, noise, steps, cfg.dt, drift.half_loss, drift.gain, drift.inv_n_sat,
                       cfg.omega_rot, amp, cfg.output_stride, done, out, k)
        if not ok:
            raise NumericalError(f"Langevin trajectory overflowed near step {done + steps}")
        k += (done + steps) // cfg.output_stride - done // cfg.output_stride
        done += steps
    return out


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("MASERLAB_THREADS", "1") or 1)
    return max(1, int(threads))


def simulate_ensemble(cfg: LangevinConfig, p: PhysicalParams, d: DressedState | None = None,
                      threads: int | None = None, check_step: bool = True) -> TrajectoryEnsemble:
    """Integrate ``cfg.n_traj`` independent trajectories with Euler-Maruyama."""
    d = p.dressed if d is None else d
    if check_step:
        dt_max = max_stable_dt(p, d, cfg.omega_rot)
        if cfg.dt > dt_max * (1 + 1e-12):
            raise NumericalError(f"dt={cfg.dt:g} exceeds the stability bound {dt_max:g}")
    drift = Drift.from_params(p, d, cfg.saturate)
    n0 = p.n_bath if cfg.n0 is None else cfg.n0
    n_out = cfg.n_steps // cfg.output_stride + 1
    threads = min(resolve_threads(threads), cfg.n_traj)
    blocks = np.array_split(np.arange(cfg.n_traj), threads)
    if threads == 1:
        parts = [_run_block(blocks[0], cfg, drift, n0, n_out)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda b: _run_block(b, cfg, drift, n0, n_out), blocks))
    samples = np.concatenate(parts, axis=0)
    times = np.arange(n_out) * cfg.output_stride * cfg.dt
    return TrajectoryEnsemble(times=times, samples=samples, config=cfg,
                              meta={"seed": cfg.seed, "n0": n0, "d_w": drift.d_w,
                                    "rng": "Philox per trajectory, key=(index<<64)|seed"})


# --- diagnostics -----------------------------------------------------------

def saturation_time(ens: TrajectoryEnsemble) -> float:
    """First time <n> reaches 99% of its average over the final 10% of the run."""
    mean_n = ens.mean_n
    tail = max(1, len(mean_n) // 10)
    target = 0.99 * mean_n[-tail:].mean()
    hits = np.nonzero(mean_n >= target)[0]
    return float(ens.times[hits[0]]) if hits.size else float(ens.times[-1])


def stationary_window(ens: TrajectoryEnsemble, margin: float = 1.0) -> tuple[float, float]:
    """(margin * t_sat, t_end); margin > 1 discards more of the approach to the plateau."""
    start = margin * saturation_time(ens)
    end = float(ens.times[-1])
    if start >= end:
        raise NumericalError(f"run ends at {end:g} before the window start {start:g}; increase t_end")
    return start, end


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    window: tuple[float, float]


def plateau_mean(ens: TrajectoryEnsemble, window: tuple[float, float] | None = None) -> Estimate:
    """Time-and-ensemble average of n; the error bar treats trajectories as independent."""
    mask = ens.window_mask(window)
    per_traj = ens.n[:, mask].mean(axis=1)
    err = per_traj.std(ddof=1) / math.sqrt(len(per_traj)) if len(per_traj) > 1 else math.nan
    t = ens.times[mask]
    return Estimate(float(per_traj.mean()), float(err), (float(t[0]), float(t[-1])))


@dataclass
class RadialDistribution:
    bin_edges: np.ndarray
    density: np.ndarray

    @property
    def r_mid(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])

    @property
    def mode(self) -> float:
        return float(self.r_mid[np.argmax(self.density)])

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.r_mid))


def radial_histogram(ens: TrajectoryEnsemble, window: tuple[float, float] | None = None,
                     bins: int | np.ndarray = 200) -> RadialDistribution:
    """Density of r = sqrt(z^2 + p^2) pooled over trajectories and window times."""
    mask = ens.window_mask(window)
    s = ens.samples[:, mask, :]
    r = np.hypot(s[..., 0], s[..., 1]).ravel()
    counts, edges = np.histogram(r, bins=bins)
    mid = 0.5 * (edges[1:] + edges[:-1])
    density = counts.astype(float)
    if len(mid) == 1:
        density = density / (counts.sum() * (edges[1] - edges[0]))
    else:
        density = density / np.trapezoid(density, mid)
    return RadialDistribution(bin_edges=edges, density=density)


def g2_from_n(n: np.ndarray) -> float:
    m1 = n.mean()
    if m1 == 0:
        raise NumericalError("<n> = 0: g2 undefined")
    return float(((n * n).mean() - m1) / m1 ** 2)


def g2_zero(ens: TrajectoryEnsemble, window: tuple[float, float] | None = None,
            ordering: str = "sample") -> Estimate:
    """g2(0) with a leave-one-trajectory-out jackknife error.

    ``ordering="sample"`` applies (<n^2> - <n>)/<n>^2 to n = (z^2 + p^2)/2
    directly.  Samples are symmetric-ordered, so for small occupations this
    is biased low by about 1/<n>; ``ordering="normal"`` converts the moments
    first (<a^+a> = <n> - 1/2, <a^+a^+aa> = <n^2> - 2<n> + 1/2) and gives
    the normally ordered correlation.
    """
    if ordering not in ("sample", "normal"):
        raise ConfigError(f"unknown ordering {ordering!r}")
    mask = ens.window_mask(window)
    n = ens.n[:, mask]
    m = n.shape[1]
    k = n.shape[0]
    s1 = n.sum(axis=1)
    s2 = (n * n).sum(axis=1)

    def estimate(m1, m2):
        if ordering == "normal":
            return (m2 - 2 * m1 + 0.5) / (m1 - 0.5) ** 2
        return (m2 - m1) / m1 ** 2

    total1, total2 = s1.sum(), s2.sum()
    if total1 == 0:
        raise NumericalError("<n> = 0: g2 undefined")
    full = estimate(total1 / (k * m), total2 / (k * m))
    if k > 1:
        c = (k - 1) * m
        loo = estimate((total1 - s1) / c, (total2 - s2) / c)
        err = math.sqrt((k - 1) / k * np.sum((loo - loo.mean()) ** 2))
    else:
        err = math.nan
    t = ens.times[mask]
    return Estimate(float(full), float(err), (float(t[0]), float(t[-1])))


@dataclass
class WignerGrid:
    z: np.ndarray  # cell centres
    p: np.ndarray
    W: np.ndarray  # indexed [iz, ip]

    @property
    def cell(self) -> float:
        return float(self.z[1] - self.z[0])

    def integral(self) -> float:
        return float(self.W.sum() * self.cell ** 2)

    def radial_profile(self, bins: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Angle-averaged W versus radius."""
        Z, P = np.meshgrid(self.z, self.p, indexing="ij")
        R = np.hypot(Z, P)
        bins = bins or int(R.max() / self.cell)
        sums, edges = np.histogram(R, bins=bins, weights=self.W)
        counts, _ = np.histogram(R, bins=edges)
        prof = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
        return 0.5 * (edges[1:] + edges[:-1]), prof

    def ring_radius(self) -> float:
        r, prof = self.radial_profile()
        return float(r[np.argmax(prof)])


KERNEL_SIGMA = 1 / math.sqrt(2)  # per-axis width of (1/pi) exp(-dz^2 - dp^2)


def vacuum_kernel(dz, dp):
    return np.exp(-dz ** 2 - dp ** 2) / math.pi


def wigner_from_points(points: np.ndarray, cell: float = 0.25, half_width: float | None = None) -> WignerGrid:
    """Histogram ``points`` (shape (m, 2)) on a square grid and smooth with the vacuum kernel."""
    if cell > KERNEL_SIGMA:
        raise ConfigError(f"grid cell {cell} wider than the kernel width {KERNEL_SIGMA:.3f}")
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    support = np.abs(points).max() if points.size else 0.0
    need = support + 3 * KERNEL_SIGMA
    if half_width is None:
        half_width = need
    elif half_width < need:
        raise ConfigError(f"grid half-width {half_width} does not cover the samples plus 3 kernel widths ({need:.3g})")
    m = int(math.ceil(half_width / cell))
    centres = np.arange(-m, m + 1) * cell
    edges = np.concatenate([centres - cell / 2, [centres[-1] + cell / 2]])
    hist, _, _ = np.histogram2d(points[:, 0], points[:, 1], bins=[edges, edges])
    k = int(math.ceil(6 * KERNEL_SIGMA / cell))
    offs = np.arange(-k, k + 1) * cell
    kern = vacuum_kernel(offs[:, None], offs[None, :])
    W = signal.fftconvolve(hist, kern, mode="same")
    W = np.clip(W, 0.0, None)
    W /= W.sum() * cell ** 2
    return WignerGrid(z=centres, p=centres.copy(), W=W)


def wigner_reconstruct(ens: TrajectoryEnsemble, window: tuple[float, float] | None = None,
                       cell: float = 0.25, half_width: float | None = None) -> WignerGrid:
    mask = ens.window_mask(window)
    return wigner_from_points(ens.samples[:, mask, :].reshape(-1, 2), cell, half_width)


def angular_uniformity(ens: TrajectoryEnsemble, ring_radius: float, band: float,
                       bins: int = 16) -> float:
    """Chi-square p-value for uniform phase among final samples inside the ring band.

    One sample per trajectory keeps the counts independent.
    """
    last = ens.samples[:, -1, :]
    r = np.hypot(last[:, 0], last[:, 1])
    sel = np.abs(r - ring_radius) <= band
    if sel.sum() < 5 * bins:
        raise NumericalError(f"only {int(sel.sum())} samples in the ring band")
    theta = np.arctan2(last[sel, 1], last[sel, 0])
    counts, _ = np.histogram(theta, bins=bins, range=(-math.pi, math.pi))
    return float(stats.chisquare(counts).pvalue)
