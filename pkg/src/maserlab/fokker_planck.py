"""Stationary radial solution of the rotationally symmetric Fokker-Planck equation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import DressedState, PhysicalParams
from .errors import NumericalError
from .rates import diffusion_dw, drift_mu, gain, lorentzian_gain, saturation_and_intensity, saturation_number

GRID_POINTS = 4096
TRUNCATION = 1e-12


@dataclass
class RadialSolution:
    r_grid: np.ndarray
    log_weight: np.ndarray
    density: np.ndarray
    mean_n: float

    @property
    def mode_r(self) -> float:
        return float(self.r_grid[np.argmax(self.density)])

    def integral(self) -> float:
        return float(integrate.simpson(self.density, x=self.r_grid))

    def cdf(self) -> np.ndarray:
        return integrate.cumulative_simpson(self.density, x=self.r_grid, initial=0.0)

    def moment_n(self, k: int) -> float:
        """<n^k> with n = r^2/2."""
        return float(integrate.simpson((self.r_grid ** 2 / 2) ** k * self.density, x=self.r_grid))

    @property
    def g2(self) -> float:
        m1 = self.mean_n
        return (self.moment_n(2) - m1) / m1 ** 2


def radial_log_weight(r, p: PhysicalParams, d: DressedState):
    """(1/D_W) * integral_0^r mu(s^2/2) s ds in closed form.

    The saturating part G S n_sat ln(1 + r^2/(2 n_sat)) is written as
    (gamma_1 S/4) ln(1 + 2 G r^2/gamma_1), which stays finite as g -> 0.
    """
    r = np.asarray(r, dtype=float)
    G = lorentzian_gain(p)
    sat = p.gamma_1 * d.s_z0 / 4 * np.log1p(2 * G * r ** 2 / p.gamma_1)
    return (-p.gamma_m * r ** 2 / 4 + sat) / diffusion_dw(p, d)


def radial_log_weight_quad(r: float, p: PhysicalParams, d: DressedState) -> float:
    """Same quantity by adaptive quadrature of mu(s^2/2) s."""
    val, _ = integrate.quad(lambda s: float(drift_mu(s * s / 2, p, d)) * s, 0.0, r,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return val / diffusion_dw(p, d)


def _initial_r_max(p: PhysicalParams, d: DressedState) -> float:
    d_w = diffusion_dw(p, d)
    n_las = 0.0
    if p.g > 0:
        _, n_las = saturation_and_intensity(p, d)
    n_hi = n_las
    if n_las > 0:
        # |d mu/dn| at the limit cycle
        G = lorentzian_gain(p)
        n_sat = saturation_number(p)
        slope = G * d.s_z0 / (n_sat * (1 + n_las / n_sat) ** 2)
        # the ring has a standard deviation in n of about sqrt(D_W/slope)
        n_hi = n_las + 20 * math.sqrt(max(1.0, d_w / slope))
    mu0 = -gain(p, d)[1] / 2
    if mu0 < 0:
        n_hi = max(n_hi, 40 * d_w / abs(mu0))
    return math.sqrt(2 * max(n_hi, 1.0))


def stationary_radial_distribution(p: PhysicalParams, d: DressedState | None = None,
                                   n_points: int = GRID_POINTS, r_max: float | None = None,
                                   max_doublings: int = 20) -> RadialSolution:
    """Normalized P_r on [0, r_max], doubling r_max until the edge density is negligible.

    Normalization, moments and the CDF use composite Simpson on the uniform grid.
    """
    d = p.dressed if d is None else d
    if p.gamma_m == 0:
        raise NumericalError("gamma_m = 0: no normalizable stationary state")
    auto = r_max is None
    r_max = _initial_r_max(p, d) if auto else r_max
    for _ in range(max_doublings + 1):
        r = np.linspace(0.0, r_max, n_points)
        lw = radial_log_weight(r, p, d)
        with np.errstate(divide="ignore"):
            logp = np.log(r) + lw
        logp[0] = -np.inf
        w = np.exp(logp - logp.max())
        if w[-1] < TRUNCATION:
            break
        if not auto:
            raise NumericalError(f"grid truncated: density at r_max is {w[-1]:.3g} of peak")
        r_max *= 2
    else:
        raise NumericalError("could not find a grid that contains the stationary density")
    density = w / integrate.simpson(w, x=r)
    mean_n = float(integrate.simpson(r ** 2 / 2 * density, x=r))
    return RadialSolution(r_grid=r, log_weight=lw, density=density, mean_n=mean_n)


def linear_stationary_mean(p: PhysicalParams, d: DressedState) -> float:
    """Wigner-ordered mean D_W/|mu(0)| of the unsaturated (Gaussian) theory."""
    gamma_eff = gain(p, d)[1]
    if gamma_eff <= 0:
        raise NumericalError("linear theory has no stationary state above threshold")
    return diffusion_dw(p, d) / (gamma_eff / 2)
