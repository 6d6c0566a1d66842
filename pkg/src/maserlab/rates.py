"""Closed-form rates of the reduced (spin-eliminated) mechanical dynamics.

Every function takes the physical parameters and the dressed spin state
separately so that the inversion can be varied without rebuilding ``p``;
the pump rates stored in ``p`` only matter through ``gamma_1`` and
``gamma_2`` here.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .core import HBAR, K_B, DressedState, PhysicalParams
from .errors import AboveThresholdError, BelowThresholdError, NoThresholdError, RegimeError


@dataclass(frozen=True)
class RateSet:
    gamma_minus: float
    gamma_plus: float
    gamma_opt: float
    gamma_eff_n: float
    lamb_shift: float
    s_z_th: float
    n_sat: float
    n_las: float
    a_minus: float
    a_plus: float
    d_w: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class DesignWindow:
    gamma_tot: float
    n_eff: float
    s_z_th_tot: float
    threshold_occupation_product: float
    t_eff_max: float | None = None


def _require_linewidth(p: PhysicalParams) -> float:
    if p.gamma_2 <= 0:
        raise RegimeError("gamma_2 = 0: singular Lorentzian linewidth")
    return p.gamma_2


def lorentzian_gain(p: PhysicalParams) -> float:
    """G(delta) = g^2 gamma_2 / (gamma_2^2 + delta^2)."""
    g2 = _require_linewidth(p)
    return p.g ** 2 * g2 / (g2 ** 2 + p.delta ** 2)


def transition_rates(p: PhysicalParams, d: DressedState) -> tuple[float, float]:
    """Spin-induced downward and upward phonon rates (Gamma_-, Gamma_+)."""
    G = lorentzian_gain(p)
    return 2 * G * d.p_down, 2 * G * d.p_up


def gain(p: PhysicalParams, d: DressedState) -> tuple[float, float]:
    """Return (Gamma_opt, gamma_eff_n); a negative gamma_eff_n means net gain."""
    gamma_opt = -2 * lorentzian_gain(p) * d.s_z0
    return gamma_opt, p.gamma_m + gamma_opt


def lamb_shift(p: PhysicalParams, d: DressedState) -> float:
    g2 = _require_linewidth(p)
    return -p.g ** 2 * d.s_z0 * p.delta / (g2 ** 2 + p.delta ** 2)


def threshold_inversion(p: PhysicalParams) -> float:
    if p.g == 0:
        raise NoThresholdError("g = 0: the maser threshold is unreachable")
    g2 = _require_linewidth(p)
    return p.gamma_m / (2 * p.g ** 2) * (g2 ** 2 + p.delta ** 2) / g2


def saturation_number(p: PhysicalParams) -> float:
    """n_sat = gamma_1 / (4 G(delta)); infinite when g = 0."""
    G = lorentzian_gain(p)
    return math.inf if G == 0 else p.gamma_1 / (4 * G)


def saturation_and_intensity(p: PhysicalParams, d: DressedState) -> tuple[float, float]:
    """Return (n_sat, n_las); n_las is 0 at or below threshold."""
    if p.g == 0:
        raise NoThresholdError("g = 0: no saturation scale")
    n_sat = saturation_number(p)
    s_th = threshold_inversion(p)
    n_las = n_sat * (d.s_z0 / s_th - 1) if d.s_z0 > s_th else 0.0
    return n_sat, n_las


def n_las_resonant(p: PhysicalParams, d: DressedState) -> float:
    """On-resonance rewrite gamma_1 S_z0 / (2 gamma_m) - n_sat (not clipped at 0)."""
    if p.delta != 0:
        raise RegimeError("the rewritten n_las form holds only at delta = 0")
    return p.gamma_1 * d.s_z0 / (2 * p.gamma_m) - p.gamma_1 * p.gamma_2 / (4 * p.g ** 2)


def total_rates(p: PhysicalParams, d: DressedState) -> tuple[float, float]:
    """(A_-, A_+): bath plus spin-induced jump rates."""
    gm, gp = transition_rates(p, d)
    return p.gamma_m * (p.n_bath + 1) + gm, p.gamma_m * p.n_bath + gp


def below_threshold_occupation(p: PhysicalParams, d: DressedState) -> float:
    a_minus, a_plus = total_rates(p, d)
    gamma_eff = a_minus - a_plus
    if gamma_eff <= 0:
        raise AboveThresholdError(
            f"gamma_eff = {gamma_eff:.4g} <= 0: linear theory diverges, "
            "use saturation_and_intensity instead")
    return a_plus / gamma_eff


def drift_mu(n, p: PhysicalParams, d: DressedState):
    """Saturated amplitude drift mu(n); ``n`` may be a numpy array."""
    G = lorentzian_gain(p)
    if G == 0:
        return -p.gamma_m / 2 + 0 * n
    return -p.gamma_m / 2 + G * d.s_z0 / (1 + n / saturation_number(p))


def diffusion_dw(p: PhysicalParams, d: DressedState) -> float:
    """Wigner diffusion constant from the unsaturated jump rates."""
    a_minus, a_plus = total_rates(p, d)
    return (a_minus + a_plus) / 4


def rate_set(p: PhysicalParams, d: DressedState | None = None) -> RateSet:
    """Every derived quantity at one operating point.

    Threshold-related entries are ``inf`` / 0 when g = 0.
    """
    d = p.dressed if d is None else d
    gm, gp = transition_rates(p, d)
    gamma_opt, gamma_eff = gain(p, d)
    a_minus, a_plus = total_rates(p, d)
    if p.g > 0:
        s_th = threshold_inversion(p)
        n_sat, n_las = saturation_and_intensity(p, d)
    else:
        s_th, n_sat, n_las = math.inf, math.inf, 0.0
    return RateSet(gamma_minus=gm, gamma_plus=gp, gamma_opt=gamma_opt, gamma_eff_n=gamma_eff,
                   lamb_shift=lamb_shift(p, d), s_z_th=s_th, n_sat=n_sat, n_las=n_las,
                   a_minus=a_minus, a_plus=a_plus, d_w=(a_minus + a_plus) / 4)


def visibility_bound(p: PhysicalParams, d: DressedState) -> float:
    """Largest effective temperature (K) at which n_las still exceeds n_eff."""
    _, n_las = saturation_and_intensity(p, d)
    if n_las <= 0:
        raise BelowThresholdError("below threshold: no coherent component to observe")
    return HBAR * p.omega_m / K_B * n_las


def cooling_tradeoff(p: PhysicalParams, gamma_cool: float, n_cool: float = 0.0,
                     d: DressedState | None = None) -> DesignWindow:
    """Effect of a continuous cold-damping channel on occupation and threshold.

    ``t_eff_max`` is filled in when ``d`` is given: the visibility bound with the
    threshold raised by the extra damping (0 K if that pushes the point below
    threshold).
    """
    if gamma_cool < 0 or n_cool < 0:
        raise RegimeError("gamma_cool and n_cool must be >= 0")
    if p.g == 0:
        raise NoThresholdError("g = 0: no threshold to trade against")
    gamma_tot = p.gamma_m + gamma_cool
    n_eff = (p.gamma_m * p.n_bath + gamma_cool * n_cool) / gamma_tot
    s_th_tot = gamma_tot * (p.gamma_2 ** 2 + p.delta ** 2) / (2 * p.g ** 2 * p.gamma_2)
    t_eff = None
    if d is not None:
        n_las = saturation_number(p) * (d.s_z0 / s_th_tot - 1) if d.s_z0 > s_th_tot else 0.0
        t_eff = HBAR * p.omega_m / K_B * n_las
    return DesignWindow(gamma_tot=gamma_tot, n_eff=n_eff, s_z_th_tot=s_th_tot,
                        threshold_occupation_product=s_th_tot * n_eff, t_eff_max=t_eff)


def table_two_row(p: PhysicalParams) -> dict[str, float]:
    """On-resonance benchmarks for one coupling: g, threshold, peak gain, margin, n_sat."""
    g2 = p.gamma_2
    gmax = 2 * p.g ** 2 / g2
    return {
        "g": p.g,
        "s_z_th": p.gamma_m * g2 / (2 * p.g ** 2),
        "gamma_opt_max": gmax,
        "gain_margin": gmax / p.gamma_m,
        "n_sat": p.gamma_1 * g2 / (4 * p.g ** 2),
    }
