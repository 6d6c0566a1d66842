"""Maxwell-Bloch mean-field dynamics of (alpha, s, w) at resonance."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import DressedState, PhysicalParams
from .errors import NumericalError, RegimeError
from .rates import saturation_and_intensity, threshold_inversion


@dataclass(frozen=True)
class MeanFieldState:
    alpha: complex
    s: complex
    w: float

    def check_bounds(self, tol: float = 1e-9):
        if abs(self.w) > 1 + tol or abs(self.s) > 0.5 + tol:
            raise NumericalError(f"unphysical Bloch vector: |w|={abs(self.w):.6g}, |s|={abs(self.s):.6g}")


@dataclass
class MeanFieldTrajectory:
    t: np.ndarray
    alpha: np.ndarray
    s: np.ndarray
    w: np.ndarray
    converged: bool = False

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    @property
    def final(self) -> MeanFieldState:
        return MeanFieldState(complex(self.alpha[-1]), complex(self.s[-1]), float(self.w[-1]))


def _require_resonance(p: PhysicalParams):
    if p.delta != 0:
        raise RegimeError("Maxwell-Bloch equations are implemented at delta = 0 only")


def mb_derivatives(state: MeanFieldState, p: PhysicalParams, d: DressedState) -> tuple[complex, complex, float]:
    """Time derivatives (alpha', s', w') of the factorized equations."""
    _require_resonance(p)
    a, s, w = state.alpha, state.s, state.w
    da = -p.gamma_m / 2 * a - 1j * p.g * s
    ds = -p.gamma_2 * s + 1j * p.g * a * w
    dw = -p.gamma_1 * (w - d.s_z0) + (2j * p.g * (a.conjugate() * s - a * s.conjugate())).real
    return da, ds, dw


@numba.njit(cache=True)
def _rhs(a, s, w, gm, g1, g2, g, sz0):
    da = -0.5 * gm * a - 1j * g * s
    ds = -g2 * s + 1j * g * a * w
    # 2ig(a* s - a s*) = -4 g Im(a* s)
    dw = -g1 * (w - sz0) - 4.0 * g * (a.conjugate() * s).imag
    return da, ds, dw


@numba.njit(cache=True)
def _rk4_run(a, s, w, gm, g1, g2, g, sz0, dt, n_steps, stride, window_steps, tol,
             out_t, out_a, out_s, out_w):
    """Integrate, storing every ``stride`` steps.

    Returns (stored, steps_done, converged, finite).  Convergence compares
    |alpha|^2 and w against their values one ``window_steps`` earlier.
    """
    ref_n = a.real ** 2 + a.imag ** 2
    ref_w = w
    out_t[0] = 0.0
    out_a[0] = a
    out_s[0] = s
    out_w[0] = w
    k = 1
    for i in range(1, n_steps + 1):
        k1a, k1s, k1w = _rhs(a, s, w, gm, g1, g2, g, sz0)
        k2a, k2s, k2w = _rhs(a + 0.5 * dt * k1a, s + 0.5 * dt * k1s, w + 0.5 * dt * k1w, gm, g1, g2, g, sz0)
        k3a, k3s, k3w = _rhs(a + 0.5 * dt * k2a, s + 0.5 * dt * k2s, w + 0.5 * dt * k2w, gm, g1, g2, g, sz0)
        k4a, k4s, k4w = _rhs(a + dt * k3a, s + dt * k3s, w + dt * k3w, gm, g1, g2, g, sz0)
        a = a + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        s = s + dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s)
        w = w + dt / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        if not (np.isfinite(a.real) and np.isfinite(a.imag) and np.isfinite(w)):
            return k, i, False, False
        if i % stride == 0 and k < out_a.shape[0]:
            out_t[k] = i * dt
            out_a[k] = a
            out_s[k] = s
            out_w[k] = w
            k += 1
        if window_steps > 0 and i % window_steps == 0:
            n_now = a.real ** 2 + a.imag ** 2
            dn = abs(n_now - ref_n) / max(n_now, 1e-300)
            dw_rel = abs(w - ref_w) / max(abs(w), 1e-300)
            if dn < tol and dw_rel < tol:
                if k < out_a.shape[0] and i % stride != 0:
                    out_t[k] = i * dt
                    out_a[k] = a
                    out_s[k] = s
                    out_w[k] = w
                    k += 1
                return k, i, True, True
            ref_n = n_now
            ref_w = w
    return k, n_steps, False, True


def default_seed(d: DressedState) -> MeanFieldState:
    return MeanFieldState(alpha=1.0 + 0j, s=0j, w=d.s_z0)


def integrate_mb(initial: MeanFieldState | None, p: PhysicalParams, d: DressedState, t_end: float,
                 dt: float, stride: int = 1000, stop_at_steady: bool = False,
                 steady_tol: float = 1e-6) -> MeanFieldTrajectory:
    """Fixed-step RK4 integration of the Maxwell-Bloch system.

    With ``stop_at_steady`` the run ends once |alpha|^2 and w both change by
    less than ``steady_tol`` (relative) across one 1/gamma_m window.
    """
    _require_resonance(p)
    initial = default_seed(d) if initial is None else initial
    initial.check_bounds()
    scale = max(p.gamma_1, p.gamma_2, p.g)
    if dt <= 0 or dt * scale > 0.1:
        raise NumericalError(f"dt={dt:g} violates dt*max(gamma_1, gamma_2, g) <= 0.1 (scale {scale:g})")
    n_steps = int(math.ceil(t_end / dt - 1e-9))
    stride = max(1, int(stride))
    n_out = n_steps // stride + 2
    out_t = np.empty(n_out)
    out_a = np.empty(n_out, dtype=np.complex128)
    out_s = np.empty(n_out, dtype=np.complex128)
    out_w = np.empty(n_out, dtype=np.float64)
    window = int(round(1 / (p.gamma_m * dt))) if (stop_at_steady and p.gamma_m > 0) else 0
    k, done, converged, finite = _rk4_run(
        complex(initial.alpha), complex(initial.s), float(initial.w), p.gamma_m, p.gamma_1,
        p.gamma_2, p.g, d.s_z0, dt, n_steps, stride, window, steady_tol, out_t, out_a, out_s, out_w)
    if not finite:
        raise NumericalError(f"non-finite Maxwell-Bloch state after {done} steps (t={done * dt:g})")
    traj = MeanFieldTrajectory(t=out_t[:k].copy(), alpha=out_a[:k].copy(), s=out_s[:k].copy(), w=out_w[:k].copy(),
                               converged=converged)
    traj.final.check_bounds()
    return traj


def mb_steady_state(p: PhysicalParams, d: DressedState) -> tuple[float, float]:
    """Analytic fixed point (coherent number, clamped inversion)."""
    s_th = threshold_inversion(p)
    if d.s_z0 <= s_th:
        return 0.0, d.s_z0
    _, n_las = saturation_and_intensity(p, d)
    return n_las, s_th


def linear_growth_rate(p: PhysicalParams, d: DressedState) -> float:
    """Small-amplitude growth rate of |alpha| from the linearized equations."""
    _require_resonance(p)
    return -p.gamma_m / 2 + p.g ** 2 * d.s_z0 / p.gamma_2


def depleted_inversion(alpha2: float, p: PhysicalParams, d: DressedState) -> float:
    """w(alpha) with the coherence eliminated adiabatically."""
    return d.s_z0 / (1 + 4 * p.g ** 2 * alpha2 / (p.gamma_1 * p.gamma_2))
