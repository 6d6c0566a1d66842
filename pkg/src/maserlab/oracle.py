"""Full spin x truncated-Fock master equation, used to check the reduced theory.

The frame co-rotates at omega_m: the oscillator has no free term and the spin
carries the residual detuning, H = delta sz/2 + g (a s+ + a^dag s-).  Basis
index is ``s * (N + 1) + n`` with s = 0 for the upper dressed state.

The generator conserves the excitation difference k = e(i) - e(j) between
row and column (e = n + [spin up]), so rho splits into independent blocks.
``evolve`` steps each populated block with RK4; ``Generator.apply`` is the
plain operator-form Lindbladian used as an independent cross-check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .core import DressedState, PhysicalParams
from .errors import ConfigError, NumericalError

TAIL_CUTOFF = 1e-6
POSITIVITY_FLOOR = -1e-8


def fock_ops(N: int) -> dict[str, np.ndarray]:
    """Annihilation, spin and identity operators on C^2 (x) C^(N+1)."""
    a = np.diag(np.sqrt(np.arange(1, N + 1, dtype=float)), k=1)
    i_f = np.eye(N + 1)
    i_s = np.eye(2)
    s_plus = np.array([[0.0, 1.0], [0.0, 0.0]])
    s_z = np.diag([1.0, -1.0])
    return {
        "a": np.kron(i_s, a),
        "sp": np.kron(s_plus, i_f),
        "sm": np.kron(s_plus.T, i_f),
        "sz": np.kron(s_z, i_f),
        "num": np.kron(i_s, a.T @ a),
    }


@dataclass
class DensityMatrix:
    """State on spin (x) Fock(N+1); the invariants are monitored, not enforced."""
    fock_dim: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        dim = 2 * self.fock_dim
        if self.data.shape != (dim, dim):
            raise ConfigError(f"density matrix must be {dim}x{dim}, got {self.data.shape}")

    @property
    def N(self) -> int:
        return self.fock_dim - 1

    def trace(self) -> float:
        return float(np.trace(self.data).real)

    def hermiticity_error(self) -> float:
        return float(np.abs(self.data - self.data.conj().T).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))[0])

    def populations(self) -> np.ndarray:
        """Diagonal as a (2, N+1) array: row 0 is the upper spin state."""
        return np.diag(self.data).real.reshape(2, self.fock_dim)


@dataclass
class Generator:
    N: int
    H: np.ndarray
    jumps: list[tuple[float, np.ndarray]]
    scale: float  # rate scale entering the step-size rule

    @property
    def dim(self) -> int:
        return 2 * (self.N + 1)

    def __post_init__(self):
        self.H_eff = self.H.astype(complex)
        for rate, L in self.jumps:
            self.H_eff = self.H_eff - 0.5j * rate * (L.conj().T @ L)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """d rho/dt in operator form."""
        out = -1j * (self.H_eff @ rho) + 1j * (rho @ self.H_eff.conj().T)
        for rate, L in self.jumps:
            out = out + rate * (L @ rho @ L.conj().T)
        return out

    def sector_generator(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Dense restriction of the generator to the entries with excitation difference ``k``.

        Returns (flat indices, matrix).  Columns come from applying the
        operator form to each basis element, so no superoperator is stored.
        """
        idx = self.sector_indices(k)
        dim = self.dim
        Lk = np.empty((len(idx), len(idx)), dtype=complex)
        unit = np.zeros(dim * dim, dtype=complex)
        for c, flat in enumerate(idx):
            unit[flat] = 1.0
            Lk[:, c] = self.apply(unit.reshape(dim, dim)).ravel()[idx]
            unit[flat] = 0.0
        return idx, Lk

    def excitation(self) -> np.ndarray:
        n = np.tile(np.arange(self.N + 1), 2)
        up = np.repeat([1, 0], self.N + 1)
        return n + up

    def sector_indices(self, k: int) -> np.ndarray:
        """Flat row-major indices of rho entries with excitation difference ``k``."""
        e = self.excitation()
        diff = e[:, None] - e[None, :]
        return np.flatnonzero(diff.ravel() == k)


def build_generator(p: PhysicalParams, d: DressedState | None, N: int) -> Generator:
    """Lindbladian of the joint system with dressed-basis spin rates.

    ``d`` only has to be consistent with ``p``; the pump rates are taken from ``p``.
    """
    if N < 2:
        raise ConfigError("Fock truncation N must be >= 2")
    if p.n_bath > N / 4:
        raise ConfigError(f"n_bath={p.n_bath} too large for N={N} (need n_bath <= N/4)")
    if d is not None and abs(d.s_z0 - p.dressed.s_z0) > 1e-12:
        raise ConfigError("dressed state does not match the pump rates in params")
    ops = fock_ops(N)
    H = p.delta / 2 * ops["sz"] + p.g * (ops["a"] @ ops["sp"] + ops["a"].T @ ops["sm"])
    jumps = [
        (p.gamma_m * (p.n_bath + 1), ops["a"]),
        (p.gamma_m * p.n_bath, ops["a"].T.copy()),
        (p.gamma_down, ops["sm"]),
        (p.gamma_up, ops["sp"]),
        (p.gamma_phi / 2, ops["sz"]),
    ]
    jumps = [(r, L) for r, L in jumps if r > 0]
    scale = max(p.gamma_1, p.gamma_2, p.g * math.sqrt(N), abs(p.delta), p.gamma_m * p.n_bath * N)
    return Generator(N=N, H=H, jumps=jumps, scale=scale)


def thermal_populations(n_bar: float, N: int) -> np.ndarray:
    """Geometric Fock distribution truncated at N and renormalized."""
    if n_bar == 0:
        pops = np.zeros(N + 1)
        pops[0] = 1.0
        return pops
    n = np.arange(N + 1)
    pops = (n_bar / (n_bar + 1)) ** n / (n_bar + 1)
    return pops / pops.sum()


def product_state(d: DressedState, n_bar: float, N: int) -> DensityMatrix:
    """Diagonal spin state (x) thermal oscillator."""
    spin = np.array([d.p_up, d.p_down])
    return DensityMatrix(N + 1, np.diag(np.kron(spin, thermal_populations(n_bar, N))))


def fock_state(d: DressedState, n: int, N: int) -> DensityMatrix:
    """Diagonal spin state (x) number state |n>."""
    if not 0 <= n <= N:
        raise ConfigError(f"Fock level {n} outside 0..{N}")
    pops = np.zeros(N + 1)
    pops[n] = 1.0
    spin = np.array([d.p_up, d.p_down])
    return DensityMatrix(N + 1, np.diag(np.kron(spin, pops)))


def thermal_tail(n_bar: float, N: int) -> float:
    """Population of Fock levels N-1 and N for a truncated thermal state."""
    return float(thermal_populations(n_bar, N)[-2:].sum())


@dataclass
class OracleResult:
    times: np.ndarray
    mean_n: np.ndarray
    sz: np.ndarray
    trace_err: np.ndarray
    tail: np.ndarray
    min_eig: np.ndarray
    herm_err: np.ndarray
    rho_final: DensityMatrix
    cutoff: float = TAIL_CUTOFF
    fitted_decay_rate: float = math.nan
    fitted_steady_n: float = math.nan
    meta: dict = field(default_factory=dict)

    @property
    def truncation_tail(self) -> float:
        return float(self.tail.max())

    @property
    def valid(self) -> bool:
        return truncation_check(self)[0]


def truncation_check(result: OracleResult, cutoff: float | None = None) -> tuple[bool, float]:
    """(valid, tail) where tail is the largest top-two-level population seen."""
    cutoff = result.cutoff if cutoff is None else cutoff
    tail = result.truncation_tail
    return tail < cutoff, tail


def _rk4_propagator(Lk: np.ndarray, dt: float) -> np.ndarray:
    """Matrix of one classic RK4 step for the linear system v' = Lk v."""
    m = Lk.shape[0]
    A = dt * Lk
    P = np.eye(m, dtype=complex)
    term = np.eye(m, dtype=complex)
    for j in range(1, 5):
        term = term @ A / j
        P = P + term
    return P


def evolve(rho0: "DensityMatrix | np.ndarray", gen: Generator, t_end: float, dt: float, stride: int = 100,
           cutoff: float = TAIL_CUTOFF) -> OracleResult:
    """RK4 integration of the master equation, recording observables every ``stride`` steps."""
    if dt <= 0 or dt * gen.scale > 0.1:
        raise NumericalError(f"dt={dt:g} violates dt*scale <= 0.1 (scale {gen.scale:g})")
    dim = gen.dim
    rho0 = np.asarray(rho0.data if isinstance(rho0, DensityMatrix) else rho0, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ConfigError(f"rho0 has shape {rho0.shape}, expected {(dim, dim)}")
    flat0 = rho0.ravel()
    e = gen.excitation()
    sectors = []
    for k in np.unique(e[:, None] - e[None, :]):
        idx = gen.sector_indices(int(k))
        if np.any(flat0[idx] != 0):
            idx, Lk = gen.sector_generator(int(k))
            sectors.append((idx, _rk4_propagator(Lk, dt), flat0[idx].copy()))
    diag_idx = np.arange(dim) * (dim + 1)
    num = np.diag(fock_ops(gen.N)["num"]).real
    sz = np.repeat([1.0, -1.0], gen.N + 1)
    top = np.zeros(dim, dtype=bool)
    top[[gen.N - 1, gen.N, 2 * gen.N, 2 * gen.N + 1]] = True

    n_steps = int(math.ceil(t_end / dt - 1e-9))
    stride = max(1, int(stride))
    rec = {k: [] for k in ("t", "n", "sz", "tr", "tail", "eig", "herm")}
    flat = np.zeros(dim * dim, dtype=complex)

    def record(step):
        for idx, _, v in sectors:
            flat[idx] = v
        rho = flat.reshape(dim, dim)
        pops = rho.ravel()[diag_idx].real
        rec["t"].append(step * dt)
        rec["n"].append(float(pops @ num))
        rec["sz"].append(float(pops @ sz))
        rec["tr"].append(float(abs(pops.sum() - 1.0)))
        rec["tail"].append(float(pops[top].sum()))
        rec["herm"].append(float(np.abs(rho - rho.conj().T).max()))
        rec["eig"].append(float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]))
        if not np.isfinite(rec["n"][-1]):
            raise NumericalError(f"non-finite density matrix at t={step * dt:g}")

    record(0)
    for step in range(1, n_steps + 1):
        for j, (idx, P, v) in enumerate(sectors):
            sectors[j] = (idx, P, P @ v)
        if step % stride == 0 or step == n_steps:
            record(step)
    for idx, _, v in sectors:
        flat[idx] = v
    result = OracleResult(
        times=np.array(rec["t"]), mean_n=np.array(rec["n"]), sz=np.array(rec["sz"]),
        trace_err=np.array(rec["tr"]), tail=np.array(rec["tail"]), min_eig=np.array(rec["eig"]),
        herm_err=np.array(rec["herm"]), rho_final=DensityMatrix(gen.N + 1, flat.reshape(dim, dim).copy()),
        cutoff=cutoff,
        meta={"N": gen.N, "dt": dt, "steps": n_steps, "sectors": len(sectors)})
    if result.min_eig.min() < POSITIVITY_FLOOR:
        raise NumericalError(f"density matrix lost positivity: min eigenvalue {result.min_eig.min():.3g}")
    return result


def evolve_operator_form(rho0: np.ndarray, gen: Generator, n_steps: int, dt: float) -> np.ndarray:
    """Plain RK4 on the full matrix via ``Generator.apply``; slow, for cross-checks."""
    rho = np.asarray(rho0.data if isinstance(rho0, DensityMatrix) else rho0, dtype=complex)
    for _ in range(n_steps):
        k1 = gen.apply(rho)
        k2 = gen.apply(rho + 0.5 * dt * k1)
        k3 = gen.apply(rho + 0.5 * dt * k2)
        k4 = gen.apply(rho + dt * k3)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return rho


@dataclass(frozen=True)
class DecayFit:
    rate: float
    asymptote: float
    initial: float
    residual: float  # max |residual| relative to the decay amplitude


def fit_number_decay(times: np.ndarray, mean_n: np.ndarray, t_skip: float = 0.0,
                     max_residual: float = 0.02) -> DecayFit:
    """Least-squares fit of n(t) = n_ss + (n0 - n_ss) exp(-rate (t - t0)) for t >= t_skip."""
    times = np.asarray(times, dtype=float)
    mean_n = np.asarray(mean_n, dtype=float)
    sel = times >= t_skip
    t, y = times[sel], mean_n[sel]
    if len(t) < 4:
        raise NumericalError("too few points after the transient to fit a decay")
    t0 = t[0]
    tau = t - t0

    def linear_part(rate):
        basis = np.column_stack([np.ones_like(tau), np.exp(-rate * tau)])
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        return coef, basis @ coef - y

    span = tau[-1]
    grid = np.geomspace(1e-3 / span, 1e3 / span, 241)
    costs = [np.sum(linear_part(r)[1] ** 2) for r in grid]
    i = int(np.argmin(costs))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda lr: np.sum(linear_part(math.exp(lr))[1] ** 2),
                                   bounds=(math.log(lo), math.log(hi)), method="bounded",
                                   options={"xatol": 1e-12})
    rate = math.exp(res.x)

    def model(tt, n_ss, amp, r):
        return n_ss + amp * np.exp(-r * tt)

    (n_ss, amp), _ = linear_part(rate)
    popt, _ = optimize.curve_fit(model, tau, y, p0=(n_ss, amp, rate), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    n_ss, amp, rate = map(float, popt)
    resid = model(tau, *popt) - y
    scale = abs(amp) if amp != 0 else 1.0
    quality = float(np.abs(resid).max() / scale)
    if quality > max_residual:
        raise NumericalError(f"number decay is not exponential: residual {quality:.3g} of amplitude")
    return DecayFit(rate=rate, asymptote=n_ss, initial=n_ss + amp, residual=quality)


@dataclass(frozen=True)
class CaseReport:
    params: PhysicalParams
    N: int
    gamma_eff: float
    n_ss_theory: float
    fit: DecayFit
    tail: float
    valid: bool

    @property
    def rate_error(self) -> float:
        return self.fit.rate / self.gamma_eff - 1

    @property
    def steady_error(self) -> float:
        return self.fit.asymptote / self.n_ss_theory - 1


def run_case(p: PhysicalParams, N: int = 30, n_start: int = 4, t_factor: float = 12.0,
             dt_factor: float = 0.1, stride: int = 200, cutoff: float = TAIL_CUTOFF) -> tuple[CaseReport, OracleResult]:
    """Evolve from |dressed steady spin> (x) |n_start> for t_factor/gamma_eff and fit the decay."""
    from .rates import below_threshold_occupation, gain

    d = p.dressed
    gamma_eff = gain(p, d)[1]
    n_ss = below_threshold_occupation(p, d)
    gen = build_generator(p, d, N)
    res = evolve(fock_state(d, n_start, N), gen, t_end=t_factor / gamma_eff,
                 dt=dt_factor / gen.scale, stride=stride, cutoff=cutoff)
    fit = fit_number_decay(res.times, res.mean_n, t_skip=5 / p.gamma_2)
    res.fitted_decay_rate, res.fitted_steady_n = fit.rate, fit.asymptote
    ok, tail = truncation_check(res)
    return CaseReport(p, N, gamma_eff, n_ss, fit, tail, ok), res


def random_cases(n: int, seed: int = 0) -> list[PhysicalParams]:
    """Draws inside the adiabatic regime, in units gamma_2 = 1.

    gamma_2/g in [20, 40], gamma_2/gamma_m in [1e4, 1e5], n_bath in [0.5, 3],
    gamma_1/gamma_2 in [0.5, 1.5] and a cooling inversion S_z0 in [-1, -0.3].
    """
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        out.append(PhysicalParams.from_relaxation(
            omega_m=1.0,
            gamma_m=10 ** rng.uniform(-5, -4),
            gamma_1=rng.uniform(0.5, 1.5),
            gamma_2=1.0,
            s_z0=rng.uniform(-1.0, -0.3),
            g=1 / rng.uniform(20, 40),
            n_bath=rng.uniform(0.5, 3.0)))
    return out


def detuning_scan(deltas=(0.0, 0.5, -0.5, 1.0, -1.0), g: float = 1 / 25, gamma_m: float = 1e-4,
                  n_bath: float = 1.0, N: int = 30) -> list[tuple[float, float, float]]:
    """(delta, fitted Gamma - gamma_m, predicted Gamma_opt) for a fully polarized cooling spin."""
    from .rates import gain

    rows = []
    for delta in deltas:
        p = PhysicalParams.from_relaxation(omega_m=1.0, gamma_m=gamma_m, gamma_1=1.0, gamma_2=1.0,
                                           s_z0=-1.0, g=g, n_bath=n_bath, delta=delta)
        rep, _ = run_case(p, N=N)
        rows.append((delta, rep.fit.rate - gamma_m, gain(p, p.dressed)[0]))
    return rows


def mild_gain_case(N: int = 40) -> PhysicalParams:
    """Below-threshold gain point: gain margin 1.5, S_z0 = 0.2 (threshold at 2/3)."""
    gamma_m = 1e-3
    g = math.sqrt(1.5 * gamma_m / 2)
    return PhysicalParams.from_relaxation(omega_m=1.0, gamma_m=gamma_m, gamma_1=1.0, gamma_2=1.0,
                                          s_z0=0.2, g=g, n_bath=0.5)
