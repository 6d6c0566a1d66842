"""Physical parameters, dressed-spin quantities and regime checks.

All frequencies and rates are angular (s^-1). Temperatures are in kelvin.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

from .errors import ConfigError, DegenerateDressingError, NoStationaryStateError

# CODATA 2018
HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K
# NV electron spin, 28 GHz/T expressed as an angular rate
GYRO_NV = 2.0 * math.pi * 28e9  # s^-1 T^-1


@dataclass(frozen=True)
class PhysicalParams:
    """Rates and frequencies of the joint spin-oscillator system.

    ``n_bath`` is the occupation of whatever bath the mechanical dissipator
    couples to: the ambient thermal occupation, or the effective occupation
    after pre-cooling.  If it is omitted and ``temperature`` is given, it is
    derived from the Bose-Einstein law.
    """

    omega_m: float
    gamma_m: float
    gamma_up: float
    gamma_down: float
    gamma_phi: float = 0.0
    g: float = 0.0
    delta: float = 0.0
    n_bath: float | None = None
    temperature: float | None = None

    def __post_init__(self):
        if self.n_bath is None:
            n = 0.0 if self.temperature is None else thermal_occupation(self.omega_m, self.temperature)
            object.__setattr__(self, "n_bath", n)
        checks = {
            "omega_m": self.omega_m > 0,
            "gamma_m": self.gamma_m >= 0,
            "gamma_up": self.gamma_up >= 0,
            "gamma_down": self.gamma_down >= 0,
            "gamma_phi": self.gamma_phi >= 0,
            "g": self.g >= 0,
            "n_bath": self.n_bath >= 0,
        }
        for name, ok in checks.items():
            if not ok or not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name}={getattr(self, name)!r} is out of range")
        if not math.isfinite(self.delta):
            raise ConfigError("delta must be finite")
        if self.temperature is not None and self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.gamma_1 <= 0:
            raise NoStationaryStateError("gamma_up + gamma_down must be > 0")

    @classmethod
    def from_quality_factor(cls, omega_m: float, quality_factor: float, **kw) -> "PhysicalParams":
        if quality_factor <= 0:
            raise ConfigError("quality factor must be > 0")
        return cls(omega_m=omega_m, gamma_m=omega_m / quality_factor, **kw)

    @classmethod
    def from_relaxation(cls, omega_m: float, gamma_m: float, gamma_1: float, gamma_2: float,
                        s_z0: float, **kw) -> "PhysicalParams":
        """Build from (gamma_1, gamma_2, S_z0) instead of individual pump rates."""
        if gamma_1 <= 0:
            raise NoStationaryStateError("gamma_1 must be > 0")
        if gamma_2 < gamma_1 / 2:
            raise ConfigError(f"gamma_2={gamma_2} < gamma_1/2={gamma_1 / 2}")
        if not -1.0 <= s_z0 <= 1.0:
            raise ConfigError(f"s_z0={s_z0} outside [-1, 1]")
        return cls(omega_m=omega_m, gamma_m=gamma_m,
                   gamma_up=gamma_1 * (1 + s_z0) / 2, gamma_down=gamma_1 * (1 - s_z0) / 2,
                   gamma_phi=gamma_2 - gamma_1 / 2, **kw)

    @property
    def gamma_1(self) -> float:
        return self.gamma_up + self.gamma_down

    @property
    def gamma_2(self) -> float:
        return self.gamma_1 / 2 + self.gamma_phi

    @property
    def quality_factor(self) -> float:
        return math.inf if self.gamma_m == 0 else self.omega_m / self.gamma_m

    @property
    def dressed(self) -> "DressedState":
        return dressed_populations(self.gamma_up, self.gamma_down)

    def with_inversion(self, s_z0: float) -> "PhysicalParams":
        """Same gamma_1 and gamma_phi, pump split re-balanced to give ``s_z0``."""
        if not -1.0 <= s_z0 <= 1.0:
            raise ConfigError(f"s_z0={s_z0} outside [-1, 1]")
        g1 = self.gamma_1
        return replace(self, gamma_up=g1 * (1 + s_z0) / 2, gamma_down=g1 * (1 - s_z0) / 2)

    def rescaled(self, unit: float) -> "PhysicalParams":
        """Express every rate in units of ``unit`` (``unit=omega_m`` gives omega_m = 1)."""
        if unit <= 0:
            raise ConfigError("unit must be > 0")
        return replace(self, omega_m=self.omega_m / unit, gamma_m=self.gamma_m / unit,
                       gamma_up=self.gamma_up / unit, gamma_down=self.gamma_down / unit,
                       gamma_phi=self.gamma_phi / unit, g=self.g / unit, delta=self.delta / unit)


def table_one(eta: float = 0.10, s_z0: float = 0.2, delta: float = 0.0, n_bath: float = 5.0) -> PhysicalParams:
    """Representative levitated-NV operating point with g = eta * omega_m."""
    omega_m = 2 * math.pi * 50
    return PhysicalParams.from_relaxation(omega_m=omega_m, gamma_m=omega_m / 1e4, gamma_1=500.0,
                                          gamma_2=1000.0, s_z0=s_z0, g=eta * omega_m,
                                          delta=delta, n_bath=n_bath)


@dataclass(frozen=True)
class DressedSpinConfig:
    """Microwave-level inputs; g0 may instead come from a field gradient."""

    Delta: float
    Omega: float
    g0: float | None = None
    G: float | None = None
    m: float | None = None
    gyromagnetic_ratio: float = GYRO_NV

    def __post_init__(self):
        if self.Omega < 0:
            raise ConfigError("Omega must be >= 0")
        if self.g0 is None and (self.G is None or self.m is None):
            raise ConfigError("dressing needs g0, or both G and m")

    def coupling_g0(self, omega_m: float) -> float:
        if self.g0 is not None:
            return self.g0
        return coupling_from_gradient(self.G, self.m, omega_m, self.gyromagnetic_ratio)

    def effective(self, omega_m: float) -> tuple[float, float]:
        """Return (g, delta) for an oscillator at ``omega_m``."""
        omega_tilde, _ = dressed_splitting(self.Delta, self.Omega)
        g = effective_coupling(self.coupling_g0(omega_m), self.Delta, self.Omega)
        return g, omega_tilde - omega_m


@dataclass(frozen=True)
class DressedState:
    """Stationary dressed populations.

    ``s_z0`` defaults to p_up - p_down; it is stored separately so that a
    small inversion keeps full relative precision.
    """

    p_up: float
    p_down: float
    s_z0: float | None = None

    def __post_init__(self):
        if self.s_z0 is None:
            object.__setattr__(self, "s_z0", self.p_up - self.p_down)

    @classmethod
    def from_inversion(cls, s_z0: float) -> "DressedState":
        if not -1.0 <= s_z0 <= 1.0:
            raise ConfigError(f"s_z0={s_z0} outside [-1, 1]")
        return cls(p_up=(1 + s_z0) / 2, p_down=(1 - s_z0) / 2, s_z0=s_z0)


def dressed_splitting(Delta: float, Omega: float) -> tuple[float, float]:
    if Delta == 0 and Omega == 0:
        raise DegenerateDressingError("Delta = Omega = 0: dressed basis undefined")
    return math.hypot(Delta, Omega), math.atan2(Omega, Delta)


def effective_coupling(g0: float, Delta: float, Omega: float) -> float:
    """Transverse JC coupling g0 sin(theta)."""
    omega_tilde, _ = dressed_splitting(Delta, Omega)
    if g0 < 0:
        raise ConfigError("g0 must be >= 0")
    return g0 * (Omega / omega_tilde)


def coupling_from_gradient(G: float, m: float, omega_m: float, gyro: float = GYRO_NV) -> float:
    """Bare longitudinal coupling g0 = gyro * G * z_zpf / 2.

    A zero gradient is accepted and gives zero coupling.
    """
    if G < 0 or m <= 0 or omega_m <= 0 or gyro <= 0:
        raise ConfigError("gradient, mass, frequency and gyromagnetic ratio must be positive")
    z_zpf = math.sqrt(HBAR / (2 * m * omega_m))
    return gyro * G * z_zpf / 2


def dressed_populations(gamma_up: float, gamma_down: float) -> DressedState:
    gamma_1 = gamma_up + gamma_down
    if gamma_1 <= 0:
        raise NoStationaryStateError("gamma_up + gamma_down = 0: no stationary dressed state")
    return DressedState(p_up=gamma_up / gamma_1, p_down=gamma_down / gamma_1,
                        s_z0=(gamma_up - gamma_down) / gamma_1)


def thermal_occupation(omega_m: float, T: float) -> float:
    """Bose-Einstein occupation of a mode at ``omega_m`` and temperature ``T``."""
    if omega_m <= 0 or T < 0:
        raise ConfigError("need omega_m > 0 and T >= 0")
    if T == 0:
        return 0.0
    return 1.0 / math.expm1(HBAR * omega_m / (K_B * T))


@dataclass
class TimescaleReport:
    margin: float
    ratios: dict[str, float] = field(default_factory=dict)

    @property
    def flags(self) -> dict[str, bool]:
        return {k: v >= self.margin for k, v in self.ratios.items()}

    @property
    def valid(self) -> bool:
        return all(self.flags.values())

    def summary(self) -> str:
        parts = [f"{k}={v:.3g}{'' if v >= self.margin else ' (!)'}" for k, v in self.ratios.items()]
        verdict = "adiabatic elimination valid" if self.valid else "outside adiabatic-elimination regime"
        return f"{verdict}: " + ", ".join(parts)


def validate_timescales(p: PhysicalParams, margin: float = 10.0, warn: bool = True) -> TimescaleReport:
    """Compare spin rates against g and gamma_m; never rejects the input."""

    def ratio(a, b):
        return math.inf if b == 0 else a / b

    report = TimescaleReport(margin=margin, ratios={
        "gamma_1/g": ratio(p.gamma_1, p.g),
        "gamma_2/g": ratio(p.gamma_2, p.g),
        "gamma_1/gamma_m": ratio(p.gamma_1, p.gamma_m),
        "gamma_2/gamma_m": ratio(p.gamma_2, p.gamma_m),
    })
    if warn and not report.valid:
        warnings.warn(report.summary(), RuntimeWarning, stacklevel=2)
    return report
