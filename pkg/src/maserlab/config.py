"""JSON run configuration, sweep specifications and run manifests.

A config file is one JSON object with a required ``physical`` section and
optional ``dressing``, ``langevin`` and ``oracle`` sections.  Rate-valued
fields may be given as strings ``"hz:<number>"``, which are multiplied by
2*pi at parse time; the prefix on any other field is an error.
"""
from __future__ import annotations

import hashlib
import json
import math
import platform
import re
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .core import DressedSpinConfig, PhysicalParams
from .errors import ConfigError
from .langevin import LangevinConfig

# physical section: canonical fields plus shorthands
_PHYS_RATES = {"omega_m", "gamma_m", "gamma_up", "gamma_down", "gamma_phi", "gamma_1", "gamma_2", "g", "delta"}
_PHYS_PLAIN = {"Q", "quality_factor", "eta", "s_z0", "n_bath", "temperature"}
_DRESS_RATES = {"Delta", "Omega", "g0", "gyromagnetic_ratio"}
_DRESS_PLAIN = {"G", "m"}
_LANGEVIN_RATES = {"omega_rot"}
_LANGEVIN_PLAIN = {f.name for f in fields(LangevinConfig)} - _LANGEVIN_RATES


@dataclass(frozen=True)
class OracleConfig:
    fock: int = 30
    t_end: float | None = None
    dt: float | None = None
    stride: int = 200
    n_start: int = 4
    cutoff: float = 1e-6
    rescale: bool = False  # express rates in units of omega_m before building the generator

    def __post_init__(self):
        if self.fock < 2:
            raise ConfigError("oracle.fock must be >= 2")
        if self.stride < 1 or not 0 <= self.n_start <= self.fock:
            raise ConfigError("oracle.stride must be >= 1 and 0 <= n_start <= fock")
        if not self.cutoff > 0:
            raise ConfigError("oracle.cutoff must be > 0")


_ORACLE_PLAIN = {f.name for f in fields(OracleConfig)}


@dataclass
class RunConfig:
    physical: PhysicalParams
    dressing: DressedSpinConfig | None = None
    langevin: LangevinConfig | None = None
    oracle: OracleConfig | None = None
    raw: dict = field(default_factory=dict)
    source: str = "<string>"

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)


def config_hash(raw: dict) -> str:
    """SHA-256 of the canonical (sorted-key, compact) JSON text."""
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode()).hexdigest()


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


class _Section:
    """Reads values from one config section, producing located diagnostics."""

    def __init__(self, name: str, data, text: str, source: str, rates: set, plain: set):
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: section '{name}' must be a JSON object")
        self.name, self.data, self.text, self.source = name, data, text, source
        self.rates, self.plain = rates, plain
        unknown = sorted(set(data) - rates - plain)
        if unknown:
            raise self.error(unknown[0], f"unknown key '{unknown[0]}'")

    def error(self, key: str, msg: str) -> ConfigError:
        line = _line_of(self.text, key)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: {self.name}.{key}: {msg}")

    def has(self, key: str) -> bool:
        return key in self.data

    def get(self, key: str, default=None):
        if key not in self.data:
            return default
        v = self.data[key]
        if isinstance(v, str):
            if not v.startswith("hz:"):
                if key in self.rates:
                    raise self.error(key, f"expected a number, got {v!r}")
                return v
            if key not in self.rates:
                raise self.error(key, "'hz:' prefix is only allowed on rate fields")
            try:
                return 2 * math.pi * float(v[3:])
            except ValueError:
                raise self.error(key, f"cannot parse {v!r}") from None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            if key in self.rates:
                raise self.error(key, f"expected a number, got {v!r}")
            return v
        return v


def _physical(sec: _Section, dressing: DressedSpinConfig | None) -> PhysicalParams:
    omega_m = sec.get("omega_m")
    if omega_m is None:
        raise sec.error("omega_m", "omega_m is required")

    q_keys = [k for k in ("gamma_m", "Q", "quality_factor") if sec.has(k)]
    if len(q_keys) != 1:
        raise sec.error(q_keys[-1] if q_keys else "gamma_m",
                        "give exactly one of gamma_m, Q, quality_factor")
    if q_keys[0] == "gamma_m":
        gamma_m = sec.get("gamma_m")
    else:
        q = sec.get(q_keys[0])
        if not isinstance(q, (int, float)) or q <= 0:
            raise sec.error(q_keys[0], "quality factor must be a positive number")
        gamma_m = omega_m / q

    kw = {}
    if dressing is not None:
        for key in ("g", "eta", "delta"):
            if sec.has(key):
                raise sec.error(key, "conflicts with the dressing section, which derives g and delta")
        kw["g"], kw["delta"] = dressing.effective(omega_m)
    else:
        if sec.has("g") and sec.has("eta"):
            raise sec.error("eta", "give g or eta, not both")
        if sec.has("eta"):
            kw["g"] = sec.get("eta") * omega_m
        elif sec.has("g"):
            kw["g"] = sec.get("g")
        if sec.has("delta"):
            kw["delta"] = sec.get("delta")

    if sec.has("n_bath"):
        kw["n_bath"] = sec.get("n_bath")
    if sec.has("temperature"):
        kw["temperature"] = sec.get("temperature")

    direct = [k for k in ("gamma_up", "gamma_down", "gamma_phi") if sec.has(k)]
    relax = [k for k in ("gamma_1", "gamma_2", "s_z0") if sec.has(k)]
    if direct and relax:
        raise sec.error(relax[0], "mixes pump rates (gamma_up/down/phi) with gamma_1/gamma_2/s_z0")
    try:
        if relax:
            if len(relax) != 3:
                raise sec.error(relax[0], "gamma_1, gamma_2 and s_z0 must be given together")
            return PhysicalParams.from_relaxation(omega_m=omega_m, gamma_m=gamma_m, gamma_1=sec.get("gamma_1"),
                                                  gamma_2=sec.get("gamma_2"), s_z0=sec.get("s_z0"), **kw)
        if "gamma_up" not in direct or "gamma_down" not in direct:
            raise sec.error("gamma_up", "need gamma_up and gamma_down (or gamma_1, gamma_2, s_z0)")
        return PhysicalParams(omega_m=omega_m, gamma_m=gamma_m, gamma_up=sec.get("gamma_up"),
                              gamma_down=sec.get("gamma_down"), gamma_phi=sec.get("gamma_phi", 0.0), **kw)
    except TypeError as exc:
        raise ConfigError(f"{sec.source}: physical: {exc}") from None


def _build(cls, sec: _Section, convert=None):
    kw = {k: sec.get(k) for k in sec.data}
    if convert:
        kw = convert(kw)
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{sec.source}: {sec.name}: {exc}") from None


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    if not text.strip():
        raise ConfigError(f"{source}: empty configuration")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    unknown = sorted(set(raw) - {"physical", "dressing", "langevin", "oracle"})
    if unknown:
        line = _line_of(text, unknown[0])
        raise ConfigError(f"{source}:{line}: unknown section '{unknown[0]}'")
    if "physical" not in raw:
        raise ConfigError(f"{source}: missing 'physical' section")

    dressing = None
    if "dressing" in raw:
        sec = _Section("dressing", raw["dressing"], text, source, _DRESS_RATES, _DRESS_PLAIN)
        dressing = _build(DressedSpinConfig, sec)
    phys = _physical(_Section("physical", raw["physical"], text, source, _PHYS_RATES, _PHYS_PLAIN), dressing)

    langevin = None
    if "langevin" in raw:
        sec = _Section("langevin", raw["langevin"], text, source, _LANGEVIN_RATES, _LANGEVIN_PLAIN)

        def fix_point(kw):
            if "point" in kw:
                kw["point"] = tuple(kw["point"])
            return kw
        langevin = _build(LangevinConfig, sec, fix_point)

    oracle = None
    if "oracle" in raw:
        oracle = _build(OracleConfig, _Section("oracle", raw["oracle"], text, source, set(), _ORACLE_PLAIN))
    return RunConfig(physical=phys, dressing=dressing, langevin=langevin, oracle=oracle, raw=raw, source=source)


def parse_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, source=str(path))


def table_one_config(eta: float = 0.10, s_z0: float = 0.2, n_bath: float = 5.0) -> dict:
    """Raw config dict for the representative operating point."""
    return {"physical": {"omega_m": "hz:50", "Q": 1e4, "gamma_1": 500.0, "gamma_2": 1000.0,
                         "s_z0": s_z0, "eta": eta, "n_bath": n_bath}}


# --- sweeps ------------------------------------------------------------------

SWEEP_VARIABLES = ("delta", "s_z0", "g", "eta", "gamma_cool")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    lo: float
    hi: float
    steps: int
    scale: str = "linear"

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"cannot sweep {self.variable!r}; choose from {', '.join(SWEEP_VARIABLES)}")
        if self.steps < 2:
            raise ConfigError("sweep needs steps >= 2")
        if not self.lo < self.hi:
            raise ConfigError("sweep needs min < max")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"unknown sweep scale {self.scale!r}")
        if self.scale == "log" and self.lo <= 0:
            raise ConfigError("log sweep needs min > 0")

    @classmethod
    def parse(cls, variable: str, text: str, scale: str = "linear") -> "SweepSpec":
        lo, hi, steps = parse_range(text)
        return cls(variable, lo, hi, steps, scale)

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.lo, self.hi, self.steps)
        return np.linspace(self.lo, self.hi, self.steps)


def parse_range(text: str) -> tuple[float, float, int]:
    """``min:max:steps`` with an optional ``hz:`` prefix on each bound."""
    parts = text.split(":")
    # allow hz:1:hz:5:11
    tokens, i = [], 0
    while i < len(parts):
        if parts[i] == "hz" and i + 1 < len(parts):
            tokens.append(2 * math.pi * _num(parts[i + 1], text))
            i += 2
        else:
            tokens.append(parts[i])
            i += 1
    if len(tokens) != 3:
        raise ConfigError(f"range {text!r} must look like min:max:steps")
    lo, hi = (t if isinstance(t, float) else _num(t, text) for t in tokens[:2])
    try:
        steps = int(tokens[2])
    except ValueError:
        raise ConfigError(f"steps in {text!r} must be an integer") from None
    return lo, hi, steps


def _num(s: str, ctx: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise ConfigError(f"cannot parse {s!r} in {ctx!r}") from None


# --- manifests ---------------------------------------------------------------

@dataclass
class RunManifest:
    config_hash: str
    seed: int | None
    command: str
    outputs: list[str] = field(default_factory=list)
    versions: dict = field(default_factory=dict)
    created: str = ""

    def __post_init__(self):
        if not self.versions:
            import numba
            import scipy
            self.versions = {"maserlab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                             "numba": numba.__version__, "python": platform.python_version()}
        if not self.created:
            self.created = datetime.now(timezone.utc).isoformat(timespec="seconds")

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")
