"""Configuration objects and the ``key = value`` config file reader.

Defaults reproduce the simulation table of the reference setup (10 MHz,
0.1 W, -100 dBm, 3.5 GHz, 200 Gcycle/s MEC servers, 1.4 Gcycle/s devices,
30 users, L = 1, accuracy fit p, q, r = 100, 80, 0.6).  The remaining
constants (N, beta, gamma, data-volume range, bits per data unit) are not
given by the reference setup and were calibrated so that every user can
always meet its deadline by computing locally; see README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class FitParams:
    """Power-law accuracy model ``y(alpha) = p - q * alpha**(-r)`` (percent)."""

    p: float = 100.0
    q: float = 80.0
    r: float = 0.6

    def __post_init__(self):
        if not self.p > 0:
            raise ConfigError("must be > 0", key="fit_p")
        if not self.q > 0:
            raise ConfigError("must be > 0", key="fit_q")
        if not 0.0 <= self.r <= 1.0:
            raise ConfigError("must lie in [0, 1]", key="fit_r")

    def min_volume(self, accuracy_limit):
        """Smallest processed volume reaching ``accuracy_limit`` (inf if >= p)."""
        gap = self.p - accuracy_limit
        if gap <= 0:
            return math.inf
        return (self.q / gap) ** (1.0 / self.r)


@dataclass(frozen=True)
class SystemConfig:
    bandwidth_total: float = 10e6  # Hz
    num_subcarriers: int = 50
    tx_power: float = 0.1  # W
    noise_power: float = 1e-13  # W (-100 dBm)
    carrier_freq: float = 3.5e9  # Hz
    area_side: float = 200.0  # m
    num_sbs: int = 4
    num_users: int = 30
    mec_capacity: float = 200e9  # cycles/s per SBS
    local_capacity: float = 1.4e9  # cycles/s per device
    utility_weight: float = 1.0
    overhead_slope: float = 2.5e4  # cycles per data unit
    overhead_intercept: float = 1e6  # cycles
    volume_range: tuple[float, float] = (200.0, 1000.0)  # data units
    bits_per_unit: float = 100.0
    rng_seed: int = 0
    fit: FitParams = field(default_factory=FitParams)

    def __post_init__(self):
        positive = (
            "bandwidth_total", "tx_power", "noise_power", "carrier_freq",
            "area_side", "mec_capacity", "local_capacity", "utility_weight",
            "overhead_slope", "bits_per_unit",
        )
        for name in positive:
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigError(f"must be a positive number, got {value!r}", key=name)
        for name in ("num_subcarriers", "num_sbs", "num_users"):
            value = getattr(self, name)
            if not (isinstance(value, int) and value >= 1):
                raise ConfigError(f"must be an integer >= 1, got {value!r}", key=name)
        if not (math.isfinite(self.overhead_intercept) and self.overhead_intercept >= 0):
            raise ConfigError("must be >= 0", key="overhead_intercept")
        lo, hi = self.volume_range
        if not (0 < lo <= hi and math.isfinite(hi)):
            raise ConfigError(f"need 0 < low <= high, got {self.volume_range!r}", key="volume_range")
        object.__setattr__(self, "volume_range", (float(lo), float(hi)))

    @property
    def subcarrier_bandwidth(self) -> float:
        return self.bandwidth_total / self.num_subcarriers

    def with_(self, **changes) -> "SystemConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class TaskType:
    delay_limit: float  # s
    accuracy_limit: float  # percent


@dataclass(frozen=True)
class TaskCatalog:
    types: tuple[TaskType, ...] = (
        TaskType(0.020, 85.0),
        TaskType(0.040, 90.0),
        TaskType(0.060, 95.0),
    )

    def __post_init__(self):
        if not self.types:
            raise ConfigError("catalog needs at least one task type", key="task_delay_limits")
        for t in self.types:
            if not t.delay_limit > 0:
                raise ConfigError("delay limits must be > 0", key="task_delay_limits")
            if not t.accuracy_limit > 0:
                raise ConfigError("accuracy limits must be > 0", key="task_accuracy_limits")

    def __len__(self):
        return len(self.types)

    def validate_against(self, fit: FitParams) -> None:
        for t in self.types:
            if not t.accuracy_limit < fit.p:
                raise ConfigError(
                    f"accuracy limit {t.accuracy_limit} not below fit p={fit.p}",
                    key="task_accuracy_limits",
                )


@dataclass(frozen=True)
class SolverConfig:
    outer_tol: float = 1e-3
    inner_tol: float = 1e-4
    max_outer: int = 10
    max_inner: int = 20

    def __post_init__(self):
        for name in ("outer_tol", "inner_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError("must be > 0", key=name)
        for name in ("max_outer", "max_inner"):
            value = getattr(self, name)
            if not (isinstance(value, int) and value >= 1):
                raise ConfigError("must be an integer >= 1", key=name)


# ---------------------------------------------------------------------------
# config file reader

_SYSTEM_KEYS = {f.name for f in fields(SystemConfig)} - {"fit", "volume_range"}
_INT_KEYS = {"num_subcarriers", "num_sbs", "num_users", "rng_seed", "max_outer", "max_inner"}
_SOLVER_KEYS = {f.name for f in fields(SolverConfig)}
_OTHER_KEYS = {
    "volume_range", "noise_power_dbm", "fit_p", "fit_q", "fit_r",
    "task_delay_limits", "task_accuracy_limits",
}
KNOWN_KEYS = frozenset(_SYSTEM_KEYS | _SOLVER_KEYS | _OTHER_KEYS)


def _number(text, key, lineno, integer=False):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"not a number: {text!r}", key=key, line=lineno) from None
    if not math.isfinite(value):
        raise ConfigError(f"not finite: {text!r}", key=key, line=lineno)
    if integer:
        if value != int(value):
            raise ConfigError(f"expected an integer, got {text!r}", key=key, line=lineno)
        return int(value)
    return value


def _numbers(text, key, lineno):
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError("empty list", key=key, line=lineno)
    return [_number(p, key, lineno) for p in parts]


def parse_config_text(text: str) -> tuple[SystemConfig, TaskCatalog, SolverConfig]:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    Missing keys keep their defaults, unknown keys are rejected.
    """
    raw: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in raw:
            raise ConfigError("duplicate key", key=key, line=lineno)
        raw[key] = (value, lineno)

    if "noise_power" in raw and "noise_power_dbm" in raw:
        raise ConfigError("give noise_power or noise_power_dbm, not both",
                          key="noise_power_dbm", line=raw["noise_power_dbm"][1])

    system, solver = {}, {}
    fit = {}
    catalog_delays = catalog_acc = None
    for key, (value, lineno) in raw.items():
        if key in _SYSTEM_KEYS:
            system[key] = _number(value, key, lineno, integer=key in _INT_KEYS)
        elif key in _SOLVER_KEYS:
            solver[key] = _number(value, key, lineno, integer=key in _INT_KEYS)
        elif key == "noise_power_dbm":
            system["noise_power"] = dbm_to_watt(_number(value, key, lineno))
        elif key == "volume_range":
            vals = _numbers(value, key, lineno)
            if len(vals) != 2:
                raise ConfigError("expected 'low, high'", key=key, line=lineno)
            system["volume_range"] = tuple(vals)
        elif key.startswith("fit_"):
            fit[key[4:]] = _number(value, key, lineno)
        elif key == "task_delay_limits":
            catalog_delays = _numbers(value, key, lineno)
        elif key == "task_accuracy_limits":
            catalog_acc = _numbers(value, key, lineno)

    if fit:
        system["fit"] = FitParams(**fit)
    cfg = SystemConfig(**system)
    solver_cfg = SolverConfig(**solver)

    catalog = TaskCatalog()
    if catalog_delays is not None or catalog_acc is not None:
        delays = catalog_delays or [t.delay_limit for t in catalog.types]
        accs = catalog_acc or [t.accuracy_limit for t in catalog.types]
        if len(delays) != len(accs):
            raise ConfigError("task_delay_limits and task_accuracy_limits differ in length",
                              key="task_accuracy_limits")
        catalog = TaskCatalog(tuple(TaskType(d, a) for d, a in zip(delays, accs)))
    catalog.validate_against(cfg.fit)
    return cfg, catalog, solver_cfg


def parse_config(path) -> tuple[SystemConfig, TaskCatalog, SolverConfig]:
    return parse_config_text(Path(path).read_text())
