"""Discrete approximation knobs and the table-driven SRAM/DRAM error and power models.

Knob values are kept in physical units (volts for the cache supply, seconds for
the DRAM refresh period). :class:`KnobSpace` maps them to the integer indices
the controller works with; index 0 is always the most approximate setting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

import yaml

from .errors import DomainError

NOMINAL_VDD = 1.0

# SRAM 6T cell, 65 nm. Keys are absolute volts at 1.0 V nominal.
SRAM_READ_BER = {
    0.5: 3.55e-01,
    0.6: 8.71e-02,
    0.7: 7.59e-03,
    0.8: 3.24e-04,
    0.9: 2.00e-05,
    1.0: 2.00e-06,
}
SRAM_WRITE_BER = {
    0.5: 3.33e-02,
    0.6: 1.00e-03,
    0.7: 1.00e-04,
    0.8: 2.00e-05,
    0.9: 1.00e-06,
    1.0: 0.0,
}
# DRAM retention error rate and self-refresh power saving (vs. 64 ms) per refresh period in seconds.
DRAM_ERROR_RATE = {
    0.1: 8.088161777987015e-11,
    0.2: 5.007935227340456e-10,
    0.5: 7.96203148797984e-9,
    1.0: 3.8336966683708786e-8,
    2.0: 2.527728210797576e-7,
    5.0: 0.0000037739123458197472,
    10.0: 0.000020605975259769508,
    20.0: 0.00014468035186892834,
}
DRAM_POWER_SAVING = {
    0.1: 0.0842007434944238,
    0.2: 0.16003717472118957,
    0.5: 0.20687732342007436,
    1.0: 0.22323420074349443,
    2.0: 0.23066914498141266,
    5.0: 0.23438661710037174,
    10.0: 0.2366171003717472,
    20.0: 0.24,
}

AGENT_VDD_LEVELS = (0.7, 0.8, 0.9, 1.0)
AGENT_REFRESH_PERIODS = (20.0, 5.0, 1.0, 0.1)


class Access(Enum):
    READ = "read"
    WRITE = "write"


def _key(x: float) -> float:
    return round(float(x), 6)


@dataclass(frozen=True)
class KnobConfig:
    """One setting of all three knobs, in physical units."""

    l1: float
    l2: float
    dram: float

    def __str__(self) -> str:
        return f"(L1 {self.l1:.1f} V, L2 {self.l2:.1f} V, DRAM {self.dram:g} s)"


EXACT_CONFIG = KnobConfig(1.0, 1.0, 0.1)


@dataclass(frozen=True)
class KnobSpace:
    """Agent-visible knob domains, each ordered from most approximate to exact."""

    vdd_levels: tuple[float, ...] = AGENT_VDD_LEVELS
    periods: tuple[float, ...] = AGENT_REFRESH_PERIODS

    def __post_init__(self):
        v = [float(x) for x in self.vdd_levels]
        p = [float(x) for x in self.periods]
        if len(v) < 1 or len(p) < 1:
            raise DomainError("knob domains must be non-empty")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise DomainError("vdd levels must be strictly increasing (approximate -> exact)")
        if any(b >= a for a, b in zip(p, p[1:])):
            raise DomainError("refresh periods must be strictly decreasing (approximate -> exact)")
        object.__setattr__(self, "vdd_levels", tuple(v))
        object.__setattr__(self, "periods", tuple(p))

    @classmethod
    def from_tables(cls, tables: "ErrorPowerTables") -> "KnobSpace":
        """Every level the tables define, e.g. for static baselines outside the agent domain."""
        return cls(tuple(sorted(tables.sram_read_ber)), tuple(sorted(tables.dram_power_saving, reverse=True)))

    @property
    def n_sram(self) -> int:
        return len(self.vdd_levels)

    @property
    def n_dram(self) -> int:
        return len(self.periods)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_sram, self.n_sram, self.n_dram)

    @property
    def n_configs(self) -> int:
        return self.n_sram * self.n_sram * self.n_dram

    def config(self, l1: int, l2: int, dram: int) -> KnobConfig:
        if not (0 <= l1 < self.n_sram and 0 <= l2 < self.n_sram and 0 <= dram < self.n_dram):
            raise DomainError(f"knob indices out of range: {(l1, l2, dram)}")
        return KnobConfig(self.vdd_levels[l1], self.vdd_levels[l2], self.periods[dram])

    def indices(self, config: KnobConfig) -> tuple[int, int, int]:
        try:
            return (
                self.vdd_levels.index(_key(config.l1)),
                self.vdd_levels.index(_key(config.l2)),
                self.periods.index(_key(config.dram)),
            )
        except ValueError:
            raise DomainError(f"{config} is not in the agent knob space") from None

    def contains(self, config: KnobConfig) -> bool:
        try:
            self.indices(config)
        except DomainError:
            return False
        return True

    def all_configs(self):
        """Every agent-visible configuration, most approximate first."""
        for i in range(self.n_sram):
            for j in range(self.n_sram):
                for k in range(self.n_dram):
                    yield self.config(i, j, k)

    @property
    def exact(self) -> KnobConfig:
        return self.config(self.n_sram - 1, self.n_sram - 1, self.n_dram - 1)

    @property
    def most_approximate(self) -> KnobConfig:
        return self.config(0, 0, 0)


@dataclass(frozen=True)
class ErrorPowerTables:
    sram_read_ber: Mapping[float, float] = field(default_factory=lambda: dict(SRAM_READ_BER))
    sram_write_ber: Mapping[float, float] = field(default_factory=lambda: dict(SRAM_WRITE_BER))
    dram_error_rate: Mapping[float, float] = field(default_factory=lambda: dict(DRAM_ERROR_RATE))
    dram_power_saving: Mapping[float, float] = field(default_factory=lambda: dict(DRAM_POWER_SAVING))
    power_weights: tuple[float, float, float] = (0.35, 0.25, 0.40)
    sram_power_exponent: float = 2.0
    baseline_period: float = 0.1

    def __post_init__(self):
        for name in ("sram_read_ber", "sram_write_ber", "dram_error_rate", "dram_power_saving"):
            table = {_key(k): float(v) for k, v in getattr(self, name).items()}
            if not table:
                raise DomainError(f"{name} is empty")
            if any(not 0.0 <= v <= 1.0 for v in table.values()):
                raise DomainError(f"{name} has values outside [0, 1]")
            object.__setattr__(self, name, dict(sorted(table.items())))
        for name in ("sram_read_ber", "sram_write_ber"):
            vals = list(getattr(self, name).values())
            if any(b > a for a, b in zip(vals, vals[1:])):
                raise DomainError(f"{name} must be non-increasing in voltage")
        for name in ("dram_error_rate", "dram_power_saving"):
            vals = list(getattr(self, name).values())
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise DomainError(f"{name} must be non-decreasing in refresh period")
        w = tuple(float(x) for x in self.power_weights)
        if len(w) != 3 or any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-12:
            raise DomainError(f"power weights must be 3 non-negative fractions summing to 1, got {w}")
        object.__setattr__(self, "power_weights", w)
        if _key(self.baseline_period) not in self.dram_power_saving:
            raise DomainError("baseline refresh period missing from the power-saving table")

    @classmethod
    def from_file(cls, path: str | Path) -> "ErrorPowerTables":
        """Load tables from a YAML file; keys not present keep their defaults.

        Table entries are written as ``[[key, value], ...]`` pairs or as a mapping.
        """
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ErrorPowerTables":
        kwargs = {}
        for name in ("sram_read_ber", "sram_write_ber", "dram_error_rate", "dram_power_saving"):
            if name in raw:
                entry = raw[name]
                pairs = entry.items() if isinstance(entry, Mapping) else entry
                kwargs[name] = {float(k): float(v) for k, v in pairs}
        if "power_weights" in raw:
            kwargs["power_weights"] = tuple(raw["power_weights"])
        for name in ("sram_power_exponent", "baseline_period"):
            if name in raw:
                kwargs[name] = float(raw[name])
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out = {
            name: [[k, v] for k, v in getattr(self, name).items()]
            for name in ("sram_read_ber", "sram_write_ber", "dram_error_rate", "dram_power_saving")
        }
        out["power_weights"] = list(self.power_weights)
        out["sram_power_exponent"] = self.sram_power_exponent
        out["baseline_period"] = self.baseline_period
        return out


DEFAULT_TABLES = ErrorPowerTables()


def _lookup(table: Mapping[float, float], x: float, what: str) -> float:
    try:
        return table[_key(x)]
    except KeyError:
        raise DomainError(f"{what} {x!r} not in table {sorted(table)}") from None


def relative_vdd_percent(volts: float) -> float:
    return 100.0 * volts / NOMINAL_VDD


def sram_ber(volts: float, kind: Access | str, tables: ErrorPowerTables = DEFAULT_TABLES) -> float:
    kind = Access(kind)
    table = tables.sram_read_ber if kind is Access.READ else tables.sram_write_ber
    return _lookup(table, volts, "supply voltage")


def dram_error_rate(period: float, tables: ErrorPowerTables = DEFAULT_TABLES) -> float:
    return _lookup(tables.dram_error_rate, period, "refresh period")


def dram_power_saving(period: float, tables: ErrorPowerTables = DEFAULT_TABLES) -> float:
    return _lookup(tables.dram_power_saving, period, "refresh period")


def memory_power(config: KnobConfig, tables: ErrorPowerTables = DEFAULT_TABLES) -> float:
    """Memory power normalized to 1.0 V / 1.0 V / baseline refresh period.

    SRAM dynamic power scales as V**exponent; DRAM power is the self-refresh
    residue ``1 - saving`` relative to the residue at the baseline period.
    """
    # domain checks: raise on unknown levels even though the formula would accept any voltage
    sram_ber(config.l1, Access.READ, tables)
    sram_ber(config.l2, Access.READ, tables)
    w1, w2, wd = tables.power_weights
    e = tables.sram_power_exponent
    dram = (1.0 - dram_power_saving(config.dram, tables)) / (
        1.0 - dram_power_saving(tables.baseline_period, tables)
    )
    return w1 * (config.l1 / NOMINAL_VDD) ** e + w2 * (config.l2 / NOMINAL_VDD) ** e + wd * dram
