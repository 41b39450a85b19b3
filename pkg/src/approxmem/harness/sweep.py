"""One-dimensional parameter sweeps over a base scenario, emitted as long-format rows."""

from __future__ import annotations

import csv
import io
from dataclasses import replace

import numpy as np

from ..errors import ConfigurationError
from ..knob_models import EXACT_CONFIG, KnobConfig, KnobSpace
from .baselines import measure_config, run_static
from .runner import run_scenario
from .scenario import Scenario

SWEEP_KINDS = ("sensitivity", "invocation_period", "state_space")
SWEEP_HEADER = ("dimension", "value", "metric", "result")

DEFAULT_VALUES = {
    "invocation_period": (1, 2, 5, 10),
    "state_space": (4, 8, 16, 32, 64),
}


def _sensitivity(base: Scenario, seed: int, values) -> list[tuple]:
    """Vary one knob across its full table domain with the other two exact."""
    full = KnobSpace.from_tables(base.tables)
    domains = {
        "l1": values or full.vdd_levels,
        "l2": values or full.vdd_levels,
        "dram": values or full.periods,
    }
    rows = []
    for dim, levels in domains.items():
        for v in levels:
            cfg = replace(EXACT_CONFIG, **{dim: float(v)})
            if not full.contains(cfg):
                continue
            res = run_static(base, cfg, seed)
            qs = measure_config(base, cfg, seed)
            rows.append((dim, v, "power", res.summary.mean_power))
            rows.append((dim, v, "median_q", float(np.median(qs))))
            rows.append((dim, v, "qos_overshoot", res.summary.qos_overshoot))
    return rows


def _agent_grid(base: Scenario, seed: int, kind: str, values) -> list[tuple]:
    rows = []
    for v in values:
        if kind == "invocation_period":
            s = replace(base, invocation_period=int(v))
        else:
            s = replace(base, n_qos_buckets=int(v))
        res = run_scenario(s, seed)
        sm = res.summary
        rows.append((kind, v, "mean_power", sm.mean_power))
        rows.append((kind, v, "power_reduction", 1.0 - sm.mean_power))
        rows.append((kind, v, "invocations", sm.invocations))
        rows.append((kind, v, "qos_overshoot", sm.qos_overshoot))
        rows.append((kind, v, "violations", sm.violations))
    return rows


def sweep(kind: str, base: Scenario, seed: int = 0, values=None) -> list[tuple]:
    """Rows of ``(dimension, value, metric, result)``.

    ``values`` overrides the grid; otherwise the scenario's ``sweep.values`` or
    the defaults are used (the sensitivity sweep defaults to each knob's full table).
    """
    if kind not in SWEEP_KINDS:
        raise ConfigurationError(f"unknown sweep kind {kind!r}; choose from {SWEEP_KINDS}")
    if values is None:
        values = base.sweep_values
    if values is None:
        values = DEFAULT_VALUES.get(kind)
    if values is not None and len(values) == 0:
        raise ConfigurationError("sweep grid is empty")
    if kind == "sensitivity":
        return _sensitivity(base, seed, values)
    return _agent_grid(base, seed, kind, values)


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for dim, v, metric, result in rows:
        w.writerow((dim, v, metric, repr(float(result))))
    return buf.getvalue()


__all__ = ["SWEEP_HEADER", "SWEEP_KINDS", "sweep", "sweep_csv"]
