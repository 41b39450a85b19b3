"""Scenario runner, baselines, oracle and sweeps around the knob controller."""

from .baselines import DART_CONFIG, OracleResult, brute_force_oracle, measure_config, microbench_writeread, run_static
from .runner import (
    CSV_HEADER,
    RunResult,
    Summary,
    TraceRecord,
    greedy_rollout,
    modal_config,
    qos_overshoot,
    read_trace_csv,
    replay,
    run_scenario,
    save_run,
    static_baseline,
    trace_csv,
    write_gnuplot,
    write_trace_csv,
)
from .scenario import InputSpec, MemorySpec, Scenario, load_scenario
from .sweep import SWEEP_KINDS, sweep, sweep_csv

__all__ = [
    "CSV_HEADER",
    "DART_CONFIG",
    "InputSpec",
    "MemorySpec",
    "OracleResult",
    "RunResult",
    "SWEEP_KINDS",
    "Scenario",
    "Summary",
    "TraceRecord",
    "brute_force_oracle",
    "greedy_rollout",
    "load_scenario",
    "measure_config",
    "microbench_writeread",
    "modal_config",
    "qos_overshoot",
    "read_trace_csv",
    "replay",
    "run_scenario",
    "run_static",
    "save_run",
    "static_baseline",
    "sweep",
    "sweep_csv",
    "trace_csv",
    "write_gnuplot",
    "write_trace_csv",
]
