"""Lightweight synthetic workload: a QoS sensor sampled from the knob error rates.

Models a working set of lines that each pass through the five injection points
a fixed number of times and reports the percentage of lines that came back
corrupted. No data moves through the hierarchy; only its knobs and error tables
are consulted, so a frame costs a single binomial draw.
"""

from __future__ import annotations

import math

from ..memory_sim import Hierarchy
from .base import Workload


class SyntheticWorkload(Workload):
    name = "synthetic"
    metric = "corrupted_line_pct"
    max_q = 100.0

    def __init__(self, n_lines: int = 64, line_bytes: int = 64, passes: dict | None = None):
        self.n_lines = n_lines
        self.line_bits = 8 * line_bytes
        self.passes = {"l1_read": 2, "l1_write": 1, "l2_read": 1, "l2_write": 1, "dram_load": 1}
        if passes:
            self.passes.update(passes)

    def line_error_prob(self, h: Hierarchy) -> float:
        rates = h.error_rates()
        log_ok = sum(
            count * self.line_bits * math.log1p(-min(rates[point], 1.0 - 1e-16))
            for point, count in self.passes.items()
        )
        return -math.expm1(log_ok)

    def run(self, h: Hierarchy, inp=None) -> int:
        return int(h.rng.gen.binomial(self.n_lines, self.line_error_prob(h)))

    def golden(self, inp=None) -> int:
        return 0

    def qos(self, golden_out, approx_out) -> float:
        return 100.0 * abs(approx_out - golden_out) / self.n_lines
