"""Workload plumbing: approximate-buffer allocation and the workload interface."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError
from ..memory_sim import ApproxRegion, Hierarchy


class ApproxAllocator:
    """Line-aligned bump allocator over the approximate region."""

    def __init__(self, region: ApproxRegion, align: int = 64):
        self.region = region
        self.align = align
        self.next = region.start

    def malloc_approx(self, nbytes: int) -> int:
        addr = -(-self.next // self.align) * self.align
        if addr + nbytes > self.region.end:
            raise ConfigurationError(
                f"buffer of {nbytes} bytes does not fit in the approximate region "
                f"({self.region.end - addr} bytes left)"
            )
        self.next = addr + nbytes
        return addr


class Workload:
    """An error-tolerant application with a golden reference and a quality monitor.

    Subclasses allocate their non-critical buffers in :meth:`bind` and route
    every access to them through the hierarchy in :meth:`run`.
    """

    name = "workload"
    metric = "rmse"
    max_q = 255.0

    def bind(self, h: Hierarchy) -> None:
        self.h = h

    def run(self, h: Hierarchy, inp):
        raise NotImplementedError

    def golden(self, inp):
        raise NotImplementedError

    def qos(self, golden_out, approx_out) -> float:
        raise NotImplementedError
