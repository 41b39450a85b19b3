"""Black-Scholes pricing over a float32 option buffer held in approximate memory."""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from ..errors import ConfigurationError
from ..memory_sim import Hierarchy
from .base import ApproxAllocator, Workload
from .quality import REL_ERROR_MAX, avg_rel_error

# columns of an option batch
SPOT, STRIKE, RATE, VOL, TIME, PUT = range(6)
N_FIELDS = 6


def bs_price(batch: np.ndarray) -> np.ndarray:
    """Closed-form European prices (float32 out). Zero ``vol * sqrt(T)`` gives the discounted intrinsic value."""
    with np.errstate(all="ignore"):  # flipped inputs may be NaN or Inf
        b = np.asarray(batch, dtype=np.float64)
        s, k, r, v, t, put = (b[:, i] for i in range(N_FIELDS))
        disc = k * np.exp(-r * t)
        vt = v * np.sqrt(t)
        d1 = (np.log(s / k) + (r + 0.5 * v * v) * t) / vt
        d2 = d1 - vt
        call = s * ndtr(d1) - disc * ndtr(d2)
        putp = disc * ndtr(-d2) - s * ndtr(-d1)
        degenerate = vt == 0
        call = np.where(degenerate, np.maximum(s - disc, 0.0), call)
        putp = np.where(degenerate, np.maximum(disc - s, 0.0), putp)
        price = np.where(put > 0.5, putp, call)
    return price.astype(np.float32)


class BlackScholes(Workload):
    name = "blackscholes"
    metric = "avg_rel_error"
    max_q = REL_ERROR_MAX

    def __init__(self, n_entries: int = 1024):
        if n_entries <= 0:
            raise ConfigurationError("option batch must be non-empty")
        self.n = n_entries

    def bind(self, h: Hierarchy) -> None:
        super().bind(h)
        alloc = ApproxAllocator(h.region, h.line_bytes)
        self.in_addr = alloc.malloc_approx(self.n * N_FIELDS * 4)
        self.out_addr = alloc.malloc_approx(self.n * 4)

    def _check(self, batch: np.ndarray) -> None:
        if batch.shape != (self.n, N_FIELDS) or batch.dtype != np.float32:
            raise ConfigurationError(f"expected a ({self.n}, {N_FIELDS}) float32 batch, got {batch.shape} {batch.dtype}")

    def run(self, h: Hierarchy, batch: np.ndarray) -> np.ndarray:
        self._check(batch)
        raw = batch.view(np.uint8).ravel()
        h.dma_write(self.in_addr, raw)
        loaded = h.read_block(self.in_addr, raw.size).view(np.float32).reshape(batch.shape)
        prices = bs_price(loaded)
        h.write_block(self.out_addr, prices.view(np.uint8))
        return h.read_block(self.out_addr, prices.nbytes).view(np.float32).copy()

    def golden(self, batch: np.ndarray) -> np.ndarray:
        self._check(batch)
        return bs_price(batch)

    def qos(self, golden_out, approx_out) -> float:
        return avg_rel_error(golden_out, approx_out)


def run_blackscholes(h: Hierarchy, batch: np.ndarray) -> np.ndarray:
    w = BlackScholes(batch.shape[0])
    w.bind(h)
    return w.run(h, batch)
