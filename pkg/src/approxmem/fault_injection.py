"""Seeded bit-error injection.

SRAM errors are independent per access: every access draws a fresh flip mask.
DRAM retention errors come from a persistent per-bit fault map drawn once per
run; the cells failing at a shorter refresh period are always a subset of the
cells failing at a longer one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .knob_models import DEFAULT_TABLES, DomainError, ErrorPowerTables, _key


class InjectorRng:
    """Deterministic random source for one simulation instance."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFF_FFFF_FFFF_FFFF
        self.gen = np.random.Generator(np.random.PCG64(self.seed))


def _check_ber(ber: float) -> None:
    if not 0.0 <= ber <= 1.0:
        raise DomainError(f"bit error rate {ber} outside [0, 1]")


def flip_positions(n_bits: int, ber: float, rng: InjectorRng) -> np.ndarray:
    """Sorted positions in ``[0, n_bits)`` of bits flipped independently with probability ``ber``.

    Draws the flip count from Binomial(n_bits, ber), then a uniform subset of that
    size; the two steps together are exactly i.i.d. Bernoulli per bit.
    """
    _check_ber(ber)
    if n_bits <= 0 or ber == 0.0:
        return np.empty(0, dtype=np.int64)
    if ber == 1.0:
        return np.arange(n_bits, dtype=np.int64)
    k = int(rng.gen.binomial(n_bits, ber))
    if k == 0:
        return np.empty(0, dtype=np.int64)
    if k > n_bits // 4:
        return np.flatnonzero(rng.gen.random(n_bits) < ber).astype(np.int64)
    return np.sort(rng.gen.choice(n_bits, size=k, replace=False)).astype(np.int64)


def flip_mask_bytes(n_bytes: int, ber: float, rng: InjectorRng) -> np.ndarray:
    """A uint8 flip mask covering ``n_bytes`` (bit ``i`` of byte ``j`` is bit ``8*j + i``)."""
    mask = np.zeros(n_bytes, dtype=np.uint8)
    pos = flip_positions(8 * n_bytes, ber, rng)
    if pos.size:
        np.bitwise_or.at(mask, pos >> 3, (1 << (pos & 7)).astype(np.uint8))
    return mask


def gen_flip_mask(width_bits: int, ber: float, rng: InjectorRng) -> int:
    """Integer bitmask of ``width_bits`` bits, each set independently with probability ``ber``."""
    if width_bits < 1:
        raise DomainError("mask width must be at least one bit")
    mask = 0
    for p in flip_positions(width_bits, ber, rng).tolist():
        mask |= 1 << p
    return mask


def apply_mask(data: int, mask: int, width_bits: int | None = None) -> int:
    if width_bits is not None:
        limit = 1 << width_bits
        if not (0 <= data < limit and 0 <= mask < limit):
            raise DomainError(f"data and mask must both fit in {width_bits} bits")
    elif data < 0 or mask < 0:
        raise DomainError("data and mask must be non-negative")
    return data ^ mask


@dataclass(frozen=True)
class DramFaultMap:
    """Persistent retention-failure map over the approximate DRAM region.

    ``positions`` are the bit offsets (sorted) that fail at the longest period;
    ``level[i]`` is the index into ``periods`` (ascending) of the shortest period
    at which ``positions[i]`` already fails.
    """

    region_bits: int
    periods: tuple[float, ...]
    fail_prob: tuple[float, ...]
    positions: np.ndarray
    level: np.ndarray

    def _period_index(self, period: float) -> int:
        try:
            return self.periods.index(_key(period))
        except ValueError:
            raise DomainError(f"refresh period {period} not in fault map {self.periods}") from None

    def fail_set(self, period: float) -> np.ndarray:
        return self.positions[self.level <= self._period_index(period)]

    def fail_count(self, period: float) -> int:
        return int(np.count_nonzero(self.level <= self._period_index(period)))


def build_dram_map(
    region_bits: int, tables: ErrorPowerTables = DEFAULT_TABLES, seed: int = 0
) -> DramFaultMap:
    """Draw a fault map by nested thinning.

    Each bit fails at the longest period with probability ``p_max``. A failing bit
    then gets ``u ~ U(0, 1)`` and fails at period ``t`` iff ``u < p(t) / p_max``,
    which gives marginal probability ``p(t)`` per bit and nested fail sets.
    """
    if region_bits <= 0:
        raise DomainError("region_bits must be positive")
    periods = tuple(sorted(tables.dram_error_rate))
    probs = tuple(tables.dram_error_rate[t] for t in periods)
    rng = np.random.Generator(np.random.PCG64(int(seed) & 0xFFFF_FFFF_FFFF_FFFF))
    p_max = probs[-1]
    if p_max == 0.0:
        empty = np.empty(0, dtype=np.int64)
        return DramFaultMap(region_bits, periods, probs, empty, empty.astype(np.int8))
    k = int(rng.binomial(region_bits, p_max))
    if k > region_bits // 4:
        positions = np.flatnonzero(rng.random(region_bits) < p_max).astype(np.int64)
    else:
        positions = np.sort(rng.choice(region_bits, size=k, replace=False)).astype(np.int64)
    u = rng.random(positions.size)
    thresholds = np.asarray(probs) / p_max
    # first period index whose threshold exceeds u; thresholds are non-decreasing
    level = np.searchsorted(thresholds, u, side="right").astype(np.int8)
    return DramFaultMap(region_bits, periods, probs, positions, level)


def dram_corrupt(fmap: DramFaultMap, period: float, bit_start: int, bit_stop: int) -> np.ndarray:
    """Region-relative bit offsets in ``[bit_start, bit_stop)`` that fail at ``period``."""
    if not 0 <= bit_start <= bit_stop <= fmap.region_bits:
        raise DomainError(
            f"bit range [{bit_start}, {bit_stop}) outside approximate region of {fmap.region_bits} bits"
        )
    idx = fmap._period_index(period)
    lo, hi = np.searchsorted(fmap.positions, [bit_start, bit_stop])
    sel = fmap.positions[lo:hi]
    return sel[fmap.level[lo:hi] <= idx]
