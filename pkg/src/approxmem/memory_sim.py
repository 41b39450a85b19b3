"""Functional L1/L2/DRAM model with fault injection on an approximate address range.

Timing is not modeled. Caches are set-associative, LRU, write-back and
write-allocate, and keep their own copy of every line so errors injected at one
level stay visible to the levels above it. Faults are injected only for lines
inside the approximate region, at five points:

* L1 read: transient flips on the bytes returned to the core.
* L1 write: flips on the bytes stored into the L1 line.
* L2 read: flips on a line as it is transferred from L2 into L1.
* L2 write: flips on the dirty bytes of an L1 victim merged into L2.
* DRAM load: bytes stored into approximate DRAM (L2 write-back or input DMA)
  have their failing cells flipped according to the fault map and the current
  refresh period.

Dirty state is tracked per byte so a write-back only rewrites (and only
re-corrupts) the bytes that were actually modified.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field, fields

import numpy as np

from .fault_injection import DramFaultMap, InjectorRng, build_dram_map
from .knob_models import (
    DEFAULT_TABLES,
    EXACT_CONFIG,
    NOMINAL_VDD,
    Access,
    DomainError,
    ErrorPowerTables,
    KnobConfig,
    dram_error_rate,
    sram_ber,
)

INJECTION_POINTS = ("l1_read", "l1_write", "l2_read", "l2_write", "dram_load")


@dataclass(frozen=True)
class CacheConfig:
    size_bytes: int
    associativity: int
    line_bytes: int = 64

    def __post_init__(self):
        if self.associativity < 1 or self.line_bytes < 1:
            raise DomainError("associativity and line size must be positive")
        if self.size_bytes % (self.associativity * self.line_bytes):
            raise DomainError("cache size must be a multiple of associativity * line size")
        if self.size_bytes == 0:
            raise DomainError("cache size must be positive")

    @property
    def n_sets(self) -> int:
        return self.size_bytes // (self.associativity * self.line_bytes)


L1_DEFAULT = CacheConfig(16 * 1024, 4, 64)
L2_DEFAULT = CacheConfig(64 * 1024, 4, 64)


@dataclass(frozen=True)
class ApproxRegion:
    """Half-open byte range ``[start, end)`` of non-critical memory."""

    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise DomainError(f"invalid approximate region [{self.start}, {self.end})")

    @property
    def size(self) -> int:
        return self.end - self.start

    def contains(self, addr: int) -> bool:
        return self.start <= addr < self.end


@dataclass
class AccessStats:
    l1_reads: int = 0
    l1_writes: int = 0
    l1_hits: int = 0
    l1_misses: int = 0
    l2_hits: int = 0
    l2_misses: int = 0
    dram_reads: int = 0
    dram_writes: int = 0
    injections: dict = field(default_factory=lambda: dict.fromkeys(INJECTION_POINTS, 0))
    flipped_bits: dict = field(default_factory=lambda: dict.fromkeys(INJECTION_POINTS, 0))

    @property
    def l1_accesses(self) -> int:
        return self.l1_reads + self.l1_writes

    @property
    def l2_accesses(self) -> int:
        return self.l2_hits + self.l2_misses

    def copy(self) -> "AccessStats":
        out = AccessStats(**{f.name: getattr(self, f.name) for f in fields(self)})
        out.injections = dict(self.injections)
        out.flipped_bits = dict(self.flipped_bits)
        return out

    def __sub__(self, other: "AccessStats") -> "AccessStats":
        out = self.copy()
        for f in fields(self):
            if f.name in ("injections", "flipped_bits"):
                d = getattr(out, f.name)
                for k in d:
                    d[k] -= getattr(other, f.name)[k]
            else:
                setattr(out, f.name, getattr(self, f.name) - getattr(other, f.name))
        return out


class BernoulliStream:
    """Positions of i.i.d. Bernoulli(p) successes over a stream of bits, via geometric gaps.

    Cheap for small ``p``: a request for ``n`` bits with no flip in it costs no draw.
    """

    _BATCH = 256

    def __init__(self, rng: InjectorRng):
        self.rng = rng
        self.p = 0.0
        self.gap = float("inf")  # bits remaining before the next success
        self._buf: list[int] = []
        self._i = 0

    def _next_gap(self) -> int:
        if self._i >= len(self._buf):
            # numpy's geometric counts trials up to and including the success
            self._buf = (self.rng.gen.geometric(self.p, size=self._BATCH) - 1).tolist()
            self._i = 0
        g = self._buf[self._i]
        self._i += 1
        return g

    def set_p(self, p: float) -> None:
        if p == self.p:
            return
        self.p = p
        self._buf = []
        self._i = 0
        # memoryless: a fresh gap under the new rate is exact
        self.gap = float("inf") if p == 0.0 else self._next_gap()

    def take(self, n_bits: int) -> list[int]:
        if self.gap >= n_bits:
            self.gap -= n_bits
            return []
        if self.p >= 1.0:
            return list(range(n_bits))
        out = []
        pos = int(self.gap)
        while pos < n_bits:
            out.append(pos)
            pos += 1 + self._next_gap()
        self.gap = pos - n_bits
        return out


def _flip(buf: bytearray, offset: int, positions) -> None:
    for p in positions:
        buf[offset + (p >> 3)] ^= 1 << (p & 7)


def _byte_indices(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


class _Cache:
    """Tag/LRU bookkeeping plus line storage in one flat bytearray.

    Dirty state is an integer bitmask over the bytes of each line.
    """

    def __init__(self, cfg: CacheConfig):
        self.cfg = cfg
        self.lb = cfg.line_bytes
        self.full = (1 << self.lb) - 1
        self.n_sets = cfg.n_sets
        self.assoc = cfg.associativity
        n = self.n_sets * self.assoc
        self.data = bytearray(n * self.lb)
        self.dirty = [0] * n
        self.slot_line = [-1] * n
        self.where: dict[int, int] = {}
        self.lru = [[] for _ in range(self.n_sets)]  # slots, least recent first

    def find(self, line: int) -> int | None:
        slot = self.where.get(line)
        if slot is not None:
            order = self.lru[line % self.n_sets]
            if order[-1] != slot:
                order.remove(slot)
                order.append(slot)
        return slot

    def victim(self, line: int) -> int:
        """Slot to use for ``line``; the line held there (if any) must be evicted by the caller."""
        s = line % self.n_sets
        order = self.lru[s]
        if len(order) < self.assoc:
            return s * self.assoc + len(order)
        return order[0]

    def install(self, line: int, slot: int) -> None:
        old = self.slot_line[slot]
        order = self.lru[line % self.n_sets]
        if old >= 0:
            del self.where[old]
            order.remove(slot)
        self.slot_line[slot] = line
        self.where[line] = slot
        order.append(slot)
        self.dirty[slot] = 0

    def invalidate(self, line: int) -> None:
        slot = self.where.pop(line, None)
        if slot is None:
            return
        s = line % self.n_sets
        order = self.lru[s]
        order.remove(slot)
        # keep used slots packed at the front of the set so victim() stays simple
        last = s * self.assoc + len(order)
        lb = self.lb
        if slot != last:
            other = self.slot_line[last]
            self.data[slot * lb : (slot + 1) * lb] = self.data[last * lb : (last + 1) * lb]
            self.dirty[slot] = self.dirty[last]
            self.slot_line[slot] = other
            self.where[other] = slot
            order[order.index(last)] = slot
        self.slot_line[last] = -1
        self.dirty[last] = 0

    def lines(self) -> list[int]:
        return list(self.where)


class Hierarchy:
    """L1 + L2 + DRAM with an approximate region and knob-controlled fault injection.

    SRAM levels at or above the nominal supply are treated as fault-free unless
    ``inject_at_nominal`` is set, so the exact configuration reproduces a
    faultless memory.
    """

    def __init__(
        self,
        memory_bytes: int = 1 << 20,
        region: ApproxRegion | None = None,
        l1: CacheConfig = L1_DEFAULT,
        l2: CacheConfig = L2_DEFAULT,
        tables: ErrorPowerTables = DEFAULT_TABLES,
        knobs: KnobConfig = EXACT_CONFIG,
        seed: int = 0,
        map_seed: int | None = None,
        inject_at_nominal: bool = False,
    ):
        if l1.line_bytes != l2.line_bytes:
            raise DomainError("L1 and L2 must share a line size")
        self.line_bytes = l1.line_bytes
        if memory_bytes <= 0 or memory_bytes % self.line_bytes:
            raise DomainError("memory size must be a positive multiple of the line size")
        if region is None:
            region = ApproxRegion(memory_bytes // 4, memory_bytes)
        if region.end > memory_bytes:
            raise DomainError("approximate region exceeds modeled memory")
        if region.start % self.line_bytes or region.end % self.line_bytes:
            raise DomainError("approximate region must be line aligned")
        if region.size * 4 > memory_bytes * 3:
            raise DomainError("approximate region may cover at most 3/4 of DRAM")
        self.memory_bytes = memory_bytes
        self.region = region
        self._approx_lines = (region.start // self.line_bytes, region.end // self.line_bytes)
        self.tables = tables
        self.inject_at_nominal = inject_at_nominal
        self.rng = InjectorRng(seed)
        self.dram = bytearray(memory_bytes)
        self.fault_map: DramFaultMap = build_dram_map(
            region.size * 8, tables, seed if map_seed is None else map_seed
        )
        self.l1 = _Cache(l1)
        self.l2 = _Cache(l2)
        self.stats = AccessStats()
        self._mark = AccessStats()
        self._streams = {p: BernoulliStream(self.rng) for p in INJECTION_POINTS if p != "dram_load"}
        self._fail_bits: dict[float, list[int]] = {}
        self.knobs = knobs
        self.set_knobs(knobs)

    # -- knobs ---------------------------------------------------------------

    def _sram_rate(self, volts: float, kind: Access) -> float:
        ber = sram_ber(volts, kind, self.tables)
        if volts >= NOMINAL_VDD and not self.inject_at_nominal:
            return 0.0
        return ber

    def set_knobs(self, config: KnobConfig) -> None:
        """Reconfigure; takes effect on the next access, caches are not flushed."""
        rates = {
            "l1_read": self._sram_rate(config.l1, Access.READ),
            "l1_write": self._sram_rate(config.l1, Access.WRITE),
            "l2_read": self._sram_rate(config.l2, Access.READ),
            "l2_write": self._sram_rate(config.l2, Access.WRITE),
        }
        dram_error_rate(config.dram, self.tables)
        if config.dram not in self._fail_bits:
            self._fail_bits[config.dram] = self.fault_map.fail_set(config.dram).tolist()
        for point, p in rates.items():
            self._streams[point].set_p(p)
        self.knobs = config

    def error_rates(self) -> dict[str, float]:
        """Per-bit error probability currently in force at each injection point."""
        rates = {p: s.p for p, s in self._streams.items()}
        rates["dram_load"] = dram_error_rate(self.knobs.dram, self.tables)
        return rates

    # -- address helpers -----------------------------------------------------

    def is_approx(self, addr: int) -> bool:
        if not 0 <= addr < self.memory_bytes:
            raise DomainError(f"address {addr:#x} outside modeled memory")
        return self.region.contains(addr)

    def _line_approx(self, line: int) -> bool:
        lo, hi = self._approx_lines
        return lo <= line < hi

    def _check_range(self, addr: int, n: int) -> None:
        if n <= 0 or addr < 0 or addr + n > self.memory_bytes:
            raise DomainError(f"access [{addr:#x}, {addr + n:#x}) outside modeled memory")

    def _inject(self, point: str, buf: bytearray, offset: int, n: int) -> None:
        """Flip bits of ``buf[offset:offset + n]`` in place at ``point``'s current rate."""
        self.stats.injections[point] += 1
        pos = self._streams[point].take(8 * n)
        if pos:
            _flip(buf, offset, pos)
            self.stats.flipped_bits[point] += len(pos)

    def _inject_bytes(self, point: str, buf: bytearray, offset: int, byte_idx: list[int]) -> None:
        """Like ``_inject`` but only over the listed bytes of the line at ``offset``."""
        self.stats.injections[point] += 1
        pos = self._streams[point].take(8 * len(byte_idx))
        if pos:
            _flip(buf, offset, [8 * byte_idx[p >> 3] + (p & 7) for p in pos])
            self.stats.flipped_bits[point] += len(pos)

    def _dram_corrupt(self, addr: int, n: int, dirty: int | None = None) -> None:
        """Apply retention faults to freshly stored DRAM bytes ``[addr, addr + n)``."""
        lo, hi = max(addr, self.region.start), min(addr + n, self.region.end)
        if lo >= hi:
            return
        self.stats.injections["dram_load"] += 1
        fails = self._fail_bits[self.knobs.dram]
        if not fails:
            return
        base = self.region.start * 8
        i = bisect_left(fails, (lo * 8) - base)
        j = bisect_left(fails, (hi * 8) - base, i)
        if i == j:
            return
        dram = self.dram
        flipped = 0
        for b in fails[i:j]:
            a = self.region.start + (b >> 3)
            if dirty is not None and not (dirty >> (a - addr)) & 1:
                continue
            dram[a] ^= 1 << (b & 7)
            flipped += 1
        self.stats.flipped_bits["dram_load"] += flipped

    # -- line movement -------------------------------------------------------

    def _writeback_l2_slot(self, slot: int) -> None:
        l2 = self.l2
        lb = self.line_bytes
        dirty = l2.dirty[slot]
        line = l2.slot_line[slot]
        a = line * lb
        self.stats.dram_writes += 1
        if dirty == l2.full:
            self.dram[a : a + lb] = l2.data[slot * lb : (slot + 1) * lb]
            self._dram_corrupt(a, lb)
        else:
            o = slot * lb
            for i in _byte_indices(dirty):
                self.dram[a + i] = l2.data[o + i]
            self._dram_corrupt(a, lb, dirty)
        l2.dirty[slot] = 0

    def _l2_slot(self, line: int) -> int:
        l2 = self.l2
        slot = l2.find(line)
        if slot is not None:
            self.stats.l2_hits += 1
            return slot
        self.stats.l2_misses += 1
        slot = l2.victim(line)
        if l2.slot_line[slot] >= 0 and l2.dirty[slot]:
            self._writeback_l2_slot(slot)
        l2.install(line, slot)
        lb = self.line_bytes
        a = line * lb
        self.stats.dram_reads += 1
        l2.data[slot * lb : (slot + 1) * lb] = self.dram[a : a + lb]
        return slot

    def _l2_writeback(self, line: int, src: bytearray, src_off: int, dirty: int) -> None:
        """Merge the dirty bytes of an L1 line into L2."""
        slot = self._l2_slot(line)
        l2 = self.l2
        lb = self.line_bytes
        o = slot * lb
        if dirty == l2.full:
            l2.data[o : o + lb] = src[src_off : src_off + lb]
            if self._line_approx(line):
                self._inject("l2_write", l2.data, o, lb)
        else:
            idx = _byte_indices(dirty)
            for i in idx:
                l2.data[o + i] = src[src_off + i]
            if self._line_approx(line):
                self._inject_bytes("l2_write", l2.data, o, idx)
        l2.dirty[slot] |= dirty

    def _l1_slot(self, line: int) -> int:
        l1 = self.l1
        slot = l1.find(line)
        if slot is not None:
            self.stats.l1_hits += 1
            return slot
        self.stats.l1_misses += 1
        lb = self.line_bytes
        slot = l1.victim(line)
        old = l1.slot_line[slot]
        if old >= 0 and l1.dirty[slot]:
            self._l2_writeback(old, l1.data, slot * lb, l1.dirty[slot])
        l1.install(line, slot)
        s2 = self._l2_slot(line)
        o = slot * lb
        l1.data[o : o + lb] = self.l2.data[s2 * lb : (s2 + 1) * lb]
        if self._line_approx(line):
            self._inject("l2_read", l1.data, o, lb)
        return slot

    # -- public access API ---------------------------------------------------

    def read_block(self, addr: int, n: int) -> np.ndarray:
        """Load ``n`` bytes starting at ``addr`` through the hierarchy (one access per line touched)."""
        self._check_range(addr, n)
        out = bytearray(n)
        lb = self.line_bytes
        data = self.l1.data
        pos = 0
        while pos < n:
            line, off = divmod(addr + pos, lb)
            take = min(lb - off, n - pos)
            slot = self._l1_slot(line)
            self.stats.l1_reads += 1
            o = slot * lb + off
            out[pos : pos + take] = data[o : o + take]
            if self._line_approx(line):
                self._inject("l1_read", out, pos, take)
            pos += take
        return np.frombuffer(out, dtype=np.uint8)

    def write_block(self, addr: int, data) -> None:
        """Store bytes starting at ``addr`` through the hierarchy (write-allocate)."""
        src = np.ascontiguousarray(data, dtype=np.uint8).tobytes()
        n = len(src)
        self._check_range(addr, n)
        lb = self.line_bytes
        l1 = self.l1
        pos = 0
        while pos < n:
            line, off = divmod(addr + pos, lb)
            take = min(lb - off, n - pos)
            slot = self._l1_slot(line)
            self.stats.l1_writes += 1
            o = slot * lb + off
            l1.data[o : o + take] = src[pos : pos + take]
            if self._line_approx(line):
                self._inject("l1_write", l1.data, o, take)
            l1.dirty[slot] |= ((1 << take) - 1) << off
            pos += take

    def read(self, addr: int, width: int = 8) -> int:
        """Aligned little-endian load of a ``width``-byte word."""
        if width not in (1, 2, 4, 8) or addr % width:
            raise DomainError(f"misaligned or unsupported access: addr={addr:#x} width={width}")
        return int.from_bytes(self.read_block(addr, width).tobytes(), "little")

    def write(self, addr: int, value: int, width: int = 8) -> None:
        if width not in (1, 2, 4, 8) or addr % width:
            raise DomainError(f"misaligned or unsupported access: addr={addr:#x} width={width}")
        if not 0 <= value < 1 << (8 * width):
            raise DomainError(f"value does not fit in {width} bytes")
        self.write_block(addr, np.frombuffer(value.to_bytes(width, "little"), dtype=np.uint8))

    def dma_write(self, addr: int, data) -> None:
        """Deliver input data straight into DRAM, invalidating cached copies.

        Lines only partially covered are flushed first so their other bytes survive.
        """
        src = np.ascontiguousarray(data, dtype=np.uint8).tobytes()
        n = len(src)
        self._check_range(addr, n)
        lb = self.line_bytes
        first, last = addr // lb, (addr + n - 1) // lb
        for line in range(first, last + 1):
            if line in self.l1.where or line in self.l2.where:
                partial = line * lb < addr or (line + 1) * lb > addr + n
                self._drop_line(line, write_back=partial)
        self.stats.dram_writes += 1
        self.dram[addr : addr + n] = src
        self._dram_corrupt(addr, n)

    def _drop_line(self, line: int, write_back: bool) -> None:
        lb = self.line_bytes
        s1 = self.l1.where.get(line)
        if s1 is not None:
            if write_back and self.l1.dirty[s1]:
                self._l2_writeback(line, self.l1.data, s1 * lb, self.l1.dirty[s1])
            self.l1.invalidate(line)
        s2 = self.l2.where.get(line)
        if s2 is not None:
            if write_back and self.l2.dirty[s2]:
                self._writeback_l2_slot(s2)
            self.l2.invalidate(line)

    def flush(self) -> None:
        """Write every dirty line back to DRAM and empty both caches."""
        for line in self.l1.lines():
            self._drop_line(line, write_back=True)
        for line in self.l2.lines():
            self._drop_line(line, write_back=True)

    def peek(self, addr: int, n: int) -> np.ndarray:
        """Current DRAM contents, bypassing caches and injection (for inspection only)."""
        self._check_range(addr, n)
        return np.frombuffer(bytes(self.dram[addr : addr + n]), dtype=np.uint8)

    def snapshot_stats(self) -> AccessStats:
        """Counters accumulated since the previous snapshot."""
        now = self.stats.copy()
        delta = now - self._mark
        self._mark = now
        return delta
