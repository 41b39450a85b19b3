import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from approxmem.errors import DomainError
from approxmem.knob_models import DEFAULT_TABLES, EXACT_CONFIG, KnobConfig, KnobSpace, memory_power
from approxmem.memory_sim import ApproxRegion, CacheConfig, Hierarchy

MB = 1 << 20
REGION_START = MB // 4


def _fault_free_at_exact(seed=0):
    h = Hierarchy(seed=seed)
    assert h.fault_map.fail_count(0.1) == 0
    return h


def test_region_validation():
    with pytest.raises(DomainError):
        Hierarchy(region=ApproxRegion(0, MB))  # more than 3/4 of memory
    with pytest.raises(DomainError):
        Hierarchy(region=ApproxRegion(REGION_START + 1, MB))
    with pytest.raises(DomainError):
        CacheConfig(1000, 4, 64)
    with pytest.raises(DomainError):
        ApproxRegion(10, 10)


def test_is_approx_boundaries():
    h = Hierarchy()
    assert h.is_approx(REGION_START)
    assert not h.is_approx(REGION_START - 1)
    assert not h.is_approx(0)
    with pytest.raises(DomainError):
        h.is_approx(MB)
    small = Hierarchy(region=ApproxRegion(REGION_START, REGION_START + 4096))
    assert not small.is_approx(REGION_START + 4096)


def test_cold_read_counts_and_fresh_stats():
    h = Hierarchy()
    s = h.snapshot_stats()
    assert s.l1_accesses == 0 and s.l2_accesses == 0 and s.dram_reads == 0
    h.read(REGION_START, 8)
    s = h.snapshot_stats()
    assert (s.l1_misses, s.l2_misses, s.dram_reads) == (1, 1, 1)
    h.read(REGION_START, 8)
    s = h.snapshot_stats()
    assert (s.l1_hits, s.l1_misses, s.dram_reads) == (1, 0, 0)


def test_read_counter_and_conservation():
    h = Hierarchy()
    rng = np.random.default_rng(0)
    n = 500
    for a in rng.integers(0, MB // 8, size=n):
        h.read(int(a) * 8, 8)
    s = h.snapshot_stats()
    assert s.l1_reads == n
    assert s.l1_hits + s.l1_misses == s.l1_accesses
    # read-only traffic: every L1 miss is one L2 lookup, every L2 miss one DRAM read
    assert s.l2_accesses == s.l2_hits + s.l2_misses == s.l1_misses
    assert s.dram_reads == s.l2_misses and s.dram_writes == 0


def test_exact_knobs_roundtrip_in_approx_region():
    h = _fault_free_at_exact()
    data = np.arange(4096, dtype=np.uint32).view(np.uint8)
    h.write_block(REGION_START, data)
    h.flush()
    assert np.array_equal(h.read_block(REGION_START, data.size), data)


def test_exact_region_untouched_at_most_approximate_knobs():
    h = Hierarchy(knobs=KnobConfig(0.7, 0.7, 20.0), seed=3)
    data = np.random.default_rng(1).integers(0, 256, 64 * 1024, dtype=np.uint8)
    h.write_block(0, data)
    h.flush()
    assert np.array_equal(h.read_block(0, data.size), data)
    assert sum(h.stats.flipped_bits.values()) == 0


def test_set_knobs_is_idempotent_and_sets_power():
    h = Hierarchy()
    cfg = KnobSpace().most_approximate
    h.set_knobs(cfg)
    rates = h.error_rates()
    h.set_knobs(cfg)
    assert h.error_rates() == rates
    assert memory_power(h.knobs) == pytest.approx(0.62595, abs=1e-5)


def test_nominal_voltage_is_fault_free_by_default():
    h = _fault_free_at_exact()
    assert all(v == 0.0 for k, v in h.error_rates().items() if k != "dram_load")
    noisy = Hierarchy(inject_at_nominal=True)
    assert noisy.error_rates()["l1_read"] == DEFAULT_TABLES.sram_read_ber[1.0]


def test_l1_read_flip_rate_matches_table():
    # 16k line reads = 8.4M bits; written value is all-zero, so flips show up as ones
    n_reads = 16_384
    h = Hierarchy(knobs=KnobConfig(1.0, 1.0, 0.1), seed=2)
    h.write_block(REGION_START, np.zeros(64, dtype=np.uint8))
    h.set_knobs(KnobConfig(0.7, 1.0, 0.1))
    flips = sum(int(np.unpackbits(h.read_block(REGION_START, 64)).sum()) for _ in range(n_reads))
    n = n_reads * 512
    p = DEFAULT_TABLES.sram_read_ber[0.7]
    assert abs(flips - n * p) <= 3 * math.sqrt(n * p * (1 - p))
    # read flips are transient: the stored line is still clean
    h.set_knobs(EXACT_CONFIG)
    assert not h.read_block(REGION_START, 64).any()


def test_writes_at_nominal_then_reads_never_corrupt():
    h = _fault_free_at_exact()
    for i in range(256):
        h.write(REGION_START + 8 * i, i * 0x0101010101010101 % 2**64, 8)
    for i in range(256):
        assert h.read(REGION_START + 8 * i, 8) == i * 0x0101010101010101 % 2**64


def test_dirty_eviction_injects_at_l2_write():
    h = Hierarchy(knobs=KnobConfig(0.7, 0.7, 0.1), seed=4)
    sets = h.l1.n_sets
    stride = sets * 64
    # five dirty lines mapping to one 4-way L1 set force one eviction into L2
    for i in range(5):
        h.write(REGION_START + i * stride, 0xDEADBEEF, 8)
    assert h.stats.injections["l2_write"] >= 1


def test_dram_faults_applied_on_store_and_nest():
    h = Hierarchy(knobs=KnobConfig(1.0, 1.0, 20.0), seed=8)
    size = 256 * 1024
    h.dma_write(REGION_START, np.zeros(size, dtype=np.uint8))
    got = h.peek(REGION_START, size)
    expected = h.fault_map.fail_set(20.0)
    expected = expected[expected < size * 8]
    assert int(np.unpackbits(got).sum()) == expected.size


def test_dma_write_outside_region_is_exact():
    h = Hierarchy(knobs=KnobConfig(0.7, 0.7, 20.0), seed=8)
    data = np.full(4096, 0xA5, dtype=np.uint8)
    h.dma_write(0, data)
    assert np.array_equal(h.read_block(0, 4096), data)


def test_misaligned_access_rejected():
    h = Hierarchy()
    with pytest.raises(DomainError):
        h.read(REGION_START + 3, 8)
    with pytest.raises(DomainError):
        h.write(REGION_START, 1 << 70, 8)
    with pytest.raises(DomainError):
        h.read_block(MB - 4, 8)


@settings(max_examples=25, deadline=None)
@given(
    st.lists(
        st.tuples(st.booleans(), st.integers(0, 4095), st.integers(0, 2**64 - 1)), min_size=1, max_size=200
    ),
    st.sampled_from(list(KnobSpace().all_configs())),
)
def test_exact_region_purity(ops, knobs):
    # any access trace confined to the exact quarter behaves like plain memory, whatever the knobs
    h = Hierarchy(knobs=knobs, seed=1)
    ref = {}
    for is_write, slot, value in ops:
        addr = 8 * slot
        if is_write:
            h.write(addr, value, 8)
            ref[addr] = value
        else:
            assert h.read(addr, 8) == ref.get(addr, 0)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32))
def test_determinism_per_seed(seed):
    def run():
        h = Hierarchy(knobs=KnobConfig(0.7, 0.8, 20.0), seed=seed)
        h.write_block(REGION_START, np.arange(8192, dtype=np.uint8) % 251)
        out = h.read_block(REGION_START, 8192)
        h.flush()
        return out, h.peek(REGION_START, 8192)

    a, b = run(), run()
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_error_monotone_in_each_knob():
    # mean corrupted bits over 16 seeds of a fixed write/read trace never drops as a knob gets more approximate
    space = KnobSpace()

    def corrupted(cfg):
        total = 0
        for seed in range(16):
            h = Hierarchy(knobs=cfg, seed=seed)
            data = np.zeros(32 * 1024, dtype=np.uint8)
            h.write_block(REGION_START, data)
            h.flush()
            total += int(np.unpackbits(h.read_block(REGION_START, data.size)).sum())
        return total / 16

    for d in range(3):
        idx = [3, 3, 3]
        prev = None
        for level in range(4)[::-1]:
            idx[d] = level
            c = corrupted(space.config(*idx))
            if prev is not None:
                assert c >= prev
            prev = c
