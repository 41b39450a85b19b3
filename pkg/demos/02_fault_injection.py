"""Fault injection: Bernoulli bit flips per access, and a nested DRAM retention map.

Run: python3 demos/02_fault_injection.py
"""

import numpy as np

from approxmem.fault_injection import InjectorRng, build_dram_map, flip_mask_bytes

n_bits = 1 << 20
for ber in (1e-2, 1e-4, 1e-6):
    mask = flip_mask_bytes(n_bits // 8, ber, InjectorRng(7))
    flips = int(np.unpackbits(mask).sum())
    print(f"BER {ber:.0e}: {flips} flips in {n_bits} bits (expected {ber * n_bits:.1f})")

# The map is drawn once per run; longer refresh periods only add failing bits.
fmap = build_dram_map(region_bits=1 << 23, seed=3)
prev = None
for t in (0.1, 1, 5, 20):
    cur = set(fmap.fail_set(t).tolist())
    nested = prev is None or prev <= cur
    print(f"refresh {t:>4} s: {len(cur):5d} weak bits, contains the shorter period's set: {nested}")
    prev = cur
