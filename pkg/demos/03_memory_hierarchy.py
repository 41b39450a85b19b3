"""Memory hierarchy: write then read back random words in approximate memory.

Only addresses inside the approximate region see faults. Lowering the L1
voltage raises the flip count; the exact region stays clean.

Run: python3 demos/03_memory_hierarchy.py
"""

from approxmem.harness import microbench_writeread
from approxmem.knob_models import KnobConfig
from approxmem.memory_sim import Hierarchy

for v in (1.0, 0.9, 0.8, 0.7, 0.6):
    h = Hierarchy(knobs=KnobConfig(v, 1.0, 0.1), seed=1)
    flips = microbench_writeread(h, 512)
    print(f"L1 at {v:.1f} V: {flips:5d} bit flips over 512 words ({h.snapshot_stats().l1_accesses} L1 accesses)")

h = Hierarchy(knobs=KnobConfig(0.5, 0.5, 20), seed=1)
h.write(0, 0xDEADBEEF)
print(f"\nexact address 0 at the most approximate knobs reads back {h.read(0):#x}")
