"""Power model: how each knob trades reliability for normalized memory power.

Run: python3 demos/01_power_model.py
"""

from approxmem.knob_models import KnobConfig, KnobSpace, dram_error_rate, memory_power, sram_ber

print("SRAM bit error rates per access")
for v in (1.0, 0.9, 0.8, 0.7, 0.6, 0.5):
    print(f"  {v:.1f} V  read {sram_ber(v, 'read'):.2e}  write {sram_ber(v, 'write'):.2e}")

print("\nDRAM retention failure probability per bit")
for t in (0.1, 1, 5, 20):
    print(f"  refresh every {t:>4} s  {dram_error_rate(t):.3e}")

print("\nNormalized power of a few configurations (1.0 = exact hardware)")
for cfg in (KnobConfig(1.0, 1.0, 0.1), KnobConfig(0.8, 0.8, 0.5), KnobConfig(1.0, 1.0, 20), KnobConfig(0.7, 0.7, 20)):
    print(f"  {cfg}  power {memory_power(cfg):.4f}")

space = KnobSpace()
powers = sorted(memory_power(c) for c in space.all_configs())
print(f"\nThe agent's {space.n_configs} configurations span power {powers[0]:.4f} .. {powers[-1]:.4f}")
