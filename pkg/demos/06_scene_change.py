"""Runtime control: the agent against a fixed design-time configuration.

Canny runs at RMSE <= 28 over a calm scene and then a finely textured one.
The static DART configuration is cheap but overshoots the threshold on the
second scene; the agent moves to a more exact configuration instead. The
agent is pretrained on the same stream first, so this takes a couple of
minutes.

Run: python3 demos/06_scene_change.py
"""

from collections import Counter
from pathlib import Path

from approxmem.harness import DART_CONFIG, load_scenario, run_scenario, run_static

s = load_scenario(Path(__file__).resolve().parents[1] / "scenarios" / "canny_scene_change.yaml")
agent = run_scenario(s, seed=0)
dart = run_static(s, DART_CONFIG, seed=0)

for name, res in (("agent", agent), ("DART", dart)):
    sm = res.summary
    print(f"{name:5s} energy/frame {sm.energy_per_frame:.4f}  QoS overshoot {sm.qos_overshoot:7.1f}  violations {sm.violations}")

for label, part in (("calm scene", agent.trace[:100]), ("textured scene", agent.trace[100:])):
    (cfg, n), = Counter((r.l1, r.l2, r.dram) for r in part).most_common(1)
    print(f"agent's most used knob indices on the {label}: {cfg} ({n} frames)")
