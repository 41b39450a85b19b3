"""Oracle and replay: the best static configuration, and byte-identical reruns.

The oracle measures all 64 agent configurations on a short segment and picks
the cheapest one whose median quality meets the threshold. Any saved run can
be replayed from its scenario and seed.

Run: python3 demos/07_oracle_and_replay.py
"""

import tempfile

from approxmem.harness import Scenario, brute_force_oracle, replay, run_scenario, save_run

s = Scenario.from_dict({
    "workload": "canny",
    "workload_params": {"width": 96, "height": 64},
    "frames": 60,
    "inputs": {"scenes": [{"frames": 5, "texture": 10, "seed": 1}]},
    "goal": {"schedule": [[0, 28]]},
    "oracle": {"frames": 5},
})

for thr in (5, 28, 60):
    res = brute_force_oracle(s, threshold=thr)
    print(f"threshold {thr:3d}: {res.config}  power {res.power:.4f}  median RMSE {res.median_q:.2f}")

with tempfile.TemporaryDirectory() as d:
    path = save_run(run_scenario(s, seed=42), s, 42, d)
    ok, msg = replay(path)
    print(f"\nreplay of seed 42: {'identical' if ok else 'MISMATCH'} ({msg})")
