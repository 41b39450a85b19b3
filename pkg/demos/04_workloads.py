"""Workloads: output quality of each benchmark as the knobs get more aggressive.

Quality is measured against a golden run on exact hardware: RMSE for canny and
kmeans images, average relative error (%) for Black-Scholes prices.

Run: python3 demos/04_workloads.py
"""

import numpy as np

from approxmem.harness import Scenario, measure_config
from approxmem.knob_models import KnobConfig

scene = {"frames": 8, "texture": 10, "texture_scale": 8, "contrast": 100, "noise": 1, "shapes": 8, "seed": 1}
cases = {
    "canny": {"inputs": {"scenes": [scene]}, "goal": {"schedule": [[0, 28]]}},
    "kmeans": {"workload_params": {"k": 6}, "inputs": {"scenes": [scene]}, "goal": {"schedule": [[0, 5]]}},
    "blackscholes": {"inputs": {"scenes": [{"frames": 4, "brightness": 100, "contrast": 40, "seed": 1}]}, "goal": {"schedule": [[0, 5]]}},
}
configs = [KnobConfig(1.0, 1.0, 0.1), KnobConfig(0.9, 0.9, 1), KnobConfig(0.8, 0.8, 5), KnobConfig(0.7, 0.7, 20)]

for name, raw in cases.items():
    s = Scenario.from_dict({"workload": name, "frames": 8, "oracle": {"frames": 8}, **raw})
    print(name)
    for cfg in configs:
        print(f"  {cfg}  median quality loss {np.median(measure_config(s, cfg, seed=0)):8.3f}")
