"""Drive the hotspot preset into runaway ignition and print what the watchdog sees."""

import argparse
import math

import numpy as np

from gravflow.monitors import Watchdog
from gravflow.picard import step_stream
from gravflow.presets import get_preset

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--q-heat", type=float, default=1e3)
parser.add_argument("--k-rate", type=float, default=1e3)
parser.add_argument("--dt", type=float, default=0.002)
parser.add_argument("--steps", type=int, default=20)
args = parser.parse_args()

pre = get_preset("hotspot")
params = pre.params.with_(q_heat=args.q_heat, K_rate=args.k_rate)
dog = Watchdog(pre.grid, params, args.dt)
print("step  time     max theta    bkm          events")
for s in step_stream(pre.initial_data(pre.grid, params), params, pre.grid, args.steps * args.dt, args.dt,
                     tol=math.inf):
    events = dog.feed(s)
    step = len(dog.times) - 1
    bkm = dog.series.bkm[-1] if s.is_finite() else math.nan
    print(f"{step:<5d} {s.t:<8.4f} {float(np.max(s.theta)):<12.4e} {bkm:<12.4e} "
          f"{' '.join(e.label() for e in events)}")
