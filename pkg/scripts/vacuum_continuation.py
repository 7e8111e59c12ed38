"""Distances between runs with rho0 + delta for shrinking delta on the vacuum-blob preset."""

import argparse

from gravflow.picard import vacuum_continuation
from gravflow.presets import get_preset

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--deltas", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4, 1e-5])
args = parser.parse_args()

pre = get_preset("vacuum-blob")
results = vacuum_continuation(pre.initial_data(), pre.params, pre.grid, args.deltas, pre.T, pre.dt)
print("delta        iterations  distance to previous")
for r in results:
    dist = "" if r.distance is None else f"{r.distance:.4e}"
    print(f"{r.delta:<12g} {r.report.iterations:<11d} {dist}")
dists = [r.distance for r in results if r.distance is not None]
print("strictly decreasing:", all(b < a for a, b in zip(dists, dists[1:])))
