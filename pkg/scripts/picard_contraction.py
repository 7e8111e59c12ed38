"""Sup-in-time psi per Picard pass on the hotspot preset, at two resolutions."""

import argparse

from gravflow.core import Grid
from gravflow.picard import picard_iterate
from gravflow.presets import get_preset

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--steps", type=int, default=32)
parser.add_argument("--tol", type=float, default=1e-12)
args = parser.parse_args()

pre = get_preset("hotspot")
for n in (16, 32):
    grid = Grid((n, n))
    rep = picard_iterate(pre.initial_data(grid), pre.params, grid, args.steps * pre.dt, pre.dt, tol=args.tol)
    print(f"n={n}: {rep.iterations} passes, converged={rep.converged}")
    for k, (psi, diss) in enumerate(zip(rep.psi, rep.dissipation), start=2):
        print(f"  pass {k}: sup psi {psi:.3e}  dissipation {diss:.3e}")
    print(f"  ratios {[f'{r:.2e}' for r in rep.ratios]}")
