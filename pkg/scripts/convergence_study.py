"""Print error tables and fitted orders for every solver."""

import argparse

from gravflow.studies import format_rows, full_study, overall_order

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--levels", type=int, default=3)
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

rows = full_study(args.levels, args.seed)
print(format_rows(rows), end="")
print()
for name in dict.fromkeys(r.study for r in rows):
    sub = [r for r in rows if r.study == name]
    if name == "poisson":
        print(f"{name:22s} finest relative error {sub[-1].error:.2e}")
    else:
        order = overall_order(sub, by="dt" if name.endswith("-time") else "n")
        print(f"{name:22s} fitted order {order:.3f}")
