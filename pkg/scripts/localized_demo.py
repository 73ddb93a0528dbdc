"""Localized potentials: L2 mass on M against mass on the rest of Omega.

    python3 scripts/localized_demo.py --steps 5
"""

import argparse

import numpy as np

from logcalderon import assemble_log_form, build_grid, define_regions, localized_potential
from logcalderon.grid import resolve_cells


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=4)
    ap.add_argument("--target", type=float, nargs=2, default=[-0.5, -0.25])
    args = ap.parse_args()
    g = build_grid([-2.0, 2.0], 64)
    r = define_regions(g, {"box": [-0.5, 0.5]}, {"boxes": [[-0.85, -0.6], [0.6, 0.85]]})
    M = resolve_cells(g, {"box": list(args.target)})
    K = assemble_log_form(g)
    steps = localized_potential(g, K, np.zeros((g.num_cells,) * 2), r.omega, M, r.w1, steps=args.steps)
    print(f"{'alpha':>8} {'ratio':>10} {'|u|_M':>10} {'|u|_rest':>10}")
    for s in steps:
        print(f"{s.alpha:8.0e} {s.ratio:10.4g} {s.norm_M:10.4g} {s.norm_rest:10.4g}")


if __name__ == "__main__":
    main()
