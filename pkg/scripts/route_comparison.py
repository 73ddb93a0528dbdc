"""Compare the singular-integral and Fourier assemblies of the log form.

    python3 scripts/route_comparison.py --cells 8 16 32
"""

import argparse

import numpy as np

from logcalderon import assemble_log_form, assemble_log_form_fourier, build_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--half-width", type=float, default=1.0)
    args = ap.parse_args()
    print(f"{'cells':>6} {'h':>8} {'max rel':>10} {'diag K':>12} {'diag F':>12}")
    for n in args.cells:
        g = build_grid([-args.half_width, args.half_width], n)
        A = assemble_log_form(g).matrix
        B = assemble_log_form_fourier(g).matrix
        rel = np.max(np.abs(A - B) / np.abs(A))
        print(f"{n:6d} {g.h:8.4f} {rel:10.2e} {A[0, 0]:12.8f} {B[0, 0]:12.8f}")


if __name__ == "__main__":
    main()
