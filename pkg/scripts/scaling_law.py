"""First Dirichlet eigenvalue under dilation: lambda_1(R Omega) vs lambda_1(Omega) - 2 log R.

    python3 scripts/scaling_law.py --cells 8 16 32
"""

import argparse

from logcalderon.spectral import scaling_law_check


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, nargs="+", default=[8, 16, 32])
    ap.add_argument("--factor", type=int, default=2)
    args = ap.parse_args()
    print(f"{'cells':>6} {'mode':>8} {'lambda1':>10} {'scaled':>10} {'predicted':>10} {'gap':>9}")
    for n in args.cells:
        for mode in ("dilated", "same_h"):
            o = scaling_law_check(cells=n, factor=args.factor, mode=mode)
            print(
                f"{n:6d} {mode:>8} {o['lambda1_omega']:10.5f} {o['lambda1_scaled']:10.5f}"
                f" {o['predicted']:10.5f} {o['abs_error']:9.2e}"
            )


if __name__ == "__main__":
    main()
