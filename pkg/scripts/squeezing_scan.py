"""Field variance of squeezed vacuum at the optimal phase, against squeezing strength.

The normally ordered variance <:E^2:> - <E>^2 of squeezed vacuum at its
optimal quadrature is exp(-2r) - 1; the truncated-state value is printed
next to it for two cutoffs.

    python scripts/squeezing_scan.py --r-max 1.2 --steps 7 --cutoff 64
"""
import argparse

import numpy as np

from ncorr.moments import StateProvider
from ncorr.states import make_squeezed
from ncorr.witness import PhaseShifted, field_variance, optimal_phase


def variance(r, cutoff, phi=0.0):
    prov = StateProvider(make_squeezed(r, phi, cutoff))
    return field_variance(PhaseShifted(prov, {0: optimal_phase(prov)}))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--r-max", type=float, default=1.2)
    parser.add_argument("--steps", type=int, default=7)
    parser.add_argument("--cutoff", type=int, default=64)
    parser.add_argument("--phi", type=float, default=0.0)
    args = parser.parse_args()

    print(f"{'r':>6} {'exact':>14} {'cutoff ' + str(args.cutoff):>14} {'cutoff ' + str(2 * args.cutoff):>14}")
    for r in np.linspace(0.0, args.r_max, args.steps):
        small = variance(r, args.cutoff, args.phi)
        big = variance(r, 2 * args.cutoff, args.phi)
        print(f"{r:6.3f} {np.exp(-2 * r) - 1:14.10f} {small:14.10f} {big:14.10f}")


if __name__ == "__main__":
    main()
