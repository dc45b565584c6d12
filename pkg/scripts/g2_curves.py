"""Stationary g2(tau) of the driven two-level atom for several drive strengths.

Writes one CSV with a tau column and one column per Rabi frequency, and
reports the largest deviation from the on-resonance closed form.

    python scripts/g2_curves.py --rabi 0.25 1 6 --tau-stop 10 --num 501 -o g2_curves.csv
"""
import argparse
import csv
import sys

import numpy as np

from ncorr.atom import AtomParams, g2, g2_resonant_closed_form


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rabi", type=float, nargs="+", default=[0.25, 1.0, 6.0])
    parser.add_argument("--detuning", type=float, default=0.0)
    parser.add_argument("--tau-stop", type=float, default=10.0)
    parser.add_argument("--num", type=int, default=501)
    parser.add_argument("-o", "--output", help="CSV path (default stdout)")
    args = parser.parse_args()

    taus = np.linspace(0.0, args.tau_stop, args.num)
    columns = {}
    for rabi in args.rabi:
        values = g2(AtomParams(rabi, args.detuning), taus).real
        columns[rabi] = values
        line = f"rabi={rabi:g}: g2(0)={values[0]:.3g}, max={values.max():.6f}"
        if args.detuning == 0.0:
            dev = np.max(np.abs(values - g2_resonant_closed_form(rabi, taus)))
            line += f", max |numeric - closed form| = {dev:.2e}"
        print(line, file=sys.stderr)

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["tau"] + [f"g2_rabi_{r:g}" for r in args.rabi])
        for i, tau in enumerate(taus):
            writer.writerow([f"{tau:.17g}"] + [f"{columns[r][i]:.17g}" for r in args.rabi])
    finally:
        if out is not sys.stdout:
            out.close()


if __name__ == "__main__":
    main()
