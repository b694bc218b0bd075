#!/usr/bin/env python3
"""Fit the band-measure scaling exponents (alpha, beta) for a gallery of
sources f, illustrating how flat stretches of the primitive F push beta to 0
and degrade the attainable stability exponent.

Usage:
    python scripts/exponent_gallery.py --n 8192
"""

import argparse

import numpy as np

from coeffid.forward import primitive
from coeffid.grids import GridFunction1D, Interval
from coeffid.stability import fit_exponents, holder_exponent

UNIT = Interval(0.0, 1.0)

GALLERY = {
    "uniform f=1": lambda x: np.ones_like(x),
    "sign-changing f=1-2x": lambda x: 1.0 - 2.0 * x,
    "two blocks +1/-1": lambda x: np.where(x < 0.5, 1.0, -1.0),
    "vanishing middle third": lambda x: np.where(x < 1 / 3, 1.0, 0.0) - np.where(x > 2 / 3, 1.0, 0.0),
    "cosine f=cos(2 pi x)": lambda x: np.cos(2 * np.pi * x),
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8192)
    ap.add_argument("--p", type=float, default=2.0)
    args = ap.parse_args()

    print(f"{'source':>26} {'alpha':>7} {'beta':>7} {'flat':>5} {'exponent(p=%g)' % args.p:>15}")
    for name, fn in GALLERY.items():
        f = GridFunction1D.from_callable(fn, UNIT, args.n)
        F = primitive(f)
        span = float(F.values.max() - F.values.min())
        fit = fit_exponents(F, np.geomspace(span / 4, span / 4096, 11), 48)
        if fit.beta_degenerate:
            expo = "0 (no rate)"
        else:
            expo = f"{holder_exponent(args.p, fit.alpha, fit.beta):.4f}"
        print(f"{name:>26} {fit.alpha:7.3f} {fit.beta:7.3f} {str(fit.beta_degenerate):>5} {expo:>15}")


if __name__ == "__main__":
    main()
