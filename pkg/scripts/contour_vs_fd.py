"""Compare residue series, contour quadrature and finite differences at probe points."""

import argparse

import numpy as np

from spectral_gauge.datum import bump_poly
from spectral_gauge.errors import SpectralGaugeError
from spectral_gauge.presets import get_preset
from spectral_gauge.solver import contour_solution, fd_probe, series_solution
from spectral_gauge.spectrum import locate_zeros


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t", type=float, default=0.01)
    ap.add_argument("--rmax", type=float, default=120.0)
    args = ap.parse_args()
    xs = np.array([0.1, 0.3, 0.5, 0.7, 0.9])
    f = bump_poly()
    for name, beta in [("ex3", 0.0), ("ex3", -0.5), ("ex4", 1.8), ("ex4", 2.0)]:
        p = get_preset(name, beta)
        ctx = p.context()
        cat = locate_zeros(ctx, args.rmax)
        fd, change = fd_probe(ctx, f, xs, args.t)
        s = series_solution(ctx, f, cat, K=len(cat.zeros), gate=False).evaluate(xs, args.t)
        try:
            c = contour_solution(ctx, f, xs, args.t, cat).value
            c_err = f"{np.max(np.abs(c - fd)):.2e}"
        except SpectralGaugeError as exc:
            c_err = f"({type(exc).__name__})"
        print(f"{p.name:<16} fd doubling {change:.1e}  |series-fd| {np.max(np.abs(s - fd)):.2e}  |contour-fd| {c_err}")


if __name__ == "__main__":
    main()
