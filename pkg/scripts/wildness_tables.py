"""Tabulate ||Q_k|| and the wildness fit for the third-order families.

Writes one CSV per problem into the output directory and prints the verdicts.
"""

import argparse
from pathlib import Path

from spectral_gauge.eigensystem import wildness
from spectral_gauge.presets import get_preset
from spectral_gauge.spectrum import locate_zeros


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmax", type=int, default=12)
    ap.add_argument("--out", default="results/wildness")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, beta in [("ex3", 0.0), ("ex3", -0.5), ("ex4", 2.0), ("ex4", 1.8)]:
        p = get_preset(name, beta)
        ctx = p.context()
        cat = locate_zeros(ctx, 4.0 * (args.kmax + p.index_offset) + 10.0)
        rep = wildness(ctx, cat, K_max=args.kmax, index_offset=p.index_offset)
        path = out / f"{name}_beta{beta:g}.csv"
        path.write_text(rep.to_csv())
        print(f"{p.name:<16} {rep.verdict:<6} slope {rep.slope:8.4f}  log coeff {rep.log_coeff:8.4f}  -> {path}")


if __name__ == "__main__":
    main()
