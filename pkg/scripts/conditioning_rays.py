"""Growth of zeta/Delta along the exterior rays, for both directions of each preset."""

import argparse
import json

from spectral_gauge.conditioning import classify_conditioning
from spectral_gauge.presets import get_preset
from spectral_gauge.spectrum import locate_zeros


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rmin", type=float, default=10.0)
    ap.add_argument("--rmax", type=float, default=80.0)
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()
    rows = []
    for name, beta in [("dirichlet2", None), ("ex3", 0.0), ("ex3", -0.5), ("ex4", 2.0)]:
        p = get_preset(name, beta)
        for a in (1j, -1j):
            from spectral_gauge.charmat import make_context

            ctx = make_context(p.problem.A, a)
            cat = locate_zeros(ctx, args.rmax + 2.0)
            rep = classify_conditioning(ctx, a, p.problem.q0, cat, R_range=(args.rmin, args.rmax))
            worst = max(e.growth for e in rep.evidence)
            rows.append({"problem": p.name, "direction": "+i" if a.imag > 0 else "-i",
                         "verdict": rep.verdict, "max_growth": worst})
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        for r in rows:
            print(f"{r['problem']:<16} {r['direction']}  {r['verdict']:<16} max growth {r['max_growth']:.3g}")


if __name__ == "__main__":
    main()
