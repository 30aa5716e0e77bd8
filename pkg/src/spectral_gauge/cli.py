"""Command-line front end.

Exit codes: 0 success, 2 completed with a verdict that flags a problem
(ill-conditioning, wildness contrary to expectation, failed checks),
1 on error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import SpectralGaugeError

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2


def fmt(x) -> str:
    return "%.17g" % x


def _threads() -> int:
    raw = os.environ.get("SPECTRAL_GAUGE_THREADS", "1")
    try:
        val = int(raw)
    except ValueError as exc:
        raise ValueError(f"SPECTRAL_GAUGE_THREADS must be a positive integer, got {raw!r}") from exc
    if val < 1:
        raise ValueError("SPECTRAL_GAUGE_THREADS must be at least 1")
    return val


def _load(args):
    """(name, Problem, Preset or None) from --preset or a problem file."""
    from .presets import get_preset
    from .problem import load_problem

    if args.preset:
        p = get_preset(args.preset, args.beta, args.override_range)
        return p.name, p.problem, p
    if args.problem:
        return str(args.problem), load_problem(args.problem), None
    raise ValueError("give --preset NAME or a problem file")


def _context(problem, direction=None):
    from .charmat import make_context
    from .problem import parse_direction

    a = problem.a if direction is None else parse_direction(direction)
    return make_context(problem.A, a)


def _emit(args, name: str, text: str):
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _matrix_lists(arr):
    return [[fmt(v) for v in row] for row in np.asarray(arr)]


# subcommands -----------------------------------------------------------------
def cmd_validate(args) -> int:
    from .problem import adjoint, classify, compatibility_residual, format_direction

    name, prob, _ = _load(args)
    c = classify(prob.A)
    rep = {
        "problem": name,
        "n": prob.n,
        "A": _matrix_lists(prob.A.array),
        "adjoint": _matrix_lists(adjoint(prob.A).array),
        "direction": format_direction(prob.a),
        "nonRobin": c.nonRobin,
        "symmetric": c.symmetric,
        "rows": [{"order": r.order, "kind": r.kind, "coupling": fmt(r.beta)} for r in c.rows],
        "compatibility_residual": fmt(compatibility_residual(prob.A, prob.q0)),
    }
    if args.json:
        _emit(args, "validate.json", json.dumps(rep, indent=2, sort_keys=True))
    else:
        lines = [f"problem: {name}", f"n = {prob.n}, direction {rep['direction']}",
                 f"non-Robin: {c.nonRobin}, symmetric: {c.symmetric}"]
        for i, r in enumerate(rep["rows"]):
            lines.append(f"  row {i}: order {r['order']}, {r['kind']}, coupling {r['coupling']}")
        lines.append(f"compatibility residual of q0: {rep['compatibility_residual']}")
        _emit(args, "validate.txt", "\n".join(lines))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    from .spectrum import locate_zeros

    _, prob, preset = _load(args)
    cat = locate_zeros(_context(prob), args.rmax)
    text = cat.to_csv()
    if preset is not None and args.preset == "ex3":
        text = _with_asymptotic_index(text, cat, preset.beta)
    _emit(args, "spectrum.csv", text)
    return EXIT_OK


def _with_asymptotic_index(text, cat, beta):
    """Append the family's asymptotic labels next to the modulus ordering."""
    from .presets import ex3_asymptotic_index

    lines = text.rstrip("\n").split("\n")
    out = [lines[0] + ",k_asymptotic"]
    for line, z in zip(lines[1:], cat.zeros):
        k = ex3_asymptotic_index(beta, z.sigma)
        out.append(line + "," + ("" if k is None else str(k)))
    return "\n".join(out) + "\n"


def cmd_eigen(args) -> int:
    from .eigensystem import eigenvalue_representatives, wildness
    from .spectrum import locate_zeros

    _, prob, preset = _load(args)
    ctx = _context(prob)
    offset = preset.index_offset if preset else 1
    R = args.rmax or _eigen_radius(args.kmax + offset)
    cat = locate_zeros(ctx, R)
    if len(eigenvalue_representatives(cat, ctx.n)) + offset - 1 < args.kmax:
        cat = locate_zeros(ctx, 1.6 * R)
    rep = wildness(ctx, cat, K_max=args.kmax, index_offset=offset)
    _emit(args, "eigen.csv", rep.to_csv())
    summary = {"verdict": rep.verdict, "slope": fmt(rep.slope), "log_coeff": fmt(rep.log_coeff), "r2": fmt(rep.r2)}
    text = json.dumps(summary, indent=2, sort_keys=True) if args.json else (
        f"wildness: {rep.verdict} (slope {summary['slope']}, log coefficient {summary['log_coeff']}, R^2 {summary['r2']})")
    if args.out:
        _emit(args, "wildness.json", json.dumps(summary, indent=2, sort_keys=True))
    else:
        sys.stderr.write(text + "\n")
    return EXIT_OK


def _eigen_radius(k):
    return 4.0 * k + 10.0


def cmd_condition(args) -> int:
    from .conditioning import classify_conditioning
    from .spectrum import locate_zeros

    _, prob, _ = _load(args)
    ctx = _context(prob, args.direction)
    cat = locate_zeros(ctx, args.rmax + 2.0)
    rep = classify_conditioning(ctx, ctx.a, prob.q0, cat, R_range=(args.rmin, args.rmax))
    if args.json or args.out:
        _emit(args, "condition.json", rep.to_json())
    else:
        lines = [f"verdict: {rep.verdict}"]
        for e in rep.evidence:
            lines.append(f"  theta {fmt(e.theta)} {e.which}: growth {fmt(e.growth)} -> {e.verdict}")
        _emit(args, "condition.txt", "\n".join(lines))
    return EXIT_VERDICT if rep.verdict == "illConditioned" else EXIT_OK


def cmd_solve(args) -> int:
    from .solver import contour_solution, l2_residual, series_solution
    from .spectrum import locate_zeros

    _, prob, _ = _load(args)
    ctx = _context(prob)
    cat = locate_zeros(ctx, args.rmax)
    K = min(args.K, len(cat.zeros))
    x = np.linspace(0.0, 1.0, args.grid + 1)
    if args.method == "series":
        S = series_solution(ctx, prob.q0, cat, K, gate=not args.no_gate)
        q = S.evaluate(x, args.t)
        report = {"method": "series", "K": K, "l2_residual_t0": fmt(l2_residual(S, prob.q0)), "risk": S.risk}
    else:
        res = contour_solution(ctx, prob.q0, x, args.t, cat)
        q = res.value
        report = {"method": "contour", "R_cut": fmt(res.R_cut), "refinement_change": fmt(res.refinement_change)}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "t", "re_q", "im_q"])
    for xi, qi in zip(x, q):
        w.writerow([fmt(xi), fmt(args.t), fmt(qi.real), fmt(qi.imag)])
    _emit(args, "solution.csv", buf.getvalue())
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        _emit(args, "convergence.json", text)
    else:
        sys.stderr.write(text + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    name, prob, preset = _load(args)
    checks = run_checks(preset if preset else prob)
    ok = all(c.passed for c in checks)
    if args.json or args.out:
        _emit(args, "verify.json", json.dumps([c.to_dict() for c in checks], indent=2, sort_keys=True))
    else:
        lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}" for c in checks]
        lines.append(f"{name}: {sum(c.passed for c in checks)}/{len(checks)} checks passed")
        _emit(args, "verify.txt", "\n".join(lines))
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_preset(args) -> int:
    from .presets import PRESETS, get_preset

    if args.action != "list":
        raise ValueError("only 'preset list' is supported")
    out = []
    for key in sorted(PRESETS):
        p = get_preset(key)
        out.append({"name": key, "description": p.description,
                    "expected": {k: {"value": str(v.value), "provenance": v.provenance} for k, v in p.expected.items()}})
    if args.json:
        _emit(args, "presets.json", json.dumps(out, indent=2, sort_keys=True))
    else:
        _emit(args, "presets.txt", "\n".join(f"{p['name']:<11} {p['description']}" for p in out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectral-gauge", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problem", nargs="?", help="problem definition (JSON)")
    common.add_argument("--preset", help="named problem: dirichlet2, periodic3, ex3, ex4")
    common.add_argument("--beta", type=float, help="family parameter for ex3 / ex4")
    common.add_argument("--override-range", action="store_true", help="allow beta outside the preset's interval")
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--out", help="directory for artifacts (default: stdout)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[common], help="classify the boundary conditions").set_defaults(func=cmd_validate)

    p = sub.add_parser("spectrum", parents=[common], help="catalogue zeros of the PDE determinant")
    p.add_argument("--rmax", type=float, default=40.0)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("eigen", parents=[common], help="eigenpairs and wildness verdict")
    p.add_argument("--kmax", type=int, default=12)
    p.add_argument("--rmax", type=float, default=None)
    p.set_defaults(func=cmd_eigen)

    p = sub.add_parser("condition", parents=[common], help="well-conditioning verdict")
    p.add_argument("--direction", required=True, help="+i or -i")
    p.add_argument("--rmin", type=float, default=10.0)
    p.add_argument("--rmax", type=float, default=80.0)
    p.set_defaults(func=cmd_condition)

    p = sub.add_parser("solve", parents=[common], help="evaluate the solution on a grid")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--grid", type=int, default=100, help="number of x intervals")
    p.add_argument("--K", type=int, default=80, help="series truncation")
    p.add_argument("--rmax", type=float, default=90.0)
    p.add_argument("--method", choices=["series", "contour"], default="series")
    p.add_argument("--no-gate", action="store_true", help="skip the conditioning gate (result flagged as a risk)")
    p.set_defaults(func=cmd_solve)

    sub.add_parser("verify", parents=[common], help="run the invariant suite").set_defaults(func=cmd_verify)

    p = sub.add_parser("preset", parents=[common], help="list presets")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_preset)
    return parser


def _join_direction(argv):
    """Rewrite ``--direction -i`` as ``--direction=-i`` so argparse does not read ``-i`` as a flag."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--direction" and i + 1 < len(argv):
            out.append("--direction=" + argv[i + 1])
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(_join_direction(list(sys.argv[1:] if argv is None else argv)))
    try:
        _threads()
        return args.func(args)
    except (SpectralGaugeError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        sys.stderr.write(f"error: {msg}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
