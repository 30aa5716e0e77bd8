"""Acceptance suite.

Each test prints one line ``PASS``/``FAIL`` followed by the measured
quantities and tolerances, then asserts.  Closed forms that come from the
source analysis are marked ``display``; everything else is recomputed here
by an independent route (Gauss-Legendre quadrature, the cofactor
construction, finite differences).  Lines marked ``info`` are reported for
context and do not decide the verdict.

Run ``pytest tests/test_acceptance.py -v -s`` to see the report lines.
"""

import numpy as np
import pytest

from spectral_gauge.charmat import cofactors, pde_char_det, pde_char_matrix, zeta_j
from spectral_gauge.conditioning import (
    classify_conditioning,
    delta_bracket,
    eta2_formula,
    blowup_points,
    ray_diagnostic,
)
from spectral_gauge.datum import Atom, Datum, bump_poly, sinpi
from spectral_gauge.eigensystem import (
    adjef_residual,
    biorthogonality_residual,
    eigenfunction,
    eigenpair,
    eigenvalue_representatives,
    verify_pairing_identities,
    wildness,
    xxstar_residual,
    zeta_zetastar_residuals,
)
from spectral_gauge.presets import ex3_matrix, ex4_matrix
from spectral_gauge.problem import adjoint, project_onto_domain
from spectral_gauge.solver import contour_solution, fd_probe, fd_reference, l2_residual, series_solution

from conftest import imaginary_axis_zeros

SQ3 = np.sqrt(3.0)
OMEGA = np.exp(2j * np.pi / 3)
K_RANGE = range(4, 13)


class Part:
    def __init__(self, label, value, tol, ok=None, info=False):
        self.label, self.value, self.tol, self.info = label, value, tol, info
        self.ok = bool(value <= tol) if ok is None else bool(ok)

    def __str__(self):
        tag = "info" if self.info else ("ok" if self.ok else "MISS")
        val = self.value if isinstance(self.value, str) else "%.3g" % self.value
        tol = self.tol if isinstance(self.tol, str) else "%.3g" % self.tol
        return f"{self.label} = {val} (target {tol}, {tag})"


def report(capsys, tag, title, parts):
    decisive = [p for p in parts if not p.info]
    passed = all(p.ok for p in decisive)
    line = f"{'PASS' if passed else 'FAIL'} {tag} {title}: " + "; ".join(str(p) for p in parts)
    with capsys.disabled():
        print("\n" + line)
    assert passed, line


def _rel(a, b):
    return abs(a - b) / abs(b)


def _gl(n=600):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


# ---------------------------------------------------------------------------
def test_ac1_classical_sanity(capsys, dirichlet, periodic):
    ctx, cat = dirichlet.ctx, dirichlet.catalogue
    pos = sorted([z.sigma for z in cat.zeros if z.sigma.real > 0], key=abs)[:20]
    err_sigma = max(abs(s - k * np.pi) for k, s in enumerate(pos, 1)) if len(pos) == 20 else np.inf
    err_q = max(abs(eigenpair(ctx, s, k).Qnorm - 1.0) for k, s in enumerate(pos, 1))
    f = sinpi()
    S = series_solution(ctx, f, cat, 6, gate=False)
    x = np.linspace(0, 1, 201)
    err_mode = max(float(np.max(np.abs(S.evaluate(x, t) - f(x) * np.exp(-ctx.a * np.pi**2 * t))))
                   for t in (0.0, 0.05, 0.3))

    pctx, pcat = periodic.ctx, periodic.catalogue
    lam = np.array([z.sigma**3 for z in eigenvalue_representatives(pcat, 3)])
    want = [(2 * np.pi * k) ** 3 for k in range(-6, 7) if k != 0]
    err_lam = max(np.min(np.abs(lam - w)) / abs(w) for w in want)
    xs = np.linspace(0, 1, 129)
    err_ef = 0.0
    for k in range(-6, 7):
        if k == 0:
            continue
        i = int(np.argmin(np.abs(lam - (2 * np.pi * k) ** 3)))
        phi = eigenfunction(pctx, eigenvalue_representatives(pcat, 3)[i].sigma, normalize=True)
        g = np.exp(2j * np.pi * k * xs)
        c = np.vdot(g, phi(xs)) / np.vdot(g, g)
        err_ef = max(err_ef, float(np.max(np.abs(phi(xs) - c * g))))
    report(capsys, "AC-1", "classical sanity", [
        Part("dirichlet |sigma_k - k pi|, k<=20", err_sigma, 1e-9),
        Part("dirichlet | ||Q_k|| - 1 |", err_q, 1e-8),
        Part("dirichlet single-mode series error", err_mode, 1e-10),
        Part("periodic eigenvalue rel. error, |k|<=6", err_lam, 1e-6),
        Part("periodic eigenfunction Fourier residual", err_ef, 1e-8),
    ])


# ---------------------------------------------------------------------------
def _uncoupled_sigmas(case):
    s = imaginary_axis_zeros(case.catalogue, +1)
    assert len(s) >= 12
    return s


def test_ac2_uncoupled_eigenvalue_asymptote(capsys, uncoupled):
    s = _uncoupled_sigmas(uncoupled)
    errs = [_rel(-1j * s[k - 1], 2 * np.pi / SQ3 * (k + 1 / 6)) for k in K_RANGE]
    report(capsys, "AC-2", "uncoupled third-order eigenvalue asymptote", [
        Part("max_k rel. error of -i sigma_k vs (2pi/sqrt3)(k+1/6), k=4..12", max(errs), 1e-6),
        Part("rel. error at k=1", _rel(-1j * s[0], 2 * np.pi / SQ3 * (7 / 6)), "-", ok=True, info=True),
    ])


def _display_pair(s):
    """The displayed eigenfunction and adjoint eigenfunction of the uncoupled operator."""
    phi = Datum([Atom(np.exp(1j * OMEGA ** (r + 2) * s) - np.exp(1j * OMEGA ** (r + 1) * s), 0, 1j * OMEGA**r * s)
                 for r in range(3)])
    psi = Datum([Atom(np.exp(-1j * OMEGA ** (r + 2) * s) - np.exp(-1j * OMEGA ** (r + 1) * s), 0,
                      -1j * OMEGA**r * s) for r in range(3)])
    return phi, psi


def _gl_inner(f, g):
    x, w = _gl()
    return complex(np.sum(w * f(x) * np.conj(g(x))))


def test_ac3_uncoupled_norms_pairing_projection(capsys, uncoupled):
    ctx = uncoupled.ctx
    s = _uncoupled_sigmas(uncoupled)
    A, As = ctx.A.array, adjoint(ctx.A).array
    e_pair = e_norm = e_q = e_bc = e_qcof = 0.0
    for k in K_RANGE:
        sig, kap = s[k - 1], k + 1 / 6
        phi, psi = _display_pair(sig)
        scale = max(np.abs(phi.boundary_vector(3)).max(), 1.0)
        e_bc = max(e_bc, np.abs(A @ phi.boundary_vector(3)).max() / scale,
                   np.abs(As @ psi.boundary_vector(3)).max() / max(np.abs(psi.boundary_vector(3)).max(), 1.0))
        pairing = _gl_inner(psi, phi)
        n_phi2, n_psi2 = _gl_inner(phi, phi).real, _gl_inner(psi, psi).real
        pair_d = (-1) ** k * SQ3 / 2 * np.exp(SQ3 * np.pi * kap)
        norm_d = 3 * SQ3 * np.exp(4 * np.pi / SQ3 * kap) / (4 * np.pi * kap)
        q_d = 3 * np.exp(np.pi / SQ3 * kap) / (2 * np.pi * kap)
        e_pair = max(e_pair, _rel(pairing, pair_d))
        e_norm = max(e_norm, _rel(n_phi2, norm_d), _rel(n_psi2, norm_d))
        e_q = max(e_q, _rel(n_phi2 / abs(pairing), q_d))
        e_qcof = max(e_qcof, _rel(eigenpair(ctx, sig, k).Qnorm, np.sqrt(n_phi2 * n_psi2) / abs(pairing)))
    w = wildness(ctx, uncoupled.catalogue, K_max=12)
    slope_err = abs(w.slope - np.pi / SQ3) / (np.pi / SQ3)
    report(capsys, "AC-3", "uncoupled third-order norms, pairing and projection norms", [
        Part("pairing rel. error vs display, k=4..12", e_pair, 1e-3),
        Part("norm^2 rel. error vs display", e_norm, 1e-3),
        Part("||Q_k|| rel. error vs display", e_q, 5e-3),
        Part("wildness verdict", w.verdict, "wild", ok=w.verdict == "wild"),
        Part("log-slope rel. error vs pi/sqrt3", slope_err, 0.05),
        Part("display eigenfunctions boundary residual", e_bc, "-", ok=True, info=True),
        Part("cofactor vs display ||Q_k|| rel. diff", e_qcof, "-", ok=True, info=True),
        Part("fitted slope", w.slope, "-", ok=True, info=True),
    ])


# ---------------------------------------------------------------------------
def test_ac4_conditioning_dichotomy(capsys, uncoupled, coupled):
    f = bump_poly()
    ctx0 = uncoupled.with_direction(-1j)
    cat0 = uncoupled.catalogue
    rep0 = classify_conditioning(ctx0, -1j, f, cat0)
    ray = [e for e in rep0.evidence if abs(e.theta - 7 * np.pi / 6) < 1e-12]
    g = ray[0].growth if ray else np.nan

    ctx5 = coupled.with_direction(-1j)
    rep5 = classify_conditioning(ctx5, -1j, f, coupled.catalogue)

    upper = [ray_diagnostic(ctx0, "zeta+", f, th, (10.0, 80.0), cat0)
             for th in np.pi / 3 + (np.pi / 3) * np.arange(1, 6) / 6]
    bounded = all(r.verdict in ("bounded", "decay") for r in upper)
    report(capsys, "AC-4", "conditioning dichotomy", [
        Part("uncoupled, direction -i", rep0.verdict, "illConditioned", ok=rep0.verdict == "illConditioned"),
        Part("growth exponent along 7pi/6", abs(g - 0.5), 0.05, info=False),
        Part("coupled beta=-0.5, direction -i", rep5.verdict, "wellConditioned",
             ok=rep5.verdict == "wellConditioned"),
        Part("zeta+/Delta in (pi/3, 2pi/3), uncoupled", ",".join(r.verdict for r in upper), "bounded",
             ok=bounded),
        Part("measured exponent", g, "-", ok=True, info=True),
        Part("max upper-sector exponent", max(r.growth for r in upper), "-", ok=True, info=True),
    ])


# ---------------------------------------------------------------------------
def test_ac5_pseudoperiodic_tameness(capsys, pseudo):
    ctx, cat = pseudo.ctx, pseudo.catalogue
    s = imaginary_axis_zeros(cat, -1)
    label = {k: s[k - 2] for k in range(2, len(s) + 2)}  # the first zero carries label 2
    e_eig = max(_rel(1j * label[k], 2 * np.pi / SQ3 * (k - 0.5)) for k in K_RANGE)
    w = wildness(ctx, cat, K_max=12, index_offset=2)
    qs = {p.k: p.Qnorm for p in w.table}
    in_band = all(1.4 <= qs[k] <= 1.6 for k in K_RANGE)
    # The limit 3/2 follows from the displayed norm and pairing formulas.
    kp = np.array(list(K_RANGE)) - 0.5
    q_display = (3 * SQ3 * np.exp(4 * np.pi / SQ3 * kp) / (2 * kp * np.pi)) / (SQ3 * np.exp(4 * np.pi / SQ3 * kp) / (kp * np.pi))
    report(capsys, "AC-5", "pseudoperiodic beta=2 tameness", [
        Part("wildness verdict", w.verdict, "tame", ok=w.verdict == "tame"),
        Part("||Q_k|| range k=4..12", "[%.4g, %.4g]" % (min(qs[k] for k in K_RANGE), max(qs[k] for k in K_RANGE)),
             "[1.4, 1.6]", ok=in_band),
        Part("max rel. error of i sigma_k vs (2pi/sqrt3)(k-1/2), k=4..12", e_eig, 1e-6),
        Part("||Q_k|| implied by display norms", float(q_display[0]), "-", ok=True, info=True),
        Part("fitted slope", w.slope, "-", ok=True, info=True),
        Part("eigenvalue rel. error at k=12", _rel(1j * label[12], 2 * np.pi / SQ3 * 11.5), "-", ok=True, info=True),
    ])


# ---------------------------------------------------------------------------
def _measured_ratio(ctx, q, k):
    R, rho = blowup_points(k)
    r = np.array(rho)
    z2 = complex(zeta_j(ctx, 2, r, q).to_complex())
    d = complex(pde_char_det(ctx, r).to_complex())
    return R, rho, z2, d


def test_ac6_pseudoperiodic_blowup(capsys, pseudo):
    ctx = pseudo.ctx
    q1 = Datum.polynomial([1.0, -2.0])  # q(0) - 2 q(1) = 3
    worst, eta_match, bracket_norm = 0.0, 0.0, []
    for k in range(6, 13):
        R, rho, z2, d = _measured_ratio(ctx, q1, k)
        pred = (-1) ** k * 3 * np.exp(R / 2) / (6 * R**2)
        worst = max(worst, _rel(z2 / d, pred))
        eta_match = max(eta_match, _rel(z2, eta2_formula(q1, rho)))
        bracket_norm.append(d / delta_bracket(2.0, rho))
    q2 = Datum.polynomial([2.0, -1.0])  # q(0) = 2 q(1)
    R, rho, z2, d = _measured_ratio(ctx, q2, 10)
    factor = (np.exp(R / 2) / R**2) / abs(z2 / d)
    report(capsys, "AC-6", "pseudoperiodic blow-up construction", [
        Part("q=1-2x: max rel. error of zeta_2/Delta vs (-1)^k 3 e^{R/2}/(6R^2), k=6..12", worst, 0.05),
        Part("q=2-x: envelope / |zeta_2/Delta| at k=10", 1.0 / factor, 0.1, ok=factor >= 10),
        Part("zeta_2 vs displayed eta_2", eta_match, "-", ok=True, info=True),
        Part("Delta_PDE / displayed bracket", "%.6g" % np.mean(bracket_norm).real, "-", ok=True, info=True),
        Part("q=2-x suppression factor", factor, "-", ok=True, info=True),
    ])


# ---------------------------------------------------------------------------
def _random_datum(rng, degree=5):
    c = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
    d = Datum.polynomial(list(c))
    mu = complex(rng.uniform(-3, 3), rng.uniform(-6, 6))
    return d + Datum.exponential(mu, complex(rng.normal(), rng.normal()))


def _random_matrix(rng):
    if rng.random() < 0.5:
        return ex3_matrix(float(rng.uniform(-0.95, 0.95)))
    return ex4_matrix(float(rng.uniform(-3.0, 3.0)))


def _green_gl(A, u, v):
    """Green's identity residual computed from point values by quadrature."""
    n = A.n
    x, w = _gl()
    Su = (-1j) ** n * u.derivative(n)(x)
    Sv = (-1j) ** n * v.derivative(n)(x)
    lhs = np.sum(w * Su * np.conj(v(x)))
    rhs = np.sum(w * u(x) * np.conj(Sv))
    scale = np.sqrt(np.sum(w * np.abs(Su) ** 2) * np.sum(w * np.abs(v(x)) ** 2))
    scale += np.sqrt(np.sum(w * np.abs(u(x)) ** 2) * np.sum(w * np.abs(Sv) ** 2))
    return float(abs(lhs - rhs) / scale)


def test_ac7_identity_suites(capsys, uncoupled, coupled, pseudo, periodic):
    rng = np.random.default_rng(20260415)
    trials = 100
    cases = [uncoupled, coupled, pseudo, periodic]

    green = 0.0
    for _ in range(trials):
        A = _random_matrix(rng)
        u = project_onto_domain(A, _random_datum(rng))
        v = project_onto_domain(adjoint(A), _random_datum(rng))
        green = max(green, _green_gl(A, u, v))

    def draw_zero(case, kmax=10):
        reps = eigenvalue_representatives(case.catalogue, 3)[:kmax]
        return case, reps[int(rng.integers(len(reps)))].sigma

    bio = 0.0
    for _ in range(trials):
        case = cases[int(rng.integers(len(cases)))]
        reps = eigenvalue_representatives(case.catalogue, 3)[:8]
        a, b = rng.choice(len(reps), size=2, replace=False)
        bio = max(bio, biorthogonality_residual(case.ctx, reps[a].sigma, reps[b].sigma))

    adjef = nq_lit = nq_der = 0.0
    for _ in range(trials):
        case, sig = draw_zero(cases[int(rng.integers(len(cases)))])
        j = int(rng.integers(1, 4))
        adjef = max(adjef, adjef_residual(case.ctx, sig, j))
        f = project_onto_domain(case.ctx.A, _random_datum(rng))
        r = verify_pairing_identities(case.ctx, sig, j, f)
        nq_lit = max(nq_lit, r.normQ_literal)
        nq_der = max(nq_der, r.normQ_derived)

    zz_lit = zz_plus = xx = lap = 0.0
    for _ in range(trials):
        from spectral_gauge.charmat import make_context

        ctx = make_context(_random_matrix(rng), 1j)
        rho = complex(rng.uniform(-25, 25), rng.uniform(-25, 25))
        j = int(rng.integers(1, 4))
        z = zeta_zetastar_residuals(ctx, rho, j, _random_datum(rng))
        zz_lit, zz_plus = max(zz_lit, z.literal), max(zz_plus, z.plus_sign)
        xx = max(xx, xxstar_residual(ctx, rho, j))
        M = pde_char_matrix(ctx, np.array(rho)).to_complex()
        C = cofactors(ctx, np.array(rho)).to_complex()
        d = complex(pde_char_det(ctx, np.array(rho)).to_complex())
        row = int(rng.integers(3))
        terms = M[row] * C[row]
        lap = max(lap, abs(terms.sum() - d) / max(abs(d), np.max(np.abs(terms))))

    report(capsys, "AC-7", "identity suites (100 randomized trials each)", [
        Part("Green's identity", green, 1e-9),
        Part("biorthogonality", bio, 1e-7),
        Part("adjoint eigenfunction conjugation", adjef, 1e-8),
        Part("projection norm through zeta, as displayed", nq_lit, 1e-8),
        Part("zeta / adjoint zeta change of variables, as displayed", zz_lit, 1e-10),
        Part("cofactor conjugation", xx, 1e-10),
        Part("Laplace expansion of Delta_PDE", lap, 1e-11),
        Part("projection norm through zeta, conjugate-pairing form", nq_der, 1e-8, info=True),
        Part("zeta change of variables, opposite sign", zz_plus, 1e-10, info=True),
    ])


# ---------------------------------------------------------------------------
def test_ac8_solver_cross_validation(capsys, coupled):
    ctx, cat = coupled.ctx, coupled.catalogue
    f = bump_poly()
    res = {K: l2_residual(series_solution(ctx, f, cat, K), f) for K in (10, 20, 40, 80)}
    mono = all(res[a] > res[b] for a, b in ((10, 20), (20, 40), (40, 80)))
    S = series_solution(ctx, f, cat, 80)
    xs = np.array([0.1, 0.5, 0.9])
    scale = float(np.max(np.abs(f(np.linspace(0, 1, 101)))))
    agree = 0.0
    for t in (0.01, 0.05, 0.2):
        c = contour_solution(ctx, f, xs, t, cat)
        agree = max(agree, float(np.max(np.abs(c.value - S.evaluate(xs, t)))) / scale)
    fd = fd_reference(ctx, f, grid=(400, 1000), t=0.01, catalogue=cat)
    qs = S.evaluate(fd.x, 0.01)
    fd_err = float(np.linalg.norm(fd.u - qs) / np.linalg.norm(qs))
    _, doubling = fd_probe(ctx, f, xs, 0.01, tol=np.inf)
    report(capsys, "AC-8", "solver cross-validation, coupled beta=-0.5", [
        Part("t=0 L2 residual at K=40", res[40], 1e-3),
        Part("L2 residual decreasing over K=10,20,40,80",
             " > ".join("%.2g" % res[K] for K in (10, 20, 40, 80)), "monotone", ok=mono),
        Part("series vs contour at 9 probe points (relative to sup q0)", agree, 1e-6),
        Part("finite-difference grid doubling change at the probes", doubling, 5e-4),
        Part("series vs finite differences at t=0.01 (relative L2)", fd_err, 1e-3),
        Part("finite-difference eigenvalue check", float(np.max(fd.eigen_check)), 0.05, info=True),
    ])
