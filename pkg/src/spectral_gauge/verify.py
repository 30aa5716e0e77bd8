"""Invariant checks run by ``spectral-gauge verify``."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .charmat import cofactors, make_context, pde_char_det, pde_char_matrix
from .datum import Datum, sinpi
from .eigensystem import (
    adjef_residual,
    adjoint_eigenvalue_check,
    biorthogonality_residual,
    eigenpair,
    eigenvalue_representatives,
    verify_pairing_identities,
    xxstar_residual,
    zeta_zetastar_residuals,
)
from .problem import adjoint, classify, green_residual, project_onto_domain
from .solver import series_solution
from .spectrum import locate_zeros


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self):
        d = asdict(self)
        d["value"] = "%.17g" % self.value
        d["tolerance"] = "%.17g" % self.tolerance
        return d


def check(name, value, tol, detail="") -> Check:
    value = float(value)
    return Check(name, value, float(tol), bool(value <= tol), detail or f"{value:.3g} <= {tol:g}")


def _random_datum(rng, degree=6):
    c = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
    return Datum.polynomial(list(c))


def generic_checks(ctx, catalogue, seed: int = 0, trials: int = 5):
    """Checks that hold for every problem satisfying the structural conditions."""
    rng = np.random.default_rng(seed)
    out = []
    A = ctx.A
    As = adjoint(A)
    worst = 0.0
    for _ in range(trials):
        u = project_onto_domain(A, _random_datum(rng))
        v = project_onto_domain(As, _random_datum(rng))
        worst = max(worst, green_residual(A, u, v))
    out.append(check("green_identity", worst, 1e-9))
    worst = 0.0
    for _ in range(trials):
        rho = complex(rng.uniform(-6, 6), rng.uniform(-6, 6))
        M = pde_char_matrix(ctx, np.array(rho)).to_complex()
        C = cofactors(ctx, np.array(rho)).to_complex()
        d = complex(pde_char_det(ctx, np.array(rho)).to_complex())
        lap = np.sum(M[0, :] * C[0, :])
        worst = max(worst, abs(lap - d) / max(abs(d), np.max(np.abs(M[0] * C[0]))))
    out.append(check("laplace_expansion", worst, 1e-11))
    out.append(check("simple_zeros", 0.0 if catalogue.simple_only else 1.0, 0.0, "all catalogued zeros simple"))
    cls = classify(A)
    if not (cls.nonRobin and cls.symmetric):
        return out
    reps = eigenvalue_representatives(catalogue, ctx.n)[:4]
    f = project_onto_domain(A, _random_datum(rng))
    w_zeta = w_adj = w_xx = w_zs = w_bio = 0.0
    for z in reps:
        for j in range(1, ctx.n + 1):
            r = verify_pairing_identities(ctx, z.sigma, j, f)
            w_zeta = max(w_zeta, r.zeta)
            w_adj = max(w_adj, adjef_residual(ctx, z.sigma, j))
    for _ in range(trials):
        rho = complex(rng.uniform(-6, 6), rng.uniform(-6, 6))
        for j in range(1, ctx.n + 1):
            w_xx = max(w_xx, xxstar_residual(ctx, rho, j))
            w_zs = max(w_zs, zeta_zetastar_residuals(ctx, rho, j, f).plus_sign)
    for a in range(len(reps)):
        for b in range(len(reps)):
            if a != b:
                w_bio = max(w_bio, biorthogonality_residual(ctx, reps[a].sigma, reps[b].sigma))
    adj = [adjoint_eigenvalue_check(ctx, z.sigma) for z in reps]
    w_conj = max(a.conj_power for a in adj)
    w_minus = min(a.minus_power for a in adj)
    out += [
        check("adjoint_eigenvalue_is_conj_sigma_n", w_conj, 1e-8,
              f"residual {w_conj:.3g} for conj(sigma)^n, {w_minus:.3g} for -sigma^n"),
        check("eigenfunction_pairing_zeta", w_zeta, 1e-8),
        check("adjoint_eigenfunction_conjugation", w_adj, 1e-8),
        check("cofactor_conjugation", w_xx, 1e-10),
        check("zeta_change_of_variables", w_zs, 1e-10, "sign-corrected form"),
        check("biorthogonality", w_bio, 1e-7),
    ]
    return out


def dirichlet_checks(ctx, catalogue):
    sig = np.array([z.sigma for z in catalogue.zeros if z.sigma.real > 0])[:20]
    k = np.arange(1, sig.size + 1)
    err = float(np.max(np.abs(sig - k * np.pi))) if sig.size == 20 else np.inf
    out = [check("sigma_k_equals_k_pi", err, 1e-9, f"{sig.size} positive zeros checked")]
    q = max(abs(eigenpair(ctx, s, i).Qnorm - 1.0) for i, s in enumerate(sig[:8], 1))
    out.append(check("projection_norm_one", q, 1e-8))
    f = sinpi()
    S = series_solution(ctx, f, catalogue, 6, gate=False)
    x = np.linspace(0, 1, 101)
    out.append(check("single_mode_series", float(np.max(np.abs(S.evaluate(x, 0.0) - f(x)))), 1e-10))
    t = 0.1
    exact = f(x) * np.exp(-ctx.a * np.pi**2 * t)
    out.append(check("single_mode_evolution", float(np.max(np.abs(S.evaluate(x, t) - exact))), 1e-10))
    return out


def periodic_checks(ctx, catalogue):
    from .eigensystem import eigenfunction

    reps = eigenvalue_representatives(catalogue, ctx.n)
    lam = np.array([z.sigma**ctx.n for z in reps])
    want = np.array([(2 * np.pi * k) ** 3 for k in range(-6, 7) if k != 0])
    err = max(np.min(np.abs(lam - w)) / abs(w) for w in want)
    out = [check("eigenvalues_2pik_cubed", err, 1e-6, "|k| <= 6")]
    x = np.linspace(0, 1, 65)
    worst = 0.0
    for z in reps:
        lam_z = z.sigma**3
        k = int(np.round(np.cbrt(lam_z.real) / (2 * np.pi)))
        if abs(k) > 6:
            continue
        phi = eigenfunction(ctx, z.sigma, normalize=True)
        g = np.exp(2j * np.pi * k * x)
        c = np.vdot(g, phi(x)) / np.vdot(g, g)
        worst = max(worst, float(np.max(np.abs(phi(x) - c * g))))
    out.append(check("eigenfunctions_fourier", worst, 1e-8))
    # constants satisfy periodic conditions: the rho = 0 residue is the mean of the datum
    from .datum import bump_poly
    from .solver import origin_term

    f = bump_poly()
    orig = origin_term(ctx, f, catalogue)
    mean = np.real(np.sum(f.derivative(0)(np.linspace(0, 1, 2001))[:-1]) / 2000)
    dev = float(np.max(np.abs(orig.value(x, 0.2) - mean))) if orig is not None else np.inf
    out.append(check("constant_mode_is_mean", dev, 1e-8))
    return out


def run_checks(target, seed: int = 0):
    """Run generic checks plus the preset-specific ones; ``target`` is a Preset or Problem."""
    from .presets import Preset

    prob = target.problem if isinstance(target, Preset) else target
    ctx = make_context(prob.A, prob.a)
    name = target.name if isinstance(target, Preset) else ""
    R = 70.0 if name in ("dirichlet2", "periodic3") else 40.0
    cat = locate_zeros(ctx, R)
    out = generic_checks(ctx, cat, seed)
    if name == "dirichlet2":
        out += dirichlet_checks(ctx, cat)
    elif name == "periodic3":
        out += periodic_checks(ctx, cat)
    return out
