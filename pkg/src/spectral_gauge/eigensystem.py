"""Eigenfunctions, adjoint eigenfunctions, projection norms and wildness.

For a zero ``sigma`` of the PDE characteristic determinant, column ``j`` of
the signed cofactor matrix gives the eigenfunction

    phi_j(x) = sum_r exp(-i omega^r sigma (1 - x)) C[r, j](sigma),

and the same construction in the adjoint context at ``conj(sigma)`` gives
the adjoint eigenfunction ``psi_j``.  Both are exact :class:`Datum` objects,
so all inner products below are closed-form.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .charmat import CharContext, adjoint_context, cofactors, pde_char_det, zeta_j
from .datum import Atom, Datum, inner_product
from .errors import (
    BadSequence,
    ConditionsViolated,
    DegenerateEigenfunction,
    TooFewPairs,
    ZeroPairing,
)
from .problem import classify
from .scaled import ScaledComplex

_C_PROBES = (0.7 + 0.3j, -1.1 + 0.45j)


def _require_conditions(ctx: CharContext):
    c = classify(ctx.A)
    if not (c.nonRobin and c.symmetric):
        raise ConditionsViolated(
            f"eigenfunction formulas need non-Robin symmetric conditions "
            f"(nonRobin={c.nonRobin}, symmetric={c.symmetric})"
        )


def _cofactor_column(ctx: CharContext, rho: complex, j: int) -> ScaledComplex:
    return cofactors(ctx, np.array(rho))[:, j - 1]


def _ef_from_cofactors(ctx: CharContext, rho: complex, col: ScaledComplex, shift: float = 0.0) -> Datum:
    w = ctx.omega_powers
    z = -1j * w * rho
    coef = ScaledComplex(col.m * np.exp(1j * z.imag), col.s + z.real - shift)
    c = coef.to_complex()
    return Datum([Atom(complex(c[r]), 0, complex(1j * w[r] * rho)) for r in range(ctx.n) if c[r] != 0])


def _ef_scale(ctx, rho, col) -> float:
    z = -1j * ctx.omega_powers * rho
    return float(np.max(col.s + z.real))


def _auto_j(ctx: CharContext, rho: complex) -> int:
    C = cofactors(ctx, np.array(rho))
    best, best_val = 1, -np.inf
    for j in range(1, ctx.n + 1):
        col = C[:, j - 1]
        f = _ef_from_cofactors(ctx, rho, col, _ef_scale(ctx, rho, col))
        nrm = f.norm()
        if nrm > best_val * (1 + 1e-9):
            best, best_val = j, nrm
    return best


def eigenfunction(ctx: CharContext, sigma: complex, j="auto", normalize: bool = False) -> Datum:
    """Eigenfunction of S for the zero ``sigma``; ``j`` is 1-based or "auto".

    With ``normalize=False`` the raw cofactor scaling is kept (values may be
    as large as ``exp(|sigma|)``); ``normalize=True`` rescales to unit norm.
    """
    _require_conditions(ctx)
    if j == "auto":
        j = _auto_j(ctx, sigma)
    col = _cofactor_column(ctx, sigma, j)
    shift = _ef_scale(ctx, sigma, col)
    f_unit = _ef_from_cofactors(ctx, sigma, col, shift)
    nrm = f_unit.norm()
    if nrm < 1e-12:
        raise DegenerateEigenfunction(f"column {j} gives a vanishing eigenfunction at sigma={sigma}")
    if normalize:
        return f_unit.scale(1.0 / nrm)
    return f_unit.scale(np.exp(shift))


def adjoint_eigenfunction(ctx: CharContext, sigma: complex, j="auto", normalize: bool = False) -> Datum:
    """Adjoint eigenfunction built from the adjoint context at ``conj(sigma)``."""
    _require_conditions(ctx)
    if j == "auto":
        j = _auto_j(ctx, sigma)
    return eigenfunction(adjoint_context(ctx), np.conj(sigma), j, normalize)


def constant_C(ctx: CharContext, j: int) -> float:
    """The real constant linking cofactors of the operator and its adjoint.

    Determined from ``C_j conj(X[r, j](rho)) = exp(-i omega^rhat conj(rho)) X*[rhat, j](conj rho)``
    at r = 1 (rhat = 1) on two probe points; raises if the two disagree or
    are not real, which would mean the conditions do not hold.
    """
    _require_conditions(ctx)
    ac = adjoint_context(ctx)
    vals = []
    for rho in _C_PROBES:
        X = cofactors(ctx, np.array(rho))[0, j - 1]
        Xs = cofactors(ac, np.array(np.conj(rho)))[0, j - 1]
        num = Xs * ScaledComplex.from_exp(-1j * np.conj(rho))
        den = X.conj()
        vals.append(complex(num.m / den.m * np.exp(num.s - den.s)))
    if abs(vals[0] - vals[1]) > 1e-8 * abs(vals[0]) or abs(vals[0].imag) > 1e-8 * abs(vals[0]):
        raise ConditionsViolated(f"cofactor identity gives inconsistent constants {vals}")
    return float(vals[0].real)


def constant_C_formula(ctx: CharContext, j: int) -> float:
    """``1 / ((-1)^(ceil(n/2) - 1) prod_{l != j} beta_l)`` with the adjoint coupling constants.

    Column l of the PDE characteristic matrix comes from row l of the adjoint
    boundary matrix, so its coupling constant is read from there.
    """
    from .problem import BoundaryMatrix

    _require_conditions(ctx)
    arr = ctx.astar_array
    Astar = BoundaryMatrix(ctx.n, ctx.Astar, tuple(int(np.flatnonzero(r)[0]) for r in arr))
    betas = [r.beta for r in classify(Astar).rows]
    prod = float(np.prod([b for l, b in enumerate(betas) if l != j - 1]))
    sign = (-1) ** (int(np.ceil(ctx.n / 2)) - 1)
    return 1.0 / (sign * prod)


@dataclass
class Eigenpair:
    k: int
    j: int
    sigma: complex
    phi: Datum
    psi: Datum
    Cj: float
    pairing: complex  # <psi, phi>
    norm_phi: float
    norm_psi: float
    Qnorm: float


def eigenpair(ctx: CharContext, sigma: complex, k: int = 0, j="auto") -> Eigenpair:
    """Assemble phi, psi, C_j, <psi, phi>, the norms and ``||Q_k||``.

    ``||Q_k|| = ||phi|| ||psi|| / |<psi, phi>|`` is scale free, so the unit
    normalised eigenfunctions are used for the pairing check.
    """
    _require_conditions(ctx)
    if j == "auto":
        j = _auto_j(ctx, sigma)
    phi = eigenfunction(ctx, sigma, j)
    psi = adjoint_eigenfunction(ctx, sigma, j)
    n_phi, n_psi = phi.norm(), psi.norm()
    pairing = inner_product(psi, phi)
    if abs(pairing) < 1e-13 * n_phi * n_psi:
        raise ZeroPairing(f"<psi, phi> vanishes at sigma={sigma}")
    return Eigenpair(
        k=k,
        j=j,
        sigma=complex(sigma),
        phi=phi,
        psi=psi,
        Cj=constant_C(ctx, j),
        pairing=complex(pairing),
        norm_phi=n_phi,
        norm_psi=n_psi,
        Qnorm=float(n_phi * n_psi / abs(pairing)),
    )


def eigenvalue_representatives(catalogue, n: int, rtol: float = 1e-9):
    """One zero per eigenvalue ``sigma**n`` (zeros related by powers of omega coincide)."""
    reps = []
    for z in catalogue.zeros:
        lam = z.sigma**n
        if all(abs(lam - r.sigma**n) > rtol * max(1.0, abs(lam)) for r in reps):
            reps.append(z)
    return reps


@dataclass
class WildnessReport:
    verdict: str
    slope: float
    log_coeff: float
    r2: float
    table: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "re_sigma", "im_sigma", "norm_phi", "norm_psi", "abs_pairing", "Qnorm",
                    "log10_norm_phi", "log10_norm_psi", "log10_abs_pairing", "log10_Qnorm"])
        for p in self.table:
            w.writerow([p.k] + ["%.17g" % v for v in (
                p.sigma.real, p.sigma.imag, p.norm_phi, p.norm_psi, abs(p.pairing), p.Qnorm,
                np.log10(p.norm_phi), np.log10(p.norm_psi), np.log10(abs(p.pairing)), np.log10(p.Qnorm))])
        return buf.getvalue()


def wildness(ctx: CharContext, catalogue, K_max: int = 12, k_min: int = 3, index_offset: int = 1,
             j="auto") -> WildnessReport:
    """Classify the eigen-system as tame or wild from the growth of ``||Q_k||``.

    Fits ``log ||Q_k|| = g k + c log k + c0`` over ``k >= k_min`` (the
    ``log k`` term absorbs the algebraic prefactor that typically accompanies
    exponential growth).  Wild iff ``g > 0.05`` with ``R^2 > 0.9``.
    """
    reps = eigenvalue_representatives(catalogue, ctx.n)
    table = []
    for i, z in enumerate(reps):
        k = i + index_offset
        if k > K_max:
            break
        table.append(eigenpair(ctx, z.sigma, k, j))
    use = [p for p in table if p.k >= k_min]
    if len(use) < 6:
        raise TooFewPairs(f"only {len(use)} eigenpairs with k >= {k_min}; need 6")
    k = np.array([p.k for p in use], dtype=float)
    y = np.log([p.Qnorm for p in use])
    M = np.column_stack([k, np.log(k), np.ones_like(k)])
    coef, *_ = np.linalg.lstsq(M, y, rcond=None)
    resid = y - M @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 1e-20 else 0.0
    g = float(coef[0])
    verdict = "wild" if (g > 0.05 and r2 > 0.9) else "tame"
    return WildnessReport(verdict, g, float(coef[1]), r2, table)


@dataclass
class PairingResiduals:
    zeta: float  # zeta_j(sigma, f) vs <f, psi> / C_j
    zetastar_literal: float  # zeta_j(conj sigma, f) vs C_j <f, phi>
    zetastar_adjoint: float  # adjoint zeta_j at conj sigma vs C_j <f, phi>
    normQ_literal: float  # ||psi||^2/<phi,psi> vs C_j zeta_j(sigma,psi) / (-conj zeta_j(sigma,phi))
    normQ_derived: float  # ||psi||^2/<psi,phi> vs zeta_j(sigma,psi) / conj zeta_j(sigma,phi)


def _rel(a, b):
    den = max(abs(a), abs(b))
    return 0.0 if den == 0 else abs(a - b) / den


def verify_pairing_identities(ctx: CharContext, sigma: complex, j: int, f: Datum) -> PairingResiduals:
    """Relative residuals of the pairing identities linking zeta_j to eigenfunctions."""
    phi = eigenfunction(ctx, sigma, j)
    psi = adjoint_eigenfunction(ctx, sigma, j)
    C = constant_C(ctx, j)
    s = np.array(sigma)
    sb = np.array(np.conj(sigma))
    zf = complex(zeta_j(ctx, j, s, f).to_complex())
    zfb = complex(zeta_j(ctx, j, sb, f).to_complex())
    zsb = complex(zeta_j(adjoint_context(ctx), j, sb, f).to_complex())
    z_psi = complex(zeta_j(ctx, j, s, psi).to_complex())
    z_phi = complex(zeta_j(ctx, j, s, phi).to_complex())
    npsi2 = psi.norm() ** 2
    lit_l = npsi2 / inner_product(phi, psi)
    lit_r = C * z_psi / (-np.conj(z_phi))
    der_l = npsi2 / inner_product(psi, phi)
    der_r = z_psi / np.conj(z_phi)
    return PairingResiduals(
        zeta=_rel(zf, inner_product(f, psi) / C),
        zetastar_literal=_rel(zfb, C * inner_product(f, phi)),
        zetastar_adjoint=_rel(zsb, C * inner_product(f, phi)),
        normQ_literal=_rel(lit_l, lit_r),
        normQ_derived=_rel(der_l, der_r),
    )


@dataclass
class RatioBound:
    sup: float
    table: list  # (rho, |ratio| cancelled, |ratio| uncancelled)


def spectral_ratio_bound(ctx: CharContext, catalogue, test_points: Sequence[complex], j: int = 1,
                         delta: Optional[float] = None, pairs: Optional[Sequence] = None) -> RatioBound:
    """Sup over test points of ``|zeta_j(rho_k, psi_k) / zeta_j(rho_k, phi_k)|``.

    ``pairs`` supplies the eigenpair used at each test point (default: the
    k-th eigenvalue representative).  The ratio is evaluated both directly
    and with the two Delta_PDE factors kept, and both are tabulated.
    """
    pts = [complex(p) for p in test_points]
    mods = np.abs(pts)
    if np.any(np.diff(mods) <= 0):
        raise BadSequence("test points must have strictly increasing modulus")
    delta = catalogue.epsilon if delta is None else delta
    zmods = np.abs(catalogue.sigmas)
    for p in pts:
        if zmods.size and np.min(np.abs(abs(p) - zmods)) <= delta:
            raise BadSequence(f"|rho| = {abs(p):.6g} lies within {delta:.3g} of a zero modulus")
    if pairs is None:
        reps = eigenvalue_representatives(catalogue, ctx.n)
        if len(reps) < len(pts):
            raise BadSequence("not enough catalogued eigenvalues for the test points")
        pairs = [(eigenfunction(ctx, z.sigma, j), adjoint_eigenfunction(ctx, z.sigma, j)) for z in reps[: len(pts)]]
    table = []
    for rho, (phi, psi) in zip(pts, pairs):
        r = np.array(rho)
        a = zeta_j(ctx, j, r, psi)
        b = zeta_j(ctx, j, r, phi)
        d = pde_char_det(ctx, r)
        direct = float(np.exp(a.log_abs() - b.log_abs()))
        via = float(np.exp((a.log_abs() - d.log_abs()) + (d.log_abs() - b.log_abs())))
        table.append((rho, direct, via))
    return RatioBound(max(t[1] for t in table), table)


@dataclass
class ZetaStarResiduals:
    literal: float  # zeta*_j(conj rho, f) vs -C_j conj zeta_j(rho, conj f(1 - .))
    plus_sign: float  # same with +C_j


def zeta_zetastar_residuals(ctx: CharContext, rho: complex, j: int, f: Datum) -> ZetaStarResiduals:
    """Relative residuals of the change-of-variables identity between zeta_j and zeta*_j."""
    C = constant_C(ctx, j)
    lhs = complex(zeta_j(adjoint_context(ctx), j, np.array(np.conj(rho)), f).to_complex())
    g = f.conjugate_values().reflect()
    z = complex(zeta_j(ctx, j, np.array(rho), g).to_complex())
    return ZetaStarResiduals(_rel(lhs, -C * np.conj(z)), _rel(lhs, C * np.conj(z)))


def adjef_residual(ctx: CharContext, sigma: complex, j: int, samples: int = 33) -> float:
    """Max relative deviation of ``conj(psi(1 - x))`` from ``C_j phi(x)`` on a grid."""
    phi = eigenfunction(ctx, sigma, j)
    psi = adjoint_eigenfunction(ctx, sigma, j)
    C = constant_C(ctx, j)
    x = np.linspace(0.0, 1.0, samples)
    lhs = np.conj(psi(1.0 - x))
    rhs = C * phi(x)
    return float(np.max(np.abs(lhs - rhs)) / max(np.max(np.abs(rhs)), 1e-300))


@dataclass
class AdjointEigenvalueCheck:
    """Residuals of ``(-i d/dx)^n psi = lam psi`` for the two candidate ``lam``."""

    conj_power: float  # lam = conj(sigma)^n
    minus_power: float  # lam = -sigma^n

    @property
    def convention(self) -> str:
        return "conj(sigma)^n" if self.conj_power <= self.minus_power else "-sigma^n"


def adjoint_eigenvalue_check(ctx: CharContext, sigma: complex, samples: int = 33) -> AdjointEigenvalueCheck:
    """Which eigenvalue the adjoint eigenfunction actually carries.

    The adjoint differential expression of ``(-i d/dx)^n`` is itself, so the
    residual is measured by applying it to ``psi`` exactly in the atom
    representation and comparing with ``lam psi`` on a grid.
    """
    n = ctx.n
    psi = adjoint_eigenfunction(ctx, sigma)
    x = np.linspace(0.0, 1.0, samples)
    Lpsi = (-1j) ** n * psi.derivative(n)(x)
    base = psi(x)
    scale = max(float(np.max(np.abs(Lpsi))), 1e-300)

    def res(lam):
        return float(np.max(np.abs(Lpsi - lam * base)) / scale)

    return AdjointEigenvalueCheck(res(np.conj(sigma) ** n), res(-(sigma**n)))


def biorthogonality_residual(ctx: CharContext, sigma_k: complex, sigma_m: complex, j="auto") -> float:
    """``|<phi_k, psi_m>| / (||phi_k|| ||psi_m||)`` for zeros with distinct eigenvalues."""
    phi = eigenfunction(ctx, sigma_k, j, normalize=True)
    psi = adjoint_eigenfunction(ctx, sigma_m, j, normalize=True)
    return float(abs(inner_product(phi, psi)))


def xxstar_residual(ctx: CharContext, rho: complex, j: int) -> float:
    """Max over r of the relative residual of ``C_j conj X[r,j](rho) = e^{-i omega^r conj rho} X*[r,j](conj rho)``.

    The adjoint side is evaluated at the row matching r under complex
    conjugation of the roots of unity (r -> -r mod n).
    """
    C = constant_C(ctx, j)
    ac = adjoint_context(ctx)
    X = cofactors(ctx, np.array(rho))[:, j - 1].to_complex()
    Xs = cofactors(ac, np.array(np.conj(rho)))[:, j - 1].to_complex()
    w = ctx.omega_powers
    worst = 0.0
    for r in range(ctx.n):
        rh = (-r) % ctx.n
        lhs = C * np.conj(X[r])
        rhs = np.exp(-1j * w[rh] * np.conj(rho)) * Xs[rh]
        worst = max(worst, _rel(lhs, rhs))
    return worst
