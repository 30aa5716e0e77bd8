"""Solutions of the initial-boundary value problem.

Three independent evaluations are provided:

* a residue (eigenfunction) series ``q = sum_k xi_k(x) exp(-a sigma_k^n t)``;
* contour quadrature of the integral representation, deformed into the
  sectors where ``exp(-a rho^n t)`` decays, with the residues of the zeros
  left outside the deformed contour added back;
* a finite-difference method-of-lines oracle (TR-BDF2 in time).

The PDE is ``q_t + a (-i d/dx)^n q = 0`` on ``0 < x < 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import sparse
from scipy.linalg import eig
from scipy.sparse.linalg import splu

from .errors import BoundaryZero, IllConditioned, NonSimpleZero, QuadratureNotConverged, RadiusTooLarge, UnstableDiscretization
from .scaled import ScaledComplex

# Residue weights fixed by the t = 0 reconstruction of single-mode data on
# the Dirichlet problem and of polynomial data on a coupled third-order
# problem (see tests/test_solver.py).
WEIGHT_UPPER = 1j
WEIGHT_LOWER = -1j


def derivative_at(F, z, r, M: int = 64, eps: float = None) -> ScaledComplex:
    """``F'(z)`` from the M-point trapezoid rule for Cauchy's integral on ``|w - z| = r``.

    ``F`` maps an array of points to a :class:`ScaledComplex` array (plain
    complex results are accepted too).
    """
    if eps is not None and r > eps / 2:
        raise RadiusTooLarge(f"radius {r} exceeds half the separation {eps / 2}")
    u = np.exp(2j * np.pi * np.arange(M) / M)
    val = F(z + r * u)
    if not isinstance(val, ScaledComplex):
        val = ScaledComplex(val)
    s = float(np.max(val.s))
    m = np.sum(val.m * np.exp(val.s - s) / u) / (M * r)
    return ScaledComplex(m, s)


# residue series ------------------------------------------------------------
@dataclass(frozen=True)
class ResidueTerm:
    """One term ``coeff * exp(i sigma (x - anchor)) * exp(-a sigma^n t)``.

    ``anchor`` is 0 for zeros in the closed upper half-plane and 1 for
    zeros in the lower half-plane; both forms are bounded on ``[0, 1]``.
    """

    sigma: complex
    coeff: complex
    anchor: int
    exponent: complex  # -a sigma^n

    @property
    def xi(self):
        """The spatial factor as a :class:`Datum`."""
        from .datum import Atom, Datum

        c = self.coeff * np.exp(-1j * self.sigma * self.anchor)
        return Datum((Atom(complex(c), 0, complex(1j * self.sigma)),))

    def spatial(self, x):
        return self.coeff * np.exp(1j * self.sigma * (np.asarray(x, dtype=float) - self.anchor))


def residue_term(ctx, sigma: complex, f, eps: float, halfplane: Optional[str] = None, order: int = 1) -> ResidueTerm:
    """Residue contribution of the simple zero ``sigma`` of Delta_PDE."""
    from .charmat import pde_char_det, zeta_both

    if order != 1:
        raise NonSimpleZero(f"zero {sigma!r} has multiplicity {order}")
    hp = halfplane or ("K+" if sigma.imag >= 0 else "K-")
    r = min(0.05, 0.45 * eps) if np.isfinite(eps) else 0.05
    r = min(r, 0.45 * abs(sigma))
    d = derivative_at(lambda z: pde_char_det(ctx, z), sigma, r)
    zp, zm = zeta_both(ctx, np.array(sigma), f)
    num = zp if hp == "K+" else zm
    w = WEIGHT_UPPER if hp == "K+" else WEIGHT_LOWER
    c = w * num.m / d.m * np.exp(num.s - d.s)
    return ResidueTerm(complex(sigma), complex(c), 0 if hp == "K+" else 1, complex(-ctx.a * sigma**ctx.n))


@dataclass
class OriginTerm:
    """Contribution of a zero of Delta_PDE at the origin.

    The catalogue leaves ``rho = 0`` out, but when it is a zero (for
    instance when constants satisfy the boundary conditions) its residue
    still belongs in the solution.  The pole may be of high order, so the
    residue is taken numerically: the trapezoid rule for the integral of
    ``exp(i rho x - a rho^n t) zeta^+/Delta / (2 pi)`` around a circle that
    encloses no other zero.
    """

    ctx: object
    f: object
    radius: float
    nodes: int = 128

    def value(self, x, t=0.0):
        from .charmat import pde_char_det, zeta_both
        from .scaled import ratio

        x = np.asarray(x, dtype=float)
        u = np.exp(2j * np.pi * np.arange(self.nodes) / self.nodes)
        rho = self.radius * u
        zp, _ = zeta_both(self.ctx, rho, self.f)
        g = ratio(zp, pde_char_det(self.ctx, rho)) * rho
        phase = np.exp(1j * np.multiply.outer(x, rho) - self.ctx.a * rho**self.ctx.n * t)
        return 1j * (phase @ g) / self.nodes


def origin_term(ctx, f, catalogue) -> Optional[OriginTerm]:
    """The origin contribution, or None when Delta_PDE(0) != 0."""
    if not getattr(catalogue, "origin_order", 0):
        return None
    sig = np.abs(catalogue.sigmas)
    r = 0.5 * min(1.0, float(np.min(sig))) if sig.size else 0.5
    return OriginTerm(ctx, f, r)


@dataclass
class SeriesSolution:
    terms: List[ResidueTerm]
    K: int
    a: complex
    risk: bool = False  # True when the conditioning gate was overridden
    origin: Optional[OriginTerm] = None

    def evaluate(self, x, t=0.0):
        """Partial sum at points ``x`` (scalar or array) and time ``t``."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex) if self.origin is None else self.origin.value(x, t)
        for term in self.terms:
            out = out + term.spatial(x) * np.exp(term.exponent * t)
        return out

    def time_factor_bound(self, T: float) -> float:
        """``max_k sup_{t in [0,T]} |exp(-a sigma_k^n t)|``."""
        return float(max([1.0] + [np.exp(max(0.0, term.exponent.real) * T) for term in self.terms]))


def series_solution(ctx, f, catalogue, K: int, gate: bool = True) -> SeriesSolution:
    """First ``K`` residue terms, in catalogue order, plus any origin term.

    With ``gate`` on, the final-time problem (direction ``-a``) must be
    well-conditioned; otherwise :class:`IllConditioned` is raised.  With
    ``gate`` off the result is labelled as a non-convergent risk.
    """
    if K < 1:
        raise ValueError("K must be positive")
    if K > len(catalogue.zeros):
        raise ValueError(f"catalogue holds {len(catalogue.zeros)} zeros, fewer than K = {K}")
    if gate:
        from .charmat import CharContext
        from .conditioning import classify_conditioning

        rev = CharContext(ctx.A, ctx.Astar, -ctx.a)
        rep = classify_conditioning(rev, -ctx.a, f, catalogue, R_range=_gate_range(catalogue))
        if rep.verdict != "wellConditioned":
            raise IllConditioned("the final-time problem is ill-conditioned; the full series need not converge")
    terms = [residue_term(ctx, z.sigma, f, catalogue.epsilon, z.halfplane, z.order) for z in catalogue.zeros[:K]]
    return SeriesSolution(terms, K, ctx.a, risk=not gate, origin=origin_term(ctx, f, catalogue))


def _gate_range(catalogue):
    hi = max(20.0, min(80.0, catalogue.R_max - 1.0))
    return (0.25 * hi, hi)


def partial_series(ctx, f, catalogue, halfplane: str = "K+", K: Optional[int] = None) -> SeriesSolution:
    """Residue terms from one half-plane only (no conditioning gate)."""
    zs = [z for z in catalogue.zeros if z.halfplane == halfplane][:K]
    terms = [residue_term(ctx, z.sigma, f, catalogue.epsilon, z.halfplane, z.order) for z in zs]
    return SeriesSolution(terms, len(terms), ctx.a, risk=True)


def l2_residual(series: SeriesSolution, f, t: float = 0.0, nodes: int = 400) -> float:
    """``||q(., t) - f||_2 / ||f||_2`` by Gauss-Legendre quadrature."""
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    x = 0.5 * (xg + 1)
    w = 0.5 * wg
    fv = f(x)
    diff = series.evaluate(x, t) - fv
    return float(np.sqrt(np.sum(w * np.abs(diff) ** 2) / np.sum(w * np.abs(fv) ** 2)))


# contour quadrature --------------------------------------------------------
@dataclass
class ContourSpec:
    """Deformed contour: the boundaries of the wedges ``W``.

    ``wedges`` lists ``(lo, hi, halfplane)`` angle intervals; each is a
    decay sector of ``exp(-a rho^n t)`` shrunk by ``delta_w`` on both sides.
    The vertex is replaced by an arc of radius ``r0``.  Where a ray passes
    closer than ``eps`` to a zero in ``avoid`` it detours along the short arc
    of the circle ``|rho - sigma| = eps`` on the far side of the ray, so the
    zero stays on the side of the contour it was on.
    """

    wedges: list
    delta_w: float
    r0: float
    R_cut: Optional[float] = None
    order: int = 24
    panel: float = 0.5
    tol: float = 1e-6
    tail_tol: float = 1e-7
    excluded: list = field(default_factory=list)  # zeros whose residues are added
    eps: float = 0.0
    avoid: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))


def _ray_distance(theta, sigmas):
    """Distance from each sigma to the ray from the origin at angle ``theta``."""
    u = np.exp(1j * theta)
    proj = np.real(sigmas * np.conj(u))
    perp = np.abs(np.imag(sigmas * np.conj(u)))
    return np.where(proj > 0, perp, np.abs(sigmas))


def make_contour(ctx, catalogue, delta_w: Optional[float] = None) -> ContourSpec:
    """Choose ``delta_w`` for the contour through the catalogued zeros.

    The preferred angle is the one nearest ``pi/(4n)`` whose rays stay at
    least ``epsilon`` from every zero.  When no angle manages that (zeros
    strung along lines that meet the rays at shallow angles) the angle with
    the largest clearance is taken and the rays are indented around the
    zeros they pass too close to.
    """
    from .conditioning import decay_sectors

    secs = decay_sectors(ctx.n, ctx.a).sectors
    sig = catalogue.sigmas
    if sig.size:
        # a zero on a sector boundary would need a half-residue; refuse instead
        p = ctx.a * sig**ctx.n
        edge = np.abs(p.real) <= 1e-9 * np.abs(p)
        if np.any(edge):
            raise BoundaryZero(f"{int(edge.sum())} zeros lie on sector boundaries (first {sig[edge][0]:.6g}); "
                               "use the residue series")
    eps = catalogue.epsilon if np.isfinite(catalogue.epsilon) else 1.0
    target = np.pi / (4 * ctx.n)
    if delta_w is not None:
        cands = [delta_w]
    else:
        grid = np.linspace(0.05, 0.95, 91) * np.pi / (2 * ctx.n)
        cands = list(grid[np.argsort(np.abs(grid - target), kind="stable")])

    def clearance(d):
        if not sig.size:
            return np.inf
        return min(np.min(_ray_distance(th, sig)) for s in secs for th in (s.lo + d, s.hi - d))

    gaps = [clearance(d) for d in cands]
    clear = [d for d, g in zip(cands, gaps) if g >= eps]
    if clear:
        chosen = float(clear[0])
    else:
        best = int(np.argmax(gaps))
        if not gaps[best] > 1e-3 * eps:
            raise QuadratureNotConverged("every wedge angle runs a contour ray through a zero")
        chosen = float(cands[best])
    r0 = 0.5 * min(1.0, float(np.min(np.abs(sig)))) if sig.size else 0.5
    if sig.size and float(np.min(np.abs(sig))) - eps <= r0:
        # keep indentation circles off the vertex arc
        r0 = 0.5 * max(float(np.min(np.abs(sig))) - eps, 0.0)
        if r0 <= 0.0:
            raise QuadratureNotConverged("a zero sits within epsilon of the origin")
    wedges = [(s.lo + chosen, s.hi - chosen, "K+" if s.halfplane == "upper" else "K-") for s in secs]

    def inside(z):
        th = np.mod(np.angle(z), 2 * np.pi)
        return any(lo < th < hi for lo, hi, _ in wedges)

    excluded = [z for z in catalogue.zeros if not inside(z.sigma)]
    return ContourSpec(wedges, chosen, float(r0), excluded=excluded, eps=float(eps), avoid=np.asarray(sig, dtype=complex))


def _indentations(spec, theta, lo, hi):
    """``(r1, r2, sigma)`` for zeros closer than ``eps`` to the ray segment, sorted."""
    if spec.eps <= 0 or not spec.avoid.size:
        return []
    rot = spec.avoid * np.exp(-1j * theta)
    proj, perp = rot.real, np.abs(rot.imag)
    out = []
    for k in np.flatnonzero((perp < spec.eps) & (proj > 0)):
        h = np.sqrt(spec.eps**2 - perp[k] ** 2)
        r1, r2 = proj[k] - h, proj[k] + h
        if r2 <= lo or r1 >= hi:
            continue
        if r1 <= lo or r2 >= hi:
            raise QuadratureNotConverged(f"contour radius lies within epsilon of the zero {spec.avoid[k]:.6g}")
        out.append((float(r1), float(r2), complex(spec.avoid[k])))
    out.sort(key=lambda c: c[0])
    for a, b in zip(out, out[1:]):
        if b[0] < a[1]:
            raise QuadratureNotConverged("overlapping indentations on one contour ray")
    return out


def _clear_radius(spec, R):
    """Smallest ``R' >= R`` (stepping by 2%) with every ray point ``R' e^{i theta}`` clear of zeros."""
    if spec.eps <= 0 or not spec.avoid.size:
        return R
    thetas = [th for lo, hi, _ in spec.wedges for th in (lo, hi)]
    for _ in range(200):
        pts = np.array([R * np.exp(1j * th) for th in thetas])
        if np.min(np.abs(pts[:, None] - spec.avoid[None, :])) > spec.eps:
            return R
        R *= 1.02
    raise QuadratureNotConverged("no clear cut-off radius for the contour")


def _integrand(ctx, f, rho, x, t, halfplane):
    from .charmat import pde_char_det, zeta_both

    d = pde_char_det(ctx, rho)
    zp, zm = zeta_both(ctx, rho, f)
    num = zp if halfplane == "K+" else zm
    anchor = 0.0 if halfplane == "K+" else 1.0
    # the lower contour enters with a minus sign, matching WEIGHT_LOWER = -i
    sign = 1.0 if halfplane == "K+" else -1.0
    expo = 1j * rho[:, None] * (x[None, :] - anchor) - ctx.a * rho[:, None] ** ctx.n * t
    lead = sign * (num.m / d.m)[:, None] * np.exp(1j * expo.imag)
    with np.errstate(under="ignore"):
        return lead * np.exp((num.s - d.s)[:, None] + expo.real)


def _panels(a, b, width):
    m = max(1, int(np.ceil((b - a) / width)))
    return np.linspace(a, b, m + 1)


def _straight(ctx, f, x, t, halfplane, u, lo, hi, spec, width):
    edges = _panels(lo, hi, width)
    g, w = np.polynomial.legendre.leggauss(spec.order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    r = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    vals = _integrand(ctx, f, r * u, x, t, halfplane)
    return u * np.sum(wt[:, None] * vals, axis=0)


def _detour(ctx, f, x, t, halfplane, p1, p2, sigma, radius, spec, width):
    """Short arc of ``|rho - sigma| = radius`` from ``p1`` to ``p2``."""
    phi1 = np.angle(p1 - sigma)
    sweep = np.angle((p2 - sigma) / (p1 - sigma))
    m = max(2, int(np.ceil(abs(sweep) * radius / width)))
    edges = np.linspace(phi1, phi1 + sweep, m + 1)
    g, w = np.polynomial.legendre.leggauss(spec.order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    phi = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    step = radius * np.exp(1j * phi)
    vals = _integrand(ctx, f, sigma + step, x, t, halfplane)
    return np.sum((wt * 1j * step)[:, None] * vals, axis=0)


def _line_integral(ctx, f, x, t, halfplane, theta, r_a, r_b, spec, width):
    """Integral along ``rho = r e^{i theta}``, r from r_a to r_b (either order)."""
    lo, hi = min(r_a, r_b), max(r_a, r_b)
    u = np.exp(1j * theta)
    total = 0.0
    start = lo
    for r1, r2, sigma in _indentations(spec, theta, lo, hi):
        total = total + _straight(ctx, f, x, t, halfplane, u, start, r1, spec, width)
        total = total + _detour(ctx, f, x, t, halfplane, r1 * u, r2 * u, sigma, spec.eps, spec, width)
        start = r2
    total = total + _straight(ctx, f, x, t, halfplane, u, start, hi, spec, width)
    return total if r_b >= r_a else -total


def _arc_integral(ctx, f, x, t, halfplane, r0, th_a, th_b, spec):
    m = max(2, int(np.ceil(abs(th_b - th_a) * r0 / 0.25)))
    edges = np.linspace(th_a, th_b, m + 1)
    g, w = np.polynomial.legendre.leggauss(spec.order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    th = (mid[:, None] + half[:, None] * g[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    rho = r0 * np.exp(1j * th)
    vals = _integrand(ctx, f, rho, x, t, halfplane)
    return np.sum((wt * 1j * rho)[:, None] * vals, axis=0)


def _panel_width(ctx, t, R, spec):
    rate = 2.0 + ctx.n * t * R ** (ctx.n - 1)
    return min(spec.panel, 3.0 / rate)


def _wedge_integral(ctx, f, x, t, wedge, spec, R_cut, refine=1):
    lo, hi, hp = wedge
    width = _panel_width(ctx, t, R_cut, spec) / refine
    inbound = _line_integral(ctx, f, x, t, hp, hi, R_cut, spec.r0, spec, width)
    arc = _arc_integral(ctx, f, x, t, hp, spec.r0, hi, lo, spec)
    outbound = _line_integral(ctx, f, x, t, hp, lo, spec.r0, R_cut, spec, width)
    return inbound + arc + outbound


def _initial_cut(ctx, t, spec):
    s = np.sin(ctx.n * spec.delta_w)
    return max(4.0 * spec.r0, (60.0 / (t * s)) ** (1.0 / ctx.n))


@dataclass
class ContourResult:
    value: np.ndarray
    integral: np.ndarray
    residues: np.ndarray
    R_cut: float
    refinement_change: float


def contour_solution(ctx, f, x, t: float, catalogue, spec: Optional[ContourSpec] = None) -> ContourResult:
    """Evaluate the integral representation at points ``x`` and time ``t > 0``."""
    if t <= 0:
        raise ValueError("contour evaluation needs t > 0")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any((x < 0) | (x > 1)):
        raise ValueError("x must lie in [0, 1]")
    spec = spec or make_contour(ctx, catalogue)
    R = _clear_radius(spec, spec.R_cut or _initial_cut(ctx, t, spec))
    integral = np.zeros(x.shape, dtype=complex)
    for wedge in spec.wedges:
        integral = integral + _wedge_integral(ctx, f, x, t, wedge, spec, R)
    for _ in range(8):
        tail = np.zeros(x.shape, dtype=complex)
        R2 = _clear_radius(spec, 2 * R)
        for lo, hi, hp in spec.wedges:
            width = _panel_width(ctx, t, R2, spec)
            tail = tail + _line_integral(ctx, f, x, t, hp, hi, R2, R, spec, width)
            tail = tail + _line_integral(ctx, f, x, t, hp, lo, R, R2, spec, width)
        integral = integral + tail
        R = R2
        if np.max(np.abs(tail)) / (2 * np.pi) < spec.tail_tol:
            break
    else:
        raise QuadratureNotConverged(f"tail beyond R = {R} did not fall below {spec.tail_tol}")
    check = np.zeros(x.shape, dtype=complex)
    for wedge in spec.wedges:
        check = check + _wedge_integral(ctx, f, x, t, wedge, spec, R, refine=2)
    change = float(np.max(np.abs(check - integral)) / (2 * np.pi))
    if change > spec.tol:
        raise QuadratureNotConverged(f"panel refinement changed the integral by {change:.3g}")
    integral = integral / (2 * np.pi)
    res = np.zeros(x.shape, dtype=complex)
    last = 0.0
    for z in spec.excluded:
        term = residue_term(ctx, z.sigma, f, catalogue.epsilon, z.halfplane, z.order)
        contrib = term.spatial(x) * np.exp(term.exponent * t)
        res = res + contrib
        if abs(z.sigma) > 0.8 * catalogue.R_max:
            last = max(last, float(np.max(np.abs(contrib))))
    if last > spec.tail_tol:
        raise QuadratureNotConverged(f"residues near the catalogue radius are still {last:.3g}; enlarge R_max")
    # the vertex arc leaves the origin outside the wedges
    orig = origin_term(ctx, f, catalogue)
    if orig is not None:
        res = res + orig.value(x, t)
    return ContourResult(integral + res, integral, res, float(R), change)


# finite-difference oracle --------------------------------------------------
def fd_weights(offsets, order: int) -> np.ndarray:
    """Weights ``w`` with ``sum_j w_j u(x0 + offsets_j h) ~ h^order u^(order)(x0)``."""
    s = np.asarray(offsets, dtype=float)
    m = s.size
    V = np.vander(s, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(V, rhs)


def _stencil(i, N, width):
    lo = min(max(0, i - width // 2), N + 1 - width)
    return np.arange(lo, lo + width)


def derivative_matrix(N: int, order: int, accuracy: int = 6) -> sparse.csr_matrix:
    """Finite-difference ``d^order/dx^order`` on the grid ``x_i = i/N``, i = 0..N.

    Centred stencils in the interior and one-sided stencils near the ends,
    each with ``order + accuracy`` points (formal accuracy ``O(h^accuracy)``
    one-sided, and at least that in the interior).
    """
    h = 1.0 / N
    width = order + accuracy
    if order % 2 == 0:
        width -= 1
    rows, cols, vals = [], [], []
    for i in range(N + 1):
        idx = _stencil(i, N, width)
        w = fd_weights(idx - i, order) / h**order
        rows += [i] * idx.size
        cols += list(idx)
        vals += list(w)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(N + 1, N + 1))


def boundary_rows(A_array: np.ndarray, N: int, accuracy: int = 6) -> np.ndarray:
    """Discrete versions of the boundary functionals in column order."""
    from .problem import column_order

    n = A_array.shape[0]
    h = 1.0 / N
    out = np.zeros((n, N + 1))
    for c in range(2 * n):
        m = column_order(n, c)
        width = m + accuracy
        if c % 2 == 0:
            idx = np.arange(width)
            w = fd_weights(idx, m) / h**m
        else:
            idx = np.arange(N + 1 - width, N + 1)
            w = fd_weights(idx - N, m) / h**m
        out[:, idx] += A_array[:, c][:, None] * w[None, :]
    return out


def _replaced_nodes(A_array, N):
    """Grid nodes whose PDE equation is replaced by a boundary row."""
    n = A_array.shape[0]
    left = right = 0
    for row in A_array:
        nz = np.flatnonzero(row)
        ends = {int(c) % 2 for c in nz}
        if ends == {1}:
            right += 1
        elif ends == {0}:
            left += 1
        else:
            if left <= right:
                left += 1
            else:
                right += 1
    assert left + right == n
    return list(range(left)) + list(range(N, N - right, -1))


@dataclass
class FDResult:
    x: np.ndarray
    u: np.ndarray
    t: float
    steps: int
    eigen_check: Optional[np.ndarray] = None


def fd_system(ctx, N: int, accuracy: int = 4):
    """Mass matrix M (singular on boundary rows) and operator K with ``M u' = K u``."""
    n = ctx.n
    D = derivative_matrix(N, n, accuracy)
    K = (-ctx.a * (-1j) ** n) * D.tocsr().astype(complex)
    K = K.tolil()
    M = sparse.identity(N + 1, dtype=complex, format="lil")
    B = boundary_rows(ctx.A.array, N, accuracy)
    for row, node in zip(B, _replaced_nodes(ctx.A.array, N)):
        K[node, :] = row
        M[node, node] = 0.0
    return M.tocsc(), K.tocsc()


def fd_eigenvalues(ctx, N: int = 200, accuracy: int = 4, count: int = 5) -> np.ndarray:
    """Smallest-modulus finite eigenvalues of ``(-i d/dx)^n`` on the grid."""
    M, K = fd_system(ctx, N, accuracy)
    # K = -a L on PDE rows; eigenvalues of L are K-eigenvalues divided by -a.
    w = eig(K.toarray(), M.toarray(), right=False)
    w = w[np.isfinite(w)] / (-ctx.a)
    return w[np.argsort(np.abs(w))][:count]


def fd_reference(ctx, f, grid=(400, 1000), t: float = 0.01, catalogue=None, accuracy: int = 4) -> FDResult:
    """Method-of-lines solution at time ``t`` with TR-BDF2 stepping.

    The boundary rows are imposed algebraically at every stage (an index-1
    DAE).  One-sided boundary stencils leave a few spurious discrete modes
    with large positive real part; TR-BDF2 is L-stable and damps them,
    where Crank-Nicolson amplifies them slightly at every step.  The scheme
    is second order in time and ``O(h^accuracy)`` in space.

    If a catalogue is supplied the lowest five discrete eigenvalues are
    compared with the catalogued ones and a mismatch over 5% raises
    :class:`UnstableDiscretization`.
    """
    N, steps = int(grid[0]), int(grid[1])
    M, K = fd_system(ctx, N, accuracy)
    x = np.linspace(0.0, 1.0, N + 1)
    eig_check = None
    if catalogue is not None:
        from .eigensystem import eigenvalue_representatives

        lam = np.array([z.sigma**ctx.n for z in eigenvalue_representatives(catalogue, ctx.n)])[:5]
        disc = fd_eigenvalues(ctx, min(N, 160), accuracy, count=len(lam) + 4)
        rel = np.array([np.min(np.abs(disc - l)) / abs(l) for l in lam])
        eig_check = rel
        if np.any(rel > 0.05):
            raise UnstableDiscretization(f"discrete eigenvalues miss the catalogue by up to {rel.max():.3g}")
    dt = t / steps
    g = 2.0 - np.sqrt(2.0)
    trap = splu((M - 0.5 * g * dt * K).tocsc())
    trap_rhs = (M + 0.5 * g * dt * K).tocsr()
    bdf = splu((M - (1.0 - g) / (2.0 - g) * dt * K).tocsc())
    Mr = M.tocsr()
    c1 = 1.0 / (g * (2.0 - g))
    c2 = (1.0 - g) ** 2 / (g * (2.0 - g))
    u = np.asarray(f(x), dtype=complex)
    for _ in range(steps):
        mid = trap.solve(trap_rhs @ u)
        u = bdf.solve(Mr @ (c1 * mid - c2 * u))
    return FDResult(x, u, float(t), steps, eig_check)


def fd_probe(ctx, f, x, t: float = 0.01, grid=(400, 1000), tol: float = 5e-4, accuracy: int = 4):
    """FD values at probe points, trusted only if doubling the grid changes them by < ``tol``.

    Returns ``(values, change)``; raises :class:`UnstableDiscretization`
    when the doubled grid moves a probe value by ``tol`` or more.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = []
    for N, S in (grid, (2 * grid[0], 2 * grid[1])):
        fd = fd_reference(ctx, f, (N, S), t, accuracy=accuracy)
        out.append(np.interp(x, fd.x, fd.u.real) + 1j * np.interp(x, fd.x, fd.u.imag))
    change = float(np.max(np.abs(out[1] - out[0])))
    if not change < tol:
        raise UnstableDiscretization(f"grid doubling moved the probes by {change:.3g}")
    return out[1], change
