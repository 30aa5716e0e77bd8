"""Characteristic matrices, determinants, minors and spectral functions.

Every function here is vectorised over an array of spectral parameters
``rho`` and returns :class:`ScaledComplex` values, so that exponentials of
size ``exp(|rho|)`` never overflow.  Row ``k`` (0-based) of each matrix is
scaled by ``exp(max(0, Re z_k))`` where ``z_k = -i omega^k rho`` is the
exponent appearing in that row.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .datum import Datum
from .problem import BoundaryMatrix, adjoint, classify, column_index
from .scaled import ScaledComplex, scaled_det, scaled_sum_axis


@dataclass(frozen=True)
class CharContext:
    """Operator data needed to evaluate characteristic objects.

    ``A`` holds the boundary coefficients of the operator itself and
    ``Astar`` (an ``n x 2n`` array) the boundary coefficients of its
    adjoint, row ``j`` of which generates column ``j`` of the PDE
    characteristic matrix.
    """

    A: BoundaryMatrix
    Astar: tuple
    a: complex = 1j

    @property
    def n(self) -> int:
        return self.A.n

    @cached_property
    def omega(self) -> complex:
        return np.exp(2j * np.pi / self.n)

    @cached_property
    def omega_powers(self) -> np.ndarray:
        return np.exp(2j * np.pi * np.arange(self.n) / self.n)

    @cached_property
    def astar_array(self) -> np.ndarray:
        return np.array(self.Astar, dtype=float)

    @cached_property
    def a_array(self) -> np.ndarray:
        return self.A.array

    @cached_property
    def column_orders(self):
        """Derivative order of each adjoint row, or ``None`` if some row mixes orders."""
        orders = []
        for row in self.astar_array:
            ms = {self.n - 1 - int(c) // 2 for c in np.flatnonzero(row)}
            if len(ms) != 1:
                return None
            orders.append(ms.pop())
        return tuple(orders)

    @cached_property
    def expansion(self):
        """Exponential-sum expansions of the determinant and cofactors (non-Robin adjoint only)."""
        if self.column_orders is None:
            return None
        return _build_expansion(self)


def make_context(A: BoundaryMatrix, a: complex = 1j) -> CharContext:
    return CharContext(A, adjoint(A).rows, a)


def column_correspondence(A: BoundaryMatrix, Astar: BoundaryMatrix):
    """Map adjoint row j to the row of A generating the matching column.

    Under the non-Robin and symmetry conditions a left-only adjoint row of
    order m pairs with a right-only row of A of the same order, right-only
    pairs with left-only, and coupled pairs with coupled.  Returns ``None``
    when no such bijection exists.
    """
    ca, cs = classify(A), classify(Astar)
    if not (ca.nonRobin and cs.nonRobin):
        return None
    swap = {"left-only": "right-only", "right-only": "left-only", "coupled": "coupled"}
    perm = []
    for rs in cs.rows:
        want = (rs.order, swap[rs.kind])
        hits = [i for i, ra in enumerate(ca.rows) if (ra.order, ra.kind) == want]
        if len(hits) != 1 or hits[0] in perm:
            return None
        perm.append(hits[0])
    return tuple(perm)


def adjoint_context(ctx: CharContext) -> CharContext:
    """Context of the adjoint operator, with columns aligned to ``ctx``.

    The roles of A and A* are swapped.  When a column correspondence exists
    the rows of A are ordered so that column j of the adjoint PDE
    characteristic matrix matches column j of the original one.
    """
    Astar = BoundaryMatrix(ctx.n, ctx.Astar, _pivots(ctx.astar_array))
    perm = column_correspondence(ctx.A, Astar)
    rows = ctx.A.rows if perm is None else tuple(ctx.A.rows[p] for p in perm)
    return CharContext(Astar, rows, ctx.a)


def _pivots(arr):
    return tuple(int(np.flatnonzero(r)[0]) for r in arr)


# building blocks -----------------------------------------------------------
def row_exponents(ctx: CharContext, rho) -> np.ndarray:
    """``z_k = -i omega^k rho`` with shape ``rho.shape + (n,)``."""
    rho = np.asarray(rho, dtype=complex)
    return -1j * rho[..., None] * ctx.omega_powers


def _poly_parts(coeffs: np.ndarray, base: np.ndarray, n: int):
    """Sums over derivative order r of ``base_k**r`` times left/right coefficients.

    ``coeffs`` is an ``n x 2n`` coefficient array (row j = column j of the
    result); ``base`` has shape (..., n) indexed by matrix row k.
    """
    left = np.stack([coeffs[:, column_index(n, r, 0)] for r in range(n)])  # (r, j)
    right = np.stack([coeffs[:, column_index(n, r, 1)] for r in range(n)])
    powers = base[..., None] ** np.arange(n)  # (..., k, r)
    return powers @ left, powers @ right


def pde_char_parts(ctx: CharContext, rho):
    """The polynomial parts (A+, A-) of the PDE characteristic matrix."""
    z = row_exponents(ctx, rho)
    return _poly_parts(ctx.astar_array, z, ctx.n)


def _scaled_rows(plus, minus, z):
    s = np.maximum(z.real, 0.0)
    mant = plus * np.exp(-s)[..., None] + minus * np.exp(z - s)[..., None]
    return mant, s


def pde_char_matrix(ctx: CharContext, rho) -> ScaledComplex:
    """PDE characteristic matrix ``A_kj = A+_kj + A-_kj exp(-i omega^k rho)``."""
    mant, s = pde_char_matrix_rows(ctx, rho)
    return ScaledComplex(mant, np.broadcast_to(s[..., None], mant.shape))


def pde_char_matrix_rows(ctx: CharContext, rho):
    """Row-normalised mantissa and per-row log scale of the PDE characteristic matrix."""
    z = row_exponents(ctx, rho)
    plus, minus = _poly_parts(ctx.astar_array, z, ctx.n)
    return _scaled_rows(plus, minus, z)


def pde_char_det(ctx: CharContext, rho) -> ScaledComplex:
    """Delta_PDE; uses the exact exponential-sum expansion when available."""
    exp = ctx.expansion
    if exp is not None:
        return _eval_expsum(exp["det"], np.asarray(rho, dtype=complex))
    mant, s = pde_char_matrix_rows(ctx, rho)
    return scaled_det(mant, s)


# exponential-sum expansion ---------------------------------------------------
# When every column of the PDE characteristic matrix carries a single
# derivative order m_j, entry (k, j) equals rho^{m_j} (P_kj + M_kj e^{z_k})
# with constant P, M.  Expanding the determinant over the set S of rows
# taking the exponential part gives
#     Delta(rho) = rho^{sum m_j} sum_S det(rows from M on S, P off S) e^{e_S rho},
# with e_S = sum_{k in S} (-i omega^k).  Subsets sharing an exponent are
# merged and coefficients that cancel to round-off are set to exactly zero,
# so exact cancellations (such as a vanishing leading exponential) do not
# leave floating-point debris that would dominate the true value.
_GROUP_TOL = 1e-12
_CANCEL_TOL = 1e-12


@dataclass(frozen=True)
class ExpSum:
    exps: np.ndarray  # exponent coefficients e_g
    coefs: np.ndarray  # constants D_g
    degree: int  # power of rho in front


def _group(exps, coefs):
    out_e, out_c, out_w = [], [], []
    for e, c in zip(exps, coefs):
        for i, e0 in enumerate(out_e):
            if abs(e - e0) < _GROUP_TOL:
                out_c[i] += c
                out_w[i] += abs(c)
                break
        else:
            out_e.append(e)
            out_c.append(c)
            out_w.append(abs(c))
    scale = max(out_w) if out_w else 0.0
    keep = [i for i in range(len(out_e)) if abs(out_c[i]) > _CANCEL_TOL * max(scale, 1e-300)]
    return np.array([out_e[i] for i in keep], dtype=complex), np.array([out_c[i] for i in keep], dtype=complex)


def _subset_sum(P, M, rows, cols):
    n_rows = len(rows)
    exps, coefs = [], []
    base = -1j * np.exp(2j * np.pi * np.arange(P.shape[0]) / P.shape[0])
    for mask in itertools.product((0, 1), repeat=n_rows):
        mat = np.array([(M if b else P)[r, cols] for r, b in zip(rows, mask)])
        d = np.linalg.det(mat) if n_rows else 1.0
        exps.append(sum(base[r] for r, b in zip(rows, mask) if b))
        coefs.append(d)
    return _group(exps, coefs)


def _build_expansion(ctx: CharContext):
    n = ctx.n
    P, M = _poly_parts(ctx.astar_array, -1j * ctx.omega_powers, n)
    orders = ctx.column_orders
    allr = list(range(n))
    e, c = _subset_sum(P, M, allr, allr)
    out = {"det": ExpSum(e, c, int(sum(orders)))}
    cof = {}
    for r in range(n):
        rows = [k for k in allr if k != r]
        for j in range(n):
            cols = [k for k in allr if k != j]
            e, c = _subset_sum(P, M, rows, cols)
            cof[(r, j)] = ExpSum(e, (-1) ** (r + j) * c, int(sum(orders) - orders[j]))
    out["cof"] = cof
    return out


def _eval_expsum(es: ExpSum, rho: np.ndarray) -> ScaledComplex:
    if es.coefs.size == 0:
        return ScaledComplex(np.zeros(rho.shape, dtype=complex), np.zeros(rho.shape))
    E = rho[..., None] * es.exps
    s = np.max(E.real, axis=-1)
    m = np.sum(es.coefs * np.exp(E - s[..., None]), axis=-1)
    if es.degree:
        r = np.abs(rho)
        safe = np.where(r > 0, r, 1.0)
        m = m * (rho / safe) ** es.degree
        s = s + es.degree * np.log(safe)
        m = np.where(r > 0, m, 0.0)
    return ScaledComplex(m, s)


def cofactors(ctx: CharContext, rho) -> ScaledComplex:
    """Signed cofactors ``C[r, j] = (-1)^(r+j) det(A without row r, column j)``.

    These coincide with the cyclically wrapped minors for odd n and carry
    the sign that makes the Laplace expansion exact for every n.
    """
    exp = ctx.expansion
    if exp is not None:
        rho = np.asarray(rho, dtype=complex)
        n = ctx.n
        out_m = np.empty(rho.shape + (n, n), dtype=complex)
        out_s = np.empty(rho.shape + (n, n), dtype=float)
        for (r, j), es in exp["cof"].items():
            v = _eval_expsum(es, rho)
            out_m[..., r, j] = v.m
            out_s[..., r, j] = v.s
        return ScaledComplex(out_m, out_s)
    mant, s = pde_char_matrix_rows(ctx, rho)
    return _cofactors_from_rows(mant, s)


def _cofactors_from_rows(mant, s):
    n = mant.shape[-1]
    idx = np.arange(n)
    out_m = np.empty(mant.shape, dtype=complex)
    out_s = np.empty(mant.shape, dtype=float)
    if n == 1:
        out_m[...] = 1.0
        out_s[...] = 0.0
        return ScaledComplex(out_m, out_s)
    for r in range(n):
        rows = idx[idx != r]
        sub_rows = mant[..., rows, :]
        srow = np.sum(s[..., rows], axis=-1)
        for j in range(n):
            cols = idx[idx != j]
            d = np.linalg.det(sub_rows[..., :, cols])
            out_m[..., r, j] = (-1) ** (r + j) * d
            out_s[..., r, j] = srow
    return ScaledComplex(out_m, out_s)


def minor_det(ctx: CharContext, r: int, j: int, rho) -> ScaledComplex:
    """Signed minor for 1-based indices ``r``, ``j``."""
    return cofactors(ctx, rho)[..., r - 1, j - 1]


def transforms_on_rays(ctx: CharContext, rho, f: Datum) -> ScaledComplex:
    """``hat f(omega^r rho)`` for r = 0..n-1, shape ``rho.shape + (n,)``."""
    rho = np.asarray(rho, dtype=complex)
    return f.half_transform_scaled(rho[..., None] * ctx.omega_powers)


def zeta_all(ctx: CharContext, rho, f: Datum) -> ScaledComplex:
    """``zeta_j(rho; f) = sum_r C[r, j] hat f(omega^r rho)`` for every j."""
    C = cofactors(ctx, rho)
    q = transforms_on_rays(ctx, rho, f)
    prod = ScaledComplex(C.m * q.m[..., :, None], C.s + q.s[..., :, None])
    return scaled_sum_axis(prod, axis=-2)


def zeta_j(ctx: CharContext, j: int, rho, f: Datum) -> ScaledComplex:
    """Spectral function zeta_j for 1-based ``j``."""
    return zeta_all(ctx, rho, f)[..., j - 1]


def zeta_pm(ctx: CharContext, sign: int, rho, f: Datum) -> ScaledComplex:
    """``zeta^+`` (sign > 0) or ``zeta^-`` (sign < 0)."""
    z = zeta_all(ctx, rho, f)
    plus, minus = pde_char_parts(ctx, rho)
    first = (plus if sign > 0 else minus)[..., 0, :]
    return scaled_sum_axis(ScaledComplex(z.m * first, z.s), axis=-1)


def zeta_both(ctx: CharContext, rho, f: Datum):
    """``(zeta^+, zeta^-)`` sharing one cofactor evaluation."""
    z = zeta_all(ctx, rho, f)
    plus, minus = pde_char_parts(ctx, rho)
    zp = scaled_sum_axis(ScaledComplex(z.m * plus[..., 0, :], z.s), axis=-1)
    zm = scaled_sum_axis(ScaledComplex(z.m * minus[..., 0, :], z.s), axis=-1)
    return zp, zm


def adjoint_zeta_j(ctx: CharContext, j: int, rho, f: Datum) -> ScaledComplex:
    """zeta_j evaluated in the adjoint context."""
    return zeta_j(adjoint_context(ctx), j, rho, f)


# characteristic matrix of the operator itself ------------------------------
def char_matrix_S(ctx: CharContext, rho) -> ScaledComplex:
    """``M_kj = sum_r (i omega^k rho)^r (alpha_j^(r) e^{-i omega^k rho} + beta_j^(r))``."""
    rho = np.asarray(rho, dtype=complex)
    base = 1j * rho[..., None] * ctx.omega_powers
    left, right = _poly_parts(ctx.a_array, base, ctx.n)
    z = row_exponents(ctx, rho)
    mant, s = _scaled_rows(right, left, z)
    return ScaledComplex(mant, np.broadcast_to(s[..., None], mant.shape))


def char_det_S(ctx: CharContext, rho) -> ScaledComplex:
    """Characteristic determinant ``det M(rho)`` (empty exponential prefactor)."""
    rho = np.asarray(rho, dtype=complex)
    base = 1j * rho[..., None] * ctx.omega_powers
    left, right = _poly_parts(ctx.a_array, base, ctx.n)
    mant, s = _scaled_rows(right, left, row_exponents(ctx, rho))
    return scaled_det(mant, s)
