"""Zeros of the PDE characteristic determinant.

Zeros are isolated by recursive subdivision of a square, counting zeros in
each cell with the argument principle, and polished by Newton's method.
Exponential polynomials of this kind have zeros on a few asymptotic rays,
so a square of half-width ``R_max`` holds a few dozen of them at most.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .charmat import CharContext, pde_char_det
from .errors import BoundaryZero, TooFewZeros
from .solver import derivative_at

MAX_NUDGES = 8
ORIGIN_RADIUS = 1e-3
# Asymmetric split fractions keep subdivision lines away from the symmetry
# axes and rays on which zeros of the presets tend to lie.
SPLIT_X = 0.5 + 0.0371
SPLIT_Y = 0.5 - 0.0293


@dataclass(frozen=True)
class Zero:
    sigma: complex
    order: int
    halfplane: str  # "K+" (closed upper half-plane) or "K-"

    @property
    def simple(self) -> bool:
        return self.order == 1


@dataclass
class ZeroCatalogue:
    zeros: list
    epsilon: float
    R_max: float
    simple_only: bool
    origin_order: int = 0
    log_abs_derivative: list = field(default_factory=list)

    def __len__(self):
        return len(self.zeros)

    def __getitem__(self, k):
        return self.zeros[k]

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([z.sigma for z in self.zeros], dtype=complex)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "re_sigma", "im_sigma", "order", "halfplane", "log10_abs_dDelta", "phase_dDelta"])
        for k, z in enumerate(self.zeros, start=1):
            lg, ph = self.log_abs_derivative[k - 1] if self.log_abs_derivative else (float("nan"),) * 2
            w.writerow([k, fmt(z.sigma.real), fmt(z.sigma.imag), z.order, z.halfplane, fmt(lg), fmt(ph)])
        return buf.getvalue()


def fmt(x: float) -> str:
    return "%.17g" % x


def snap_to_axes(z: complex, rtol: float = 1e-13) -> complex:
    """Zero out a real or imaginary part that is round-off relative to ``|z|``."""
    tol = rtol * abs(z)
    re = 0.0 if abs(z.real) < tol else z.real
    im = 0.0 if abs(z.imag) < tol else z.imag
    return complex(re, im)


def halfplane_of(sigma: complex) -> str:
    return "K+" if sigma.imag >= 0 else "K-"


# argument principle ---------------------------------------------------------
def _phase_of(F, pts) -> np.ndarray:
    val = F(pts)
    m = val.m
    if np.any(m == 0) or not np.all(np.isfinite(m)):
        raise BoundaryZero("characteristic determinant vanishes (or is non-finite) on the contour")
    return np.angle(m)


def winding_number(F, path: Callable, n0: int = 64, min_step: float = 1e-10, length: float = 1.0) -> int:
    """Winding number of ``F`` around 0 along the closed path ``path(t)``, t in [0,1].

    The parameter grid is refined until consecutive phases differ by less
    than pi/2.  ``min_step`` (in units of arclength) bounds the refinement;
    hitting it means a zero sits on or very near the path.
    """
    t = np.linspace(0.0, 1.0, n0 + 1)
    ph = _phase_of(F, path(t))
    min_dt = min_step / max(length, 1e-300)
    for _ in range(60):
        d = np.angle(np.exp(1j * (ph[1:] - ph[:-1])))
        bad = np.flatnonzero(np.abs(d) >= np.pi / 2)
        if bad.size == 0:
            total = float(np.sum(d)) / (2 * np.pi)
            w = int(round(total))
            if abs(total - w) > 1e-3:
                raise BoundaryZero(f"non-integral winding {total:.6f}")
            return w
        if np.min(t[bad + 1] - t[bad]) < min_dt:
            raise BoundaryZero("argument refinement stalled: zero on or near the contour")
        mids = 0.5 * (t[bad] + t[bad + 1])
        ph_mid = _phase_of(F, path(mids))
        t = np.concatenate([t, mids])
        ph = np.concatenate([ph, ph_mid])
        order = np.argsort(t, kind="stable")
        t, ph = t[order], ph[order]
    raise BoundaryZero("argument refinement did not converge")


def rectangle_path(rect):
    x0, x1, y0, y1 = rect
    corners = np.array([x0 + 1j * y0, x1 + 1j * y0, x1 + 1j * y1, x0 + 1j * y1, x0 + 1j * y0])

    def path(t):
        t = np.asarray(t, dtype=float) * 4.0
        i = np.minimum(np.floor(t).astype(int), 3)
        u = t - i
        return corners[i] * (1 - u) + corners[i + 1] * u

    return path


def circle_path(center, r):
    def path(t):
        return center + r * np.exp(2j * np.pi * np.asarray(t, dtype=float))

    return path


def _pde_det_function(ctx):
    return lambda z: pde_char_det(ctx, z)


def origin_order(ctx: CharContext, F=None) -> int:
    """Order of the zero of Delta_PDE at rho = 0 (0 if nonzero there)."""
    F = F or _pde_det_function(ctx)
    return winding_number(F, circle_path(0.0, ORIGIN_RADIUS), length=2 * np.pi * ORIGIN_RADIUS)


def _raw_count(F, rect) -> int:
    x0, x1, y0, y1 = rect
    per = 2 * ((x1 - x0) + (y1 - y0))
    n0 = int(min(4096, max(64, 8 * per)))
    return winding_number(F, rectangle_path(rect), n0=n0, length=per)


def _contains_origin(rect) -> bool:
    x0, x1, y0, y1 = rect
    return x0 < 0 < x1 and y0 < 0 < y1


def count_zeros(ctx: CharContext, rect, F=None, m0: Optional[int] = None, exclude_origin=True) -> int:
    """Number of zeros of Delta_PDE inside ``rect = (x0, x1, y0, y1)``.

    Boundaries passing too close to a zero are nudged outward by a small
    amount, at most eight times. A zero at the origin is not counted when
    ``exclude_origin`` is set.
    """
    F = F or _pde_det_function(ctx)
    x0, x1, y0, y1 = rect
    scale = max(x1 - x0, y1 - y0)
    for attempt in range(MAX_NUDGES + 1):
        h = attempt * 1e-4 * scale * (1 + 0.37 * attempt)
        r = (x0 - h, x1 + 1.3 * h, y0 - 0.7 * h, y1 + 1.1 * h)
        try:
            c = _raw_count(F, r)
        except BoundaryZero:
            continue
        if exclude_origin and _contains_origin(r):
            if m0 is None:
                m0 = origin_order(ctx, F)
            c -= m0
        return c
    raise BoundaryZero(f"could not move the contour of {rect} off a zero after {MAX_NUDGES} nudges")


# zero location ----------------------------------------------------------------
def _newton(F, z0, rect, tol=1e-14, maxit=60):
    x0, x1, y0, y1 = rect
    size = max(x1 - x0, y1 - y0)
    r = min(0.05, size / 4)
    z = complex(z0)
    for _ in range(maxit):
        val = F(np.array(z))
        der = derivative_at(F, z, r)
        with np.errstate(all="ignore"):
            step = complex(val.m / der.m * np.exp(val.s - der.s))
        if not np.isfinite(step):
            return None
        z = z - step
        pad = 1e-3 * size
        if not (x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad):
            return None
        if abs(step) < tol * max(1.0, abs(z)):
            return z
    return z


def locate_zeros(ctx: CharContext, R_max: float, min_cell: float = 1e-7) -> ZeroCatalogue:
    """All nonzero zeros of Delta_PDE with ``|sigma| <= R_max``."""
    if R_max < 1:
        raise ValueError("R_max must be at least 1")
    F = _pde_det_function(ctx)
    m0 = origin_order(ctx, F)
    L = R_max * 1.0 + 0.5
    root = (-L, L * 1.0131, -L * 1.0087, L)
    found = []
    stack = [(root, count_zeros(ctx, root, F, m0))]
    while stack:
        rect, c = stack.pop()
        if c <= 0:
            continue
        x0, x1, y0, y1 = rect
        size = max(x1 - x0, y1 - y0)
        if c == 1 and size < max(4.0, 0.1 * R_max) and not _contains_origin(rect):
            z = _newton(F, 0.5 * (x0 + x1) + 0.5j * (y0 + y1), rect)
            if z is not None:
                found.append((z, 1))
                continue
        if size < min_cell:
            found.append((0.5 * (x0 + x1) + 0.5j * (y0 + y1), c))
            continue
        xm = x0 + SPLIT_X * (x1 - x0)
        ym = y0 + SPLIT_Y * (y1 - y0)
        if (x1 - x0) >= (y1 - y0):
            kids = [(x0, xm, y0, y1), (xm, x1, y0, y1)]
        else:
            kids = [(x0, x1, y0, ym), (x0, x1, ym, y1)]
        counts = []
        for i, kid in enumerate(kids):
            if i == len(kids) - 1:
                counts.append(c - sum(counts))
            else:
                counts.append(count_zeros(ctx, kid, F, m0))
        for kid, kc in zip(kids, counts):
            stack.append((kid, kc))
    zeros = []
    for z, o in found:
        z = snap_to_axes(z)
        if abs(z) <= R_max and abs(z) > 0 and all(abs(z - w) > 1e-8 * max(1.0, abs(z)) for w, _ in zeros):
            zeros.append((z, o))
    zeros.sort(key=lambda p: (round(abs(p[0]), 9), np.angle(p[0])))
    sig = np.array([z for z, _ in zeros], dtype=complex)
    if len(sig) >= 2:
        dmin = np.min(np.abs(sig[:, None] - sig[None, :]) + np.diag(np.full(len(sig), np.inf)))
        eps = float(dmin) / 3.0
    else:
        eps = float("inf") if not len(sig) else abs(sig[0]) / 3.0
    logs = []
    for z, _ in zeros:
        r = min(0.05, eps / 2 if np.isfinite(eps) else 0.05)
        d = derivative_at(F, z, r)
        logs.append((float(d.log_abs()) / np.log(10.0), float(d.angle())))
    return ZeroCatalogue(
        zeros=[Zero(complex(z), int(o), halfplane_of(z)) for z, o in zeros],
        epsilon=eps,
        R_max=float(R_max),
        simple_only=all(o == 1 for _, o in zeros),
        origin_order=m0,
        log_abs_derivative=logs,
    )


# asymptotics ------------------------------------------------------------------
@dataclass
class BranchFit:
    angle: float
    slope: complex
    offset: complex
    residuals: np.ndarray
    indices: np.ndarray


def branches(catalogue: ZeroCatalogue, tol: float = 0.1):
    """Group zeros into angular clusters (tolerance in radians) ordered by modulus."""
    groups = []
    for z in catalogue.zeros:
        th = np.angle(z.sigma)
        for g in groups:
            if abs(np.angle(np.exp(1j * (th - g[0])))) < tol:
                g[1].append(z.sigma)
                break
        else:
            groups.append([th, [z.sigma]])
    out = []
    for th, zs in groups:
        zs = sorted(zs, key=abs)
        out.append((float(np.angle(np.mean(np.exp(1j * np.angle(zs))))), np.array(zs)))
    return out


def asymptotic_fit(catalogue: ZeroCatalogue, model: str = "linear-in-k", angle: Optional[float] = None,
                   tol: float = 0.1, index_offset: int = 1, drop_first: int = 0):
    """Least-squares fit ``sigma_k = slope * k + offset`` per angular branch.

    Zeros on a branch are indexed ``k = index_offset, index_offset + 1, ...``
    by increasing modulus after dropping the first ``drop_first``.  When
    ``angle`` is given only the branch nearest that direction is fitted.
    """
    if model != "linear-in-k":
        raise ValueError(f"unknown model {model!r}")
    fits = []
    for th, zs in branches(catalogue, tol):
        if angle is not None and abs(np.angle(np.exp(1j * (th - angle)))) > tol:
            continue
        zs = zs[drop_first:]
        if len(zs) < 6:
            if angle is not None:
                raise TooFewZeros(f"branch at angle {th:.3f} has {len(zs)} zeros; need 6")
            continue
        k = np.arange(len(zs)) + index_offset + drop_first
        M = np.column_stack([k, np.ones_like(k)]).astype(complex)
        coef, *_ = np.linalg.lstsq(M, zs, rcond=None)
        fits.append(BranchFit(th, complex(coef[0]), complex(coef[1]), zs - M @ coef, k))
    if not fits:
        raise TooFewZeros("no branch with at least 6 zeros")
    return fits
