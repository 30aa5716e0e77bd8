"""Overflow-safe complex values carried as ``mantissa * exp(offset)``.

Entries of the characteristic matrices grow like ``exp(|rho|)``; every
quantity that can get that large is passed around as a :class:`ScaledComplex`
and only converted to a plain complex number at the very end.
"""

from __future__ import annotations

import numpy as np

MAX_PLAIN_EXPONENT = 700.0


class ScaledComplex:
    """Complex value (or array of values) ``m * exp(s)`` with real ``s``.

    After normalisation ``1 <= |m| < e`` or ``m == 0`` (with ``s == 0``).
    Works elementwise on numpy arrays of matching shape.
    """

    __slots__ = ("m", "s")

    def __init__(self, m, s=0.0, normalize=True):
        m = np.asarray(m, dtype=complex)
        s = np.broadcast_to(np.asarray(s, dtype=float), m.shape).copy()
        if normalize:
            m, s = _normalize(m, s)
        self.m = m
        self.s = s

    @classmethod
    def from_exp(cls, z, coeff=1.0):
        """``coeff * exp(z)`` without ever forming ``exp(z)``."""
        z = np.asarray(z, dtype=complex)
        return cls(np.asarray(coeff, dtype=complex) * np.exp(1j * z.imag), z.real)

    @property
    def shape(self):
        return self.m.shape

    def __getitem__(self, idx):
        return ScaledComplex(self.m[idx], self.s[idx], normalize=False)

    def __mul__(self, other):
        if isinstance(other, ScaledComplex):
            return ScaledComplex(self.m * other.m, self.s + other.s)
        return ScaledComplex(self.m * np.asarray(other, dtype=complex), self.s)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ScaledComplex):
            with np.errstate(divide="ignore", invalid="ignore"):
                return ScaledComplex(self.m / other.m, self.s - other.s)
        with np.errstate(divide="ignore", invalid="ignore"):
            return ScaledComplex(self.m / np.asarray(other, dtype=complex), self.s)

    def __neg__(self):
        return ScaledComplex(-self.m, self.s, normalize=False)

    def __add__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex(other)
        s = np.maximum(self.s, other.s)
        m = self.m * np.exp(self.s - s) + other.m * np.exp(other.s - s)
        return ScaledComplex(m, s)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, ScaledComplex):
            other = ScaledComplex(other)
        return self + (-other)

    def conj(self):
        return ScaledComplex(np.conj(self.m), self.s, normalize=False)

    def log_abs(self):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.m)) + self.s

    def angle(self):
        return np.angle(self.m)

    def to_complex(self):
        if np.any(self.s > MAX_PLAIN_EXPONENT):
            raise OverflowError(
                f"scaled value exp({float(np.max(self.s)):.1f}) too large for a plain complex"
            )
        return self.m * np.exp(self.s)

    def __complex__(self):
        return complex(self.to_complex())

    def __repr__(self):
        return f"ScaledComplex(m={self.m!r}, s={self.s!r})"


def _normalize(m, s):
    a = np.abs(m)
    nz = a > 0
    k = np.zeros_like(s)
    with np.errstate(divide="ignore"):
        k[nz] = np.floor(np.log(a[nz]))
    # two half-steps so subnormal mantissas do not meet exp(-k) = inf
    half = np.floor(0.5 * k)
    m = np.where(nz, m * np.exp(-half) * np.exp(half - k), 0.0)
    s = np.where(nz, s + k, 0.0)
    # guard against floor rounding at |m| ~ e
    big = np.abs(m) >= np.e
    m = np.where(big, m / np.e, m)
    s = np.where(big, s + 1.0, s)
    return m, s


def scaled_sum(terms):
    """Sum an iterable of ScaledComplex values of equal shape."""
    terms = list(terms)
    if not terms:
        return ScaledComplex(0.0)
    s = np.max([t.s for t in terms], axis=0)
    m = sum(t.m * np.exp(t.s - s) for t in terms)
    return ScaledComplex(m, s)


def scaled_det(m, s_rows):
    """Determinant of ``diag(exp(s_rows)) @ m`` for stacked matrices.

    ``m`` has shape (..., k, k) and holds row-normalised entries; ``s_rows`` has
    shape (..., k).  numpy's LU (partial pivoting) does the elimination.
    """
    m = np.asarray(m, dtype=complex)
    if m.shape[-1] == 0:
        return ScaledComplex(np.ones(m.shape[:-2], dtype=complex))
    d = np.linalg.det(m)
    return ScaledComplex(d, np.sum(s_rows, axis=-1))


def scaled_sum_axis(x: ScaledComplex, axis=-1) -> ScaledComplex:
    """Sum a ScaledComplex array along one axis."""
    s = np.max(x.s, axis=axis, keepdims=True)
    s_safe = np.where(np.isfinite(s), s, 0.0)
    m = np.sum(x.m * np.exp(x.s - s_safe), axis=axis)
    return ScaledComplex(m, np.squeeze(s_safe, axis=axis))


def ratio(num: ScaledComplex, den: ScaledComplex):
    """Plain complex ``num / den``; safe as long as the quotient is moderate."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return num.m / den.m * np.exp(num.s - den.s)
