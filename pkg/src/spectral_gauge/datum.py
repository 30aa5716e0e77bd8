"""Exponential-polynomial functions on [0, 1].

A :class:`Datum` is a finite sum of atoms ``c * x**d * exp(mu * x)``.  The
class is closed under differentiation, the reflection ``x -> 1 - x`` and
conjugation of values, and the integrals we need (half-line transforms and
L2 inner products) all have closed forms built on

    I_d(lam) = int_0^1 x**d exp(lam * x) dx.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DegreeOverflow, ProblemFileError
from .scaled import ScaledComplex

MAX_DEGREE = 64


@dataclass(frozen=True)
class Atom:
    """``c * x**d * exp(mu * x)``."""

    c: complex
    d: int
    mu: complex

    def __post_init__(self):
        if self.d < 0 or int(self.d) != self.d:
            raise ValueError(f"atom degree must be a nonnegative integer, got {self.d}")
        if self.d > MAX_DEGREE:
            raise DegreeOverflow(f"atom degree {self.d} exceeds {MAX_DEGREE}")


class Datum:
    """Finite sum of :class:`Atom` terms. Immutable."""

    __slots__ = ("atoms", "_c", "_d", "_mu")

    def __init__(self, atoms=()):
        atoms = tuple(a if isinstance(a, Atom) else Atom(*a) for a in atoms)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "_c", np.array([a.c for a in atoms], dtype=complex))
        object.__setattr__(self, "_d", np.array([a.d for a in atoms], dtype=int))
        object.__setattr__(self, "_mu", np.array([a.mu for a in atoms], dtype=complex))

    def __setattr__(self, name, value):
        raise AttributeError("Datum is immutable")

    # construction helpers -------------------------------------------------
    @classmethod
    def zero(cls):
        return cls(())

    @classmethod
    def polynomial(cls, coeffs):
        """``sum_k coeffs[k] * x**k``."""
        return cls(Atom(complex(c), k, 0j) for k, c in enumerate(coeffs) if c != 0)

    @classmethod
    def exponential(cls, mu, c=1.0):
        return cls([Atom(complex(c), 0, complex(mu))])

    # algebra --------------------------------------------------------------
    def __add__(self, other):
        return Datum(self.atoms + other.atoms).simplify()

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, s):
        s = complex(s)
        return Datum(Atom(a.c * s, a.d, a.mu) for a in self.atoms)

    def __mul__(self, s):
        return self.scale(s)

    __rmul__ = __mul__

    def simplify(self):
        """Merge atoms with identical (d, mu) and drop exact zeros."""
        merged = {}
        for a in self.atoms:
            key = (a.d, a.mu)
            merged[key] = merged.get(key, 0j) + a.c
        return Datum(Atom(c, d, mu) for (d, mu), c in merged.items() if c != 0)

    def __len__(self):
        return len(self.atoms)

    def __repr__(self):
        return f"Datum({list(self.atoms)!r})"

    # calculus -------------------------------------------------------------
    def derivative(self, m=1):
        if m < 0 or m > MAX_DEGREE:
            raise DegreeOverflow(f"derivative order {m} outside [0, {MAX_DEGREE}]")
        f = self
        for _ in range(m):
            out = []
            for a in f.atoms:
                if a.d > 0:
                    out.append(Atom(a.c * a.d, a.d - 1, a.mu))
                if a.mu != 0:
                    out.append(Atom(a.c * a.mu, a.d, a.mu))
            f = Datum(out).simplify()
        return f

    def reflect(self):
        """The function ``x -> f(1 - x)``."""
        out = []
        for a in self.atoms:
            base = a.c * np.exp(a.mu)
            for k in range(a.d + 1):
                out.append(Atom(base * comb(a.d, k) * (-1) ** k, k, -a.mu))
        return Datum(out).simplify()

    def conjugate_values(self):
        """The function ``x -> conj(f(x))``."""
        return Datum(Atom(np.conj(a.c), a.d, np.conj(a.mu)) for a in self.atoms)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for a in self.atoms:
            out = out + a.c * x**a.d * np.exp(a.mu * x)
        return out

    def boundary_vector(self, n):
        """``(f^(n-1)(0), f^(n-1)(1), ..., f(0), f(1))``."""
        out = np.zeros(2 * n, dtype=complex)
        for p in range(n):
            g = self.derivative(p)
            col = 2 * (n - 1 - p)
            out[col] = g(0.0)
            out[col + 1] = g(1.0)
        return out

    # integrals ------------------------------------------------------------
    def half_transform(self, rho):
        """``int_0^1 exp(-i rho x) f(x) dx`` as plain complex (array-valued in rho)."""
        return self.half_transform_scaled(rho).to_complex()

    def half_transform_scaled(self, rho):
        rho = np.asarray(rho, dtype=complex)
        if not self.atoms:
            return ScaledComplex(np.zeros(rho.shape, dtype=complex))
        lam = self._mu.reshape((-1,) + (1,) * rho.ndim) - 1j * rho[None, ...]
        shift = np.max(np.maximum(lam.real, 0.0), axis=0)
        total = np.zeros(rho.shape, dtype=complex)
        for idx, a in enumerate(self.atoms):
            total = total + a.c * moment_integral(a.d, lam[idx], shift)
        return ScaledComplex(total, shift)

    def norm(self):
        return float(np.sqrt(max(inner_product(self, self).real, 0.0)))

    # serialisation --------------------------------------------------------
    def to_json(self):
        return [
            {"c": [a.c.real, a.c.imag], "d": a.d, "mu": [a.mu.real, a.mu.imag]}
            for a in self.atoms
        ]


def moment_integral(d, lam, shift=None):
    """``exp(-shift) * int_0^1 x**d exp(lam x) dx`` elementwise in ``lam``.

    Large ``|lam|`` uses the forward recurrence in ``d`` (stable when
    ``|lam| > d``); small ``|lam|`` uses the series
    ``exp(lam) * sum_m (-lam)**m d! / (d+m+1)!`` which has no cancellation
    at the removable point ``lam = 0``.
    """
    lam = np.asarray(lam, dtype=complex)
    if shift is None:
        shift = np.maximum(lam.real, 0.0)
    shift = np.broadcast_to(np.asarray(shift, dtype=float), lam.shape)
    out = np.empty(lam.shape, dtype=complex)
    e_lam = np.exp(lam - shift)
    big = np.abs(lam) > d + 1
    if np.any(big):
        lb = lam[big]
        eb = e_lam[big]
        e0 = np.exp(-shift[big])
        val = (eb - e0) / lb
        for k in range(1, d + 1):
            val = (eb - k * val) / lb
        out[big] = val
    small = ~big
    if np.any(small):
        ls = lam[small]
        term = np.full(ls.shape, 1.0 / (d + 1), dtype=complex)
        acc = term.copy()
        for m in range(1, 600):
            term = term * (-ls) / (d + m + 1)
            acc = acc + term
            if np.all(np.abs(term) <= 1e-18 * np.abs(acc)):
                break
        out[small] = e_lam[small] * acc
    return out


def inner_product(f: Datum, g: Datum) -> complex:
    """``int_0^1 f(x) conj(g(x)) dx`` in closed form."""
    total = 0j
    for a in f.atoms:
        for b in g.atoms:
            lam = a.mu + np.conj(b.mu)
            total += a.c * np.conj(b.c) * complex(moment_integral(a.d + b.d, np.array(lam), 0.0))
    return total


def derivative(f: Datum, m: int = 1) -> Datum:
    return f.derivative(m)


def reflect(f: Datum) -> Datum:
    return f.reflect()


def conjugate_values(f: Datum) -> Datum:
    return f.conjugate_values()


def boundary_vector(f: Datum, n: int):
    return f.boundary_vector(n)


def half_transform(f: Datum, rho):
    return f.half_transform(rho)


# presets ----------------------------------------------------------------
def sinpi() -> Datum:
    """sin(pi x) written as two exponentials."""
    return Datum([Atom(-0.5j, 0, 1j * np.pi), Atom(0.5j, 0, -1j * np.pi)])


def bump_poly() -> Datum:
    """x^2 (1 - x)^2 = x^2 - 2x^3 + x^4."""
    return Datum.polynomial([0, 0, 1, -2, 1])


NAMED_DATA = {"sinpi": sinpi, "bump-poly": bump_poly}


def datum_from_json(obj) -> Datum:
    """Decode a preset name or a list of ``{"c", "d", "mu"}`` atoms."""
    if isinstance(obj, str):
        if obj not in NAMED_DATA:
            raise ProblemFileError(f"unknown datum preset {obj!r}; known: {sorted(NAMED_DATA)}")
        return NAMED_DATA[obj]()
    if not isinstance(obj, list):
        raise ProblemFileError("datum must be a preset name or a list of atoms")
    atoms = []
    for i, item in enumerate(obj):
        try:
            c = complex(*item["c"])
            mu = complex(*item.get("mu", [0.0, 0.0]))
            d = item.get("d", 0)
            if not isinstance(d, int):
                raise TypeError("d must be an integer")
            atoms.append(Atom(c, d, mu))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProblemFileError(f"atom {i}: {exc}") from exc
    return Datum(atoms)
