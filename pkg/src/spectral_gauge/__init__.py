"""Spectral diagnostics for linear evolution equations on a finite interval.

The package locates the zeros of the PDE characteristic determinant, builds
eigenfunction and adjoint eigenfunction pairs, estimates projection norms,
decides well-conditioning from the growth of spectral ratios and evaluates
solutions by residue series, contour quadrature and finite differences.
"""

from .charmat import CharContext, make_context
from .datum import Atom, Datum
from .problem import BoundaryMatrix, Problem, adjoint, classify, load_problem, parse_problem, validate

__all__ = [
    "Atom",
    "BoundaryMatrix",
    "CharContext",
    "Datum",
    "Problem",
    "adjoint",
    "classify",
    "load_problem",
    "make_context",
    "parse_problem",
    "validate",
]
__version__ = "0.1.0"
