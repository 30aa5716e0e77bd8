import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from spectral_gauge.datum import (
    Atom,
    Datum,
    bump_poly,
    datum_from_json,
    inner_product,
    moment_integral,
    sinpi,
)
from spectral_gauge.errors import DegreeOverflow, ProblemFileError

coef = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)
rate = st.complex_numbers(max_magnitude=8, allow_nan=False, allow_infinity=False)
atoms = st.builds(Atom, coef, st.integers(0, 4), rate)
data = st.lists(atoms, min_size=1, max_size=4).map(Datum)

X = np.linspace(0.0, 1.0, 41)


def _quad(fun):
    re = quad(lambda x: fun(x).real, 0, 1, limit=200, epsabs=1e-13)[0]
    im = quad(lambda x: fun(x).imag, 0, 1, limit=200, epsabs=1e-13)[0]
    return re + 1j * im


@given(data)
def test_reflect_and_conjugate(f):
    assert np.allclose(f.reflect()(X), f(1 - X), rtol=1e-10, atol=1e-10 * (1 + np.abs(f(X)).max()))
    assert np.allclose(f.conjugate_values()(X), np.conj(f(X)))


@given(data)
@settings(max_examples=40)
def test_derivative_against_finite_difference(f):
    h = 1e-5
    x = np.array([0.3, 0.7])
    fd = (f(x + h) - f(x - h)) / (2 * h)
    scale = 1 + np.abs(f.derivative(1)(x)).max()
    assert np.allclose(f.derivative(1)(x), fd, atol=1e-5 * scale)


@given(data, data)
@settings(max_examples=30, deadline=None)
def test_inner_product_matches_quadrature(f, g):
    exact = inner_product(f, g)
    num = _quad(lambda x: f(np.array(x)) * np.conj(g(np.array(x))))
    assert abs(exact - num) <= 1e-8 * max(1.0, f.norm() * g.norm())


@given(st.integers(0, 6), st.complex_numbers(max_magnitude=60, allow_nan=False, allow_infinity=False))
@settings(max_examples=60, deadline=None)
def test_moment_integral(d, lam):
    shift = max(lam.real, 0.0)
    got = complex(moment_integral(d, np.array(lam), np.array(shift)))
    want = _quad(lambda x: x**d * np.exp(lam * x - shift))
    assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


def test_half_transform_of_known_functions():
    rho = np.array([0.0, 1.5, 2.0 - 3.0j])
    one = Datum.polynomial([1.0])
    with np.errstate(all="ignore"):
        expect = np.where(rho == 0, 1.0, (1 - np.exp(-1j * rho)) / (1j * np.where(rho == 0, 1, rho)))
    assert np.allclose(one.half_transform(rho), expect)
    assert np.isclose(sinpi().norm() ** 2, 0.5)
    assert np.isclose(bump_poly().norm() ** 2, 1 / 630)


def test_boundary_vector_column_order():
    f = Datum.polynomial([1.0, 2.0, 3.0])  # 1 + 2x + 3x^2
    # (f''(0), f''(1), f'(0), f'(1), f(0), f(1))
    assert np.allclose(f.boundary_vector(3), [6, 6, 2, 8, 1, 6])


def test_degree_guard_and_json():
    with pytest.raises(DegreeOverflow):
        Atom(1.0, 65, 0.0)
    with pytest.raises(ValueError):
        Atom(1.0, -1, 0.0)
    f = bump_poly() + Datum.exponential(2j, 0.5)
    g = datum_from_json(f.to_json())
    assert np.allclose(f(X), g(X))
    assert np.allclose(datum_from_json("sinpi")(X), np.sin(np.pi * X))
    with pytest.raises(ProblemFileError):
        datum_from_json("nope")


def test_immutable():
    f = sinpi()
    with pytest.raises(AttributeError):
        f.atoms = ()
