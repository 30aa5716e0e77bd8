import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_gauge.charmat import (
    CharContext,
    adjoint_context,
    char_det_S,
    char_matrix_S,
    cofactors,
    make_context,
    pde_char_det,
    pde_char_matrix,
    zeta_all,
    zeta_both,
)
from spectral_gauge.conditioning import delta_bracket, blowup_points
from spectral_gauge.datum import bump_poly
from spectral_gauge.presets import ex3_matrix, ex4_matrix
from spectral_gauge.problem import validate

OMEGA = np.exp(2j * np.pi / 3)
rhos = st.builds(complex, st.floats(-12, 12), st.floats(-12, 12)).filter(lambda z: abs(z) > 0.5)
contexts = st.sampled_from([
    make_context(ex3_matrix(0.0)),
    make_context(ex3_matrix(-0.5)),
    make_context(ex4_matrix(2.0)),
    make_context(validate([[0, 0, 1, 0], [0, 0, 0, 1]])),
])


@given(contexts, rhos)
@settings(max_examples=80, deadline=None)
def test_expansion_matches_plain_determinant(ctx, rho):
    M = pde_char_matrix(ctx, np.array(rho)).to_complex()
    want = np.linalg.det(M)
    got = complex(pde_char_det(ctx, np.array(rho)).to_complex())
    scale = np.prod(np.max(np.abs(M), axis=1))
    assert abs(got - want) <= 1e-12 * scale


@given(contexts, rhos)
@settings(max_examples=60, deadline=None)
def test_cofactors_invert_the_matrix(ctx, rho):
    r = np.array(rho)
    M = pde_char_matrix(ctx, r).to_complex()
    C = cofactors(ctx, r).to_complex()
    d = complex(pde_char_det(ctx, r).to_complex())
    # M adj(M) = det(M) I with adj = C^T
    P = M @ C.T
    scale = np.max(np.abs(M)) * np.max(np.abs(C)) * ctx.n
    assert np.allclose(P, d * np.eye(ctx.n), atol=1e-12 * scale)


def test_robin_conditions_use_the_elimination_path():
    A = validate([[1, 0, 1, 0], [0, 0, 0, 1]])  # u'(0) + u(0) = 0, u(1) = 0
    ctx = make_context(A)
    assert ctx.column_orders is None and ctx.expansion is None
    rho = np.array(2.3 - 0.7j)
    M = pde_char_matrix(ctx, rho).to_complex()
    assert np.isclose(complex(pde_char_det(ctx, rho).to_complex()), np.linalg.det(M), rtol=1e-12)


def test_uncoupled_zeros_match_the_exponential_polynomial():
    from spectral_gauge.spectrum import locate_zeros

    ctx = make_context(ex3_matrix(0.0))
    for z in locate_zeros(ctx, 30.0).zeros:
        s = z.sigma
        terms = np.array([np.exp(1j * s), OMEGA * np.exp(1j * OMEGA * s), OMEGA**2 * np.exp(1j * OMEGA**2 * s)])
        assert abs(terms.sum()) <= 1e-12 * np.abs(terms).max()


def test_operator_determinant_shares_the_zeros():
    from spectral_gauge.spectrum import locate_zeros

    ctx = make_context(ex3_matrix(-0.5))
    for z in locate_zeros(ctx, 25.0).zeros:
        d = char_det_S(ctx, np.array(z.sigma))
        rows = np.max(char_matrix_S(ctx, np.array(z.sigma)).log_abs(), axis=-1)
        assert d.log_abs() - rows.sum() < np.log(1e-13)


def test_pseudoperiodic_determinant_along_the_critical_ray():
    # along arg rho = pi/6 the naive determinant cancels catastrophically for
    # beta = 2; the exponential-sum expansion keeps full relative accuracy.
    ctx = make_context(ex4_matrix(2.0))
    for k in range(1, 31):
        _, rho = blowup_points(k)
        d = complex(pde_char_det(ctx, np.array(rho)).to_complex())
        assert abs(d / delta_bracket(2.0, rho) + 0.5) < 1e-12


def test_large_arguments_stay_finite():
    ctx = make_context(ex3_matrix(-0.5))
    rho = np.array([3000.0 * np.exp(1j * t) for t in np.linspace(0.1, 6.0, 7)])
    d = pde_char_det(ctx, rho)
    assert np.all(np.isfinite(d.log_abs()))
    z = zeta_all(ctx, rho, bump_poly())
    assert np.all(np.isfinite(z.log_abs()))


def test_zeta_ratio_is_basis_invariant():
    ctx = make_context(ex3_matrix(-0.5))
    G = np.array([[2.0, 0.3, 0.0], [0.0, -1.5, 1.0], [0.5, 0.0, 1.0]])
    alt = CharContext(ctx.A, tuple(map(tuple, G @ ctx.astar_array)), ctx.a)
    f = bump_poly()
    for rho in (3.1 + 2.0j, -4.2 + 0.9j, 1.7 - 5.5j):
        r = np.array(rho)
        for a, b in zip(zeta_both(ctx, r, f), zeta_both(alt, r, f)):
            ra = complex((a / pde_char_det(ctx, r)).to_complex())
            rb = complex((b / pde_char_det(alt, r)).to_complex())
            assert np.isclose(ra, rb, rtol=1e-10)


def test_adjoint_context_round_trip():
    ctx = make_context(ex4_matrix(1.8))
    back = adjoint_context(adjoint_context(ctx))
    rho = np.array(2.2 + 1.1j)
    assert np.isclose(complex(pde_char_det(back, rho).to_complex()),
                      complex(pde_char_det(ctx, rho).to_complex()), rtol=1e-12)
