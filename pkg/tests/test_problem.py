import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_gauge.datum import Datum
from spectral_gauge.errors import BadShape, NotRREF, ProblemFileError, RankDeficient
from spectral_gauge.presets import ex3_matrix, ex4_matrix
from spectral_gauge.problem import (
    adjoint,
    boundary_form_matrix,
    classify,
    column_index,
    column_order,
    compatibility_residual,
    green_residual,
    parse_direction,
    parse_problem,
    project_onto_domain,
    rref,
    validate,
)

DIRICHLET = [[0, 0, 1, 0], [0, 0, 0, 1]]


def _poly(rng, deg=7):
    return Datum.polynomial(list(rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)))


def test_column_layout():
    n = 3
    assert [column_order(n, c) for c in range(6)] == [2, 2, 1, 1, 0, 0]
    assert column_index(n, 0, 1) == 5 and column_index(n, 2, 0) == 0


@pytest.mark.parametrize("raw, err", [
    ([[1, 0]], BadShape),
    ([[1, 0, 0], [0, 1, 0]], BadShape),
    ([[0, 0, 1, 0], [0, 0, 2, 0]], RankDeficient),
    ([[0, 0, 2, 0], [0, 0, 0, 1]], NotRREF),
    ([[0, 0, 0, 1], [0, 0, 1, 0]], NotRREF),
    ([[1, 0, 1, 0], [0, 0, 1, 1]], NotRREF),
    ([[1, np.nan, 0, 0], [0, 0, 1, 0]], BadShape),
])
def test_validate_rejects(raw, err):
    with pytest.raises(err):
        validate(raw)


def test_classification_of_named_families():
    c = classify(ex3_matrix(-0.5))
    assert c.nonRobin and c.symmetric
    assert [r.kind for r in c.rows] == ["coupled", "left-only", "right-only"]
    assert c.coupling_constants[0] == -0.5
    robin = validate([[1, 0, 0, 0], [0, 0, 1, 2]])  # u'(0) = 0, u(0) + 2 u(1) = 0 is non-Robin
    assert classify(robin).nonRobin
    mixed = validate([[1, 0, 1, 0], [0, 1, 0, 0]])  # u'(0) + u(0) mixes orders
    assert not classify(mixed).nonRobin


def test_adjoint_of_self_adjoint_problems():
    assert adjoint(validate(DIRICHLET)).array.tolist() == np.array(DIRICHLET, dtype=float).tolist()
    per = ex4_matrix(-1.0)
    assert np.allclose(adjoint(per).array, per.array)
    # adjoint twice returns the original domain
    for A in (ex3_matrix(0.3), ex4_matrix(2.0)):
        assert np.allclose(adjoint(adjoint(A)).array, A.array)


def test_boundary_form_reproduces_integration_by_parts():
    rng = np.random.default_rng(3)
    for n in (2, 3, 4):
        F = boundary_form_matrix(n)
        u, v = _poly(rng), _poly(rng)
        Su = u.derivative(n).scale((-1j) ** n)
        Sv = v.derivative(n).scale((-1j) ** n)
        from spectral_gauge.datum import inner_product

        lhs = inner_product(Su, v) - inner_product(u, Sv)
        rhs = (-1j) ** n * u.boundary_vector(n) @ F @ np.conj(v.boundary_vector(n))
        assert abs(lhs - rhs) < 1e-10 * (1 + abs(lhs))


@given(st.floats(-0.95, 0.95), st.integers(0, 2**32 - 1), st.booleans())
@settings(max_examples=50, deadline=None)
def test_green_identity_on_domains(beta, seed, pseudo):
    rng = np.random.default_rng(seed)
    A = ex4_matrix(2 + beta) if pseudo else ex3_matrix(beta)
    u = project_onto_domain(A, _poly(rng))
    v = project_onto_domain(adjoint(A), _poly(rng))
    assert compatibility_residual(A, u) < 1e-10 * (1 + np.abs(u.boundary_vector(3)).max())
    assert green_residual(A, u, v) < 1e-9


def test_green_identity_fails_off_the_adjoint_domain():
    rng = np.random.default_rng(7)
    A = ex3_matrix(-0.5)
    u = project_onto_domain(A, _poly(rng))
    v = project_onto_domain(A, _poly(rng))  # the operator's own domain, not the adjoint's
    assert green_residual(A, u, v) > 1e-4


def test_rref_matches_reference():
    m = np.array([[2.0, 4.0, 2.0], [1.0, 3.0, 0.0]])
    assert np.allclose(rref(m), [[1, 0, 3], [0, 1, -1]])


def test_directions():
    assert parse_direction("+i") == 1j and parse_direction("-i") == -1j and parse_direction(1j) == 1j
    with pytest.raises(ValueError):
        parse_direction("2i")


def _problem_text(**over):
    obj = {"n": 2, "A": DIRICHLET, "a": "+i", "q0": "sinpi"}
    obj.update(over)
    return json.dumps(obj, indent=1)


def test_parse_problem_roundtrip_and_errors():
    p = parse_problem(_problem_text())
    assert p.n == 2 and p.a == 1j and p.T == 1.0
    with pytest.raises(ProblemFileError, match="missing field"):
        parse_problem(json.dumps({"n": 2}))
    with pytest.raises(ProblemFileError) as exc:
        parse_problem(_problem_text(A=[[0, 0, 2, 0], [0, 0, 0, 1]]))
    assert exc.value.line == 3
    with pytest.raises(ProblemFileError, match="direction"):
        parse_problem(_problem_text(a="up"))
    with pytest.raises(ProblemFileError, match="JSON"):
        parse_problem("{")
    with pytest.raises(ProblemFileError, match="'T'"):
        parse_problem(_problem_text(T=-1))


def test_adjoint_exact_for_tiny_coupling():
    """A small coupling puts 1/beta in the adjoint; rounding noise must not be amplified."""
    beta = 4.263000467191721e-08
    As = adjoint(ex3_matrix(beta)).array
    assert As[0, 3] == pytest.approx(1 / beta, rel=1e-12)
    assert np.count_nonzero(As) == 4
