"""Boundary coefficient matrices: validation, classification and adjoints.

Columns of an ``n x 2n`` boundary matrix are ordered highest derivative
first, left endpoint before right endpoint:

    (u^(n-1)(0), u^(n-1)(1), u^(n-2)(0), u^(n-2)(1), ..., u(0), u(1)).

Column ``c`` therefore holds derivative order ``n - 1 - c // 2`` at end
``c % 2`` (0 = left, 1 = right).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .datum import Datum, datum_from_json
from .errors import BadShape, DegenerateForm, NotRREF, ProblemFileError, RankDeficient

ZERO_TOL = 1e-12


def column_index(n: int, order: int, end: int) -> int:
    return 2 * (n - 1 - order) + end


def column_order(n: int, col: int) -> int:
    return n - 1 - col // 2


@dataclass(frozen=True)
class BoundaryMatrix:
    n: int
    rows: tuple
    pivots: tuple

    @property
    def array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float)

    def __eq__(self, other):
        if not isinstance(other, BoundaryMatrix):
            return NotImplemented
        return self.n == other.n and np.allclose(self.array, other.array, atol=ZERO_TOL, rtol=0)

    def __hash__(self):
        return hash((self.n, self.pivots))


@dataclass(frozen=True)
class RowClass:
    order: Optional[int]
    kind: Optional[str]  # "left-only" | "right-only" | "coupled"
    beta: float = 1.0


@dataclass(frozen=True)
class Classification:
    nonRobin: bool
    symmetric: bool
    rows: tuple = field(default_factory=tuple)

    @property
    def coupling_constants(self):
        return tuple(r.beta for r in self.rows)


def parse_direction(a) -> complex:
    """Accept "+i", "-i", "i", or a complex value +-1j."""
    if isinstance(a, str):
        key = a.replace(" ", "").lower()
        table = {"+i": 1j, "i": 1j, "-i": -1j}
        if key not in table:
            raise ValueError(f"direction coefficient must be '+i' or '-i', got {a!r}")
        return table[key]
    z = complex(a)
    if abs(z - 1j) < 1e-14:
        return 1j
    if abs(z + 1j) < 1e-14:
        return -1j
    raise ValueError(f"direction coefficient must be +i or -i, got {a!r}")


def format_direction(a: complex) -> str:
    return "+i" if a.imag > 0 else "-i"


def validate(raw) -> BoundaryMatrix:
    """Check that ``raw`` is an ``n x 2n`` rank-n RREF matrix with n >= 2."""
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise BadShape(f"boundary matrix is not a rectangular numeric array: {exc}") from exc
    if arr.ndim != 2:
        raise BadShape(f"boundary matrix must be 2-dimensional, got {arr.ndim} dimensions")
    n = arr.shape[0]
    if n < 2:
        raise BadShape(f"order n = {n}; need n >= 2")
    if arr.shape[1] != 2 * n:
        raise BadShape(f"matrix has {n} rows so needs {2 * n} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise BadShape(f"non-finite entry at row {bad[0]}, column {bad[1]}")
    arr = np.where(np.abs(arr) < ZERO_TOL, 0.0, arr)
    rank = np.linalg.matrix_rank(arr, tol=1e-10)
    if rank < n:
        for i in range(n):
            if np.linalg.matrix_rank(arr[: i + 1], tol=1e-10) < i + 1:
                raise RankDeficient(f"row {i} is zero or dependent on earlier rows; rank {rank} < {n}")
    pivots = []
    last = -1
    for i, row in enumerate(arr):
        p = int(np.flatnonzero(row)[0])
        if p <= last:
            raise NotRREF(f"row {i}: pivot column {p} does not lie right of previous pivot {last}")
        if abs(row[p] - 1.0) > ZERO_TOL:
            raise NotRREF(f"row {i}: pivot at column {p} equals {row[p]!r}, not 1")
        for k in range(n):
            if k != i and arr[k, p] != 0.0:
                raise NotRREF(f"column {p} (pivot of row {i}) has nonzero entry in row {k}")
        pivots.append(p)
        last = p
    return BoundaryMatrix(n, tuple(tuple(float(v) for v in r) for r in arr), tuple(pivots))


def rref(mat, tol=1e-12) -> np.ndarray:
    """Reduced row-echelon form with partial pivoting; tiny entries cleaned."""
    m = np.array(mat, dtype=float)
    rows, cols = m.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(m[r:, c])))
        if abs(m[p, c]) < 1e-10:
            m[r:, c] = 0.0
            continue
        m[[r, p]] = m[[p, r]]
        m[r] = m[r] / m[r, c]
        for k in range(rows):
            if k != r:
                m[k] = m[k] - m[k, c] * m[r]
        r += 1
    m[np.abs(m) < tol] = 0.0
    return m


def classify(A: BoundaryMatrix) -> Classification:
    n = A.n
    arr = A.array
    rows = []
    nonrobin = True
    for i, row in enumerate(arr):
        nz = np.flatnonzero(row)
        orders = {column_order(n, int(c)) for c in nz}
        if len(orders) != 1:
            nonrobin = False
            rows.append(RowClass(None, None, 1.0))
            continue
        (m,) = orders
        ends = {int(c) % 2 for c in nz}
        if ends == {0}:
            rows.append(RowClass(m, "left-only", 1.0))
        elif ends == {1}:
            rows.append(RowClass(m, "right-only", 1.0))
        else:
            rows.append(RowClass(m, "coupled", float(row[column_index(n, m, 1)])))
    symmetric = nonrobin and _symmetry_condition(A, rows)
    return Classification(nonrobin, symmetric, tuple(rows))


def _symmetry_condition(A: BoundaryMatrix, rows) -> bool:
    n = A.n
    pivset = set(A.pivots)
    for p in A.pivots:
        order = column_order(n, p)
        end = p % 2
        if column_index(n, n - 1 - order, 1 - end) in pivset:
            return False
    by_order = {r.order: r for r in rows if r.kind == "coupled"}
    for m, r in by_order.items():
        partner = by_order.get(n - 1 - m)
        if partner is not None and abs(partner.beta - r.beta) > 1e-12:
            return False
    return True


def boundary_form_matrix(n: int) -> np.ndarray:
    """Matrix F with ``<Su,v> - <u,Sv> = (-i)^n * U^T F conj(V)``.

    ``U``, ``V`` are boundary vectors of ``u``, ``v`` in column order.  The
    entries come from integrating ``u^(n) conj(v)`` by parts n times.
    """
    F = np.zeros((2 * n, 2 * n))
    for m in range(n):
        for end, sign in ((0, -1.0), (1, 1.0)):
            F[column_index(n, n - 1 - m, end), column_index(n, m, end)] = (-1) ** m * sign
    return F


def _rref_null_space(A: BoundaryMatrix) -> np.ndarray:
    """Null-space basis read off the RREF: one vector per free column.

    Unlike an SVD basis this has no rounding noise in entries that are
    exactly zero, which matters when the adjoint's RREF has entries of
    size ``1/beta^2`` for small couplings.
    """
    arr = A.array
    cols = arr.shape[1]
    free = [c for c in range(cols) if c not in A.pivots]
    N = np.zeros((cols, len(free)))
    for k, c in enumerate(free):
        N[c, k] = 1.0
        for i, pc in enumerate(A.pivots):
            N[pc, k] = -arr[i, c]
    return N


def adjoint(A: BoundaryMatrix) -> BoundaryMatrix:
    """Boundary coefficient matrix of the adjoint operator, in RREF."""
    n = A.n
    N = _rref_null_space(A)
    if N.shape[1] != n:
        raise DegenerateForm(f"null space of A has dimension {N.shape[1]}, expected {n}")
    rows = N.T @ boundary_form_matrix(n)
    if np.linalg.matrix_rank(rows, tol=1e-10) != n:
        raise DegenerateForm("adjoint rows are rank deficient")
    return validate(rref(rows))


def compatibility_residual(A: BoundaryMatrix, q0: Datum) -> float:
    v = q0.boundary_vector(A.n)
    return float(np.max(np.abs(A.array @ v)))


# problem files ------------------------------------------------------------
@dataclass(frozen=True)
class Problem:
    A: BoundaryMatrix
    a: complex
    q0: Datum
    T: float = 1.0

    @property
    def n(self):
        return self.A.n


def _line_of(text: str, key: str) -> Optional[int]:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if m is None:
        return None
    return text.count("\n", 0, m.start()) + 1


def parse_problem(text: str) -> Problem:
    """Parse a problem definition from JSON text."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from exc
    if not isinstance(obj, dict):
        raise ProblemFileError("top level must be an object", 1)
    for key in ("n", "A", "a", "q0"):
        if key not in obj:
            raise ProblemFileError(f"missing field {key!r}", 1)
    n = obj["n"]
    if not isinstance(n, int) or n < 2:
        raise ProblemFileError(f"field 'n' must be an integer >= 2, got {n!r}", _line_of(text, "n"))
    line_A = _line_of(text, "A")
    raw = obj["A"]
    if not isinstance(raw, list) or len(raw) != n:
        raise ProblemFileError(f"field 'A' must have {n} rows", line_A)
    for i, row in enumerate(raw):
        if not isinstance(row, list) or len(row) != 2 * n:
            got = len(row) if isinstance(row, list) else type(row).__name__
            raise ProblemFileError(f"row {i} of 'A' must have {2 * n} entries, got {got}", line_A)
    try:
        A = validate(raw)
    except (BadShape, NotRREF, RankDeficient) as exc:
        raise ProblemFileError(f"field 'A': {exc}", line_A) from exc
    try:
        a = parse_direction(obj["a"])
    except ValueError as exc:
        raise ProblemFileError(str(exc), _line_of(text, "a")) from exc
    try:
        q0 = datum_from_json(obj["q0"])
    except ProblemFileError as exc:
        raise ProblemFileError(str(exc), _line_of(text, "q0")) from exc
    T = obj.get("T", 1.0)
    if not isinstance(T, (int, float)) or T <= 0:
        raise ProblemFileError(f"field 'T' must be positive, got {T!r}", _line_of(text, "T"))
    return Problem(A, a, q0, float(T))


def load_problem(path) -> Problem:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read())


def project_onto_domain(A: BoundaryMatrix, f: Datum) -> Datum:
    """Add the minimal-norm polynomial of degree ``2n - 1`` making ``f`` satisfy ``A``.

    The correction's coefficients solve ``A B c = -A f_bv`` where ``B`` maps
    monomial coefficients to boundary values; useful for building random
    compatible data.
    """
    n = A.n
    basis = [Datum.polynomial([0.0] * d + [1.0]) for d in range(2 * n)]
    B = np.column_stack([b.boundary_vector(n) for b in basis])
    rhs = -(A.array @ f.boundary_vector(n))
    c, *_ = np.linalg.lstsq(A.array @ B, rhs, rcond=None)
    return (f + Datum.polynomial(list(c))).simplify()


def green_residual(A: BoundaryMatrix, u: Datum, v: Datum) -> float:
    """``|<S u, v> - <u, S* v>|`` relative to ``||S u|| ||v|| + ||u|| ||S* v||``.

    ``u`` should satisfy the rows of ``A`` and ``v`` those of ``adjoint(A)``;
    S acts as ``(-i d/dx)^n`` on both.
    """
    from .datum import inner_product

    n = A.n
    Su = u.derivative(n).scale((-1j) ** n)
    Sv = v.derivative(n).scale((-1j) ** n)
    diff = inner_product(Su, v) - inner_product(u, Sv)
    scale = Su.norm() * v.norm() + u.norm() * Sv.norm()
    return float(abs(diff) / scale) if scale > 0 else float(abs(diff))
