"""Exact rational linear algebra over QQ."""

import logging
from collections.abc import Sequence
from fractions import Fraction

from sympy import QQ
from sympy.polys.matrices import DomainMatrix

logger = logging.getLogger(__name__)

type RationalMatrix = list[list[Fraction]]


def _to_domain(rows: Sequence[Sequence[Fraction | int]], ncols: int) -> DomainMatrix:
    data = [[QQ(int(Fraction(x).numerator), int(Fraction(x).denominator)) for x in row] for row in rows]
    return DomainMatrix(data, (len(data), ncols), QQ)


def _from_domain_entry(x: object) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))  # type: ignore[attr-defined]


def rref(rows: Sequence[Sequence[Fraction | int]], ncols: int) -> tuple[RationalMatrix, tuple[int, ...]]:
    """
    Reduce a rational matrix to reduced row echelon form.

    Args:
        rows: Matrix rows.
        ncols: Number of columns (needed when there are no rows).

    Returns:
        Tuple of (nonzero reduced rows, pivot column indices).
    """
    if not rows:
        return [], ()
    reduced, pivots = _to_domain(rows, ncols).rref()
    dense = reduced.to_list()
    out = [[_from_domain_entry(x) for x in dense[r]] for r in range(len(pivots))]
    return out, tuple(pivots)


def nullspace(rows: Sequence[Sequence[Fraction | int]], ncols: int) -> RationalMatrix:
    """
    Compute a basis of the right nullspace of a rational matrix.

    Each basis vector has a 1 in exactly one free column and 0 in the others.

    Args:
        rows: Matrix rows.
        ncols: Number of columns.

    Returns:
        List of nullspace basis vectors, ordered by free column.
    """
    reduced, pivots = rref(rows, ncols)
    pivot_set = set(pivots)
    basis: RationalMatrix = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = [Fraction(0)] * ncols
        vec[free] = Fraction(1)
        for row, pivot in zip(reduced, pivots, strict=True):
            vec[pivot] = -row[free]
        basis.append(vec)
    return basis


def solve(
    rows: Sequence[Sequence[Fraction | int]], rhs: Sequence[Fraction | int]
) -> tuple[list[Fraction], int] | None:
    """
    Solve A x = b exactly.

    Args:
        rows: Coefficient matrix A.
        rhs: Right-hand side b.

    Returns:
        Tuple of (one particular solution, dimension of the solution space),
        or None when the system is inconsistent.
    """
    ncols = len(rows[0]) if rows else 0
    augmented = [[*row, b] for row, b in zip(rows, rhs, strict=True)]
    reduced, pivots = rref(augmented, ncols + 1)
    if ncols in pivots:
        return None
    solution = [Fraction(0)] * ncols
    for row, pivot in zip(reduced, pivots, strict=True):
        solution[pivot] = row[ncols]
    return solution, ncols - len(pivots)


def inverse(matrix: Sequence[Sequence[Fraction | int]]) -> RationalMatrix:
    """
    Invert a square rational matrix.

    Raises:
        ValueError: If the matrix is singular.
    """
    n = len(matrix)
    augmented = [
        [*row, *(Fraction(int(i == j)) for j in range(n))] for i, row in enumerate(matrix)
    ]
    reduced, pivots = rref(augmented, 2 * n)
    if tuple(pivots[:n]) != tuple(range(n)) or len(pivots) < n:
        msg = "Matrix is singular"
        raise ValueError(msg)
    return [row[n:] for row in reduced[:n]]


def matmul(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> RationalMatrix:
    """Multiply two rational matrices."""
    inner = len(b)
    cols = len(b[0]) if b else 0
    return [
        [sum((row[k] * b[k][j] for k in range(inner)), Fraction(0)) for j in range(cols)]
        for row in a
    ]


def in_span(basis_rows: Sequence[Sequence[Fraction]], vec: Sequence[Fraction], ncols: int) -> bool:
    """Check whether a vector lies in the row span of the given rows."""
    before = len(rref(basis_rows, ncols)[1]) if basis_rows else 0
    after = len(rref([*basis_rows, vec], ncols)[1])
    return after == before
