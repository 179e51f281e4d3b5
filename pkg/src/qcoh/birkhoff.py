"""Birkhoff factorization of I-functions: scalar (J from I) and matrix (S = Q R) forms."""

import logging
from dataclasses import dataclass

from .cohomology import CohomologyRing
from .errors import WindowTooSmall
from .formal import (
    BiLaurent,
    CoefficientMatrix,
    CohValue,
    MatrixSeries,
    QSeries,
    ScalarSeries,
    add_degrees,
    degrees_in_box,
    in_box,
    sub_degrees,
)
from .types import Multidegree, Window

logger = logging.getLogger(__name__)


@dataclass
class FundamentalSolution:
    """
    The fundamental solution built from theta-derivatives of I.

    Attributes:
        ring: Cohomology ring of the geometry.
        rows: Row a is theta^(basis monomial a) applied to I, prefactor kept.
        matrix: Basis components of the rows with the prefactor stripped.
    """

    ring: CohomologyRing
    rows: list[QSeries]
    matrix: MatrixSeries

    @property
    def box(self) -> tuple[int, ...]:
        return self.matrix.box

    @property
    def window(self) -> Window:
        return self.matrix.window


@dataclass
class BirkhoffPair:
    """
    S = Q R with Q holding only hbar >= 0 and R only hbar < 0 beyond the identity.

    Attributes:
        Q: Positive part, Q(q=0) = Id.
        R: Negative part, R(q=0) = Id.
    """

    Q: MatrixSeries  # noqa: N815
    R: MatrixSeries  # noqa: N815


@dataclass
class ScalarBirkhoff:
    """
    Output of the scalar factorization J = sum_a c_a theta^a I.

    Attributes:
        J: The J-function, prefactor-flagged.
        coeffs: c_a per basis monomial name.
    """

    J: QSeries  # noqa: N815
    coeffs: dict[str, ScalarSeries]


def _check_input(series: QSeries) -> None:
    zero = (0,) * len(series.box)
    if not series.prefactor:
        msg = "Birkhoff factorization expects a prefactor-flagged I-function"
        raise ValueError(msg)
    if series.coefficient(zero) != CohValue.unit(series.ring, series.window):
        msg = "I-function must have constant coefficient 1"
        raise ValueError(msg)


def _check_window(values: list[BiLaurent], window: Window, what: str) -> None:
    for value in values:
        low = value.min_hbar()
        if low is not None and low <= window.hbar_min:
            msg = (
                f"{what} reaches hbar^{low} at the window edge {window.hbar_min}; "
                "widen the hbar window"
            )
            raise WindowTooSmall(msg)


def theta_derivatives(series: QSeries) -> list[QSeries]:
    """Apply the theta monomial matching each basis element, in basis order."""
    return [series.theta_monomial(m) for m in series.ring.basis]


def birkhoff_scalar(series: QSeries) -> ScalarBirkhoff:
    """
    Remove every hbar >= 0 term from I by combining its theta-derivatives.

    Degrees are processed by total degree then lex. At degree d the
    nonnegative part P = sum_g P_g e_g is cancelled by subtracting
    sum_g P_g q^d theta^g I, which changes only degrees beyond d.

    Args:
        series: Prefactor-flagged I-function with constant coefficient 1.

    Returns:
        J and the coefficients c_a.

    Raises:
        WindowTooSmall: If an I coefficient reaches the lower hbar edge.
    """
    _check_input(series)
    ring, box, window = series.ring, series.box, series.window
    _check_window([c for v in series.coeffs.values() for c in v.comps], window, "I-function")

    derivatives = theta_derivatives(series)
    values: dict[Multidegree, CohValue] = dict(series.coeffs)
    zero = (0,) * len(box)
    coeffs: list[dict[Multidegree, BiLaurent]] = [{} for _ in range(ring.dim)]
    coeffs[0][zero] = BiLaurent.const(1, window)

    for d in degrees_in_box(box)[1:]:
        value = values.get(d)
        if value is None:
            continue
        positive = value.nonnegative_hbar()
        if not positive:
            continue
        logger.debug("Eliminating hbar >= 0 part at degree %s", d)
        for g, part in enumerate(positive.comps):
            if not part:
                continue
            coeffs[g][d] = coeffs[g][d] - part if d in coeffs[g] else -part
            for e, dv in derivatives[g].coeffs.items():
                target = add_degrees(d, e)
                if not in_box(target, box):
                    continue
                term = dv * part
                values[target] = values[target] - term if target in values else -term

    result = series.like(values)
    for d, value in result.coeffs.items():
        if any(d) and value.nonnegative_hbar():
            msg = f"Residual hbar >= 0 part at degree {d}"
            raise WindowTooSmall(msg)
    logger.info("Scalar Birkhoff factorization done in box %s", box)
    return ScalarBirkhoff(
        J=result,
        coeffs={name: ScalarSeries(c, box, window) for name, c in zip(ring.basis_names, coeffs, strict=True)},
    )


def build_fundamental(series: QSeries) -> FundamentalSolution:
    """
    Stack the theta-derivatives of I into the fundamental solution matrix.

    Raises:
        ValueError: If the q = 0 slice is not the identity.
    """
    _check_input(series)
    rows = theta_derivatives(series)
    matrix = MatrixSeries.from_rows(rows)
    zero = (0,) * len(series.box)
    for a in range(series.ring.dim):
        for b in range(series.ring.dim):
            if matrix.entry(a, b).coefficient(zero) != int(a == b):
                msg = "Fundamental solution is not the identity at q = 0"
                raise ValueError(msg)
    return FundamentalSolution(series.ring, rows, matrix)


def _zero_matrix(n: int, window: Window) -> CoefficientMatrix:
    return [[BiLaurent({}, window) for _ in range(n)] for _ in range(n)]


def birkhoff_matrix(solution: FundamentalSolution) -> BirkhoffPair:
    """
    Factor S = Q R degree by degree.

    At degree d the defect D_d = S_d - sum_{0<e<d} Q_e R_{d-e} splits into
    its hbar >= 0 part (Q_d) and hbar < 0 part (R_d).

    Raises:
        WindowTooSmall: If an entry of S reaches the lower hbar edge.
    """
    matrix = solution.matrix
    n, box, window = matrix.size, matrix.box, matrix.window
    coefficients = matrix.coefficients()
    _check_window([c for m in coefficients.values() for row in m for c in row], window, "Fundamental solution")

    zero = (0,) * len(box)
    identity = _zero_matrix(n, window)
    for i in range(n):
        identity[i][i] = BiLaurent.const(1, window)
    q_parts: dict[Multidegree, CoefficientMatrix] = {zero: identity}
    r_parts: dict[Multidegree, CoefficientMatrix] = {zero: identity}

    for d in degrees_in_box(box)[1:]:
        defect = [list(row) for row in coefficients.get(d, _zero_matrix(n, window))]
        for e, q_e in q_parts.items():
            if e == zero or e == d or not in_box(e, d):
                continue
            r_f = r_parts.get(sub_degrees(d, e))
            if r_f is None:
                continue
            for i in range(n):
                for k in range(n):
                    if not q_e[i][k]:
                        continue
                    for j in range(n):
                        if r_f[k][j]:
                            defect[i][j] = defect[i][j] - q_e[i][k] * r_f[k][j]
        q_d = [[c.nonnegative_hbar() for c in row] for row in defect]
        r_d = [[c.negative_hbar() for c in row] for row in defect]
        if any(c for row in q_d for c in row):
            q_parts[d] = q_d
        if any(c for row in r_d for c in row):
            r_parts[d] = r_d

    pair = BirkhoffPair(
        Q=MatrixSeries.from_coefficients(q_parts, n, box, window),
        R=MatrixSeries.from_coefficients(r_parts, n, box, window),
    )
    logger.info("Matrix Birkhoff factorization done in box %s", box)
    return pair


def factorization_residual(pair: BirkhoffPair, solution: FundamentalSolution) -> MatrixSeries:
    """Q R - S; zero within the box when the factorization is exact."""
    return pair.Q @ pair.R - solution.matrix


def row_series(matrix: MatrixSeries, ring: CohomologyRing, index: int) -> QSeries:
    """Row `index` of a matrix series read back as a prefactor-flagged cohomology series."""
    row = matrix.row(index)
    box, window = matrix.box, matrix.window
    coeffs: dict[Multidegree, CohValue] = {}
    for d in degrees_in_box(box):
        comps = [entry.coefficient(d) for entry in row]
        if any(comps):
            coeffs[d] = CohValue(ring, [c.with_window(window) for c in comps])
    return QSeries(ring, coeffs, box, window, prefactor=True)


def j_from_r(pair: BirkhoffPair, ring: CohomologyRing) -> QSeries:
    """Row 0 of R, which is the J-function."""
    return row_series(pair.R, ring, 0)
