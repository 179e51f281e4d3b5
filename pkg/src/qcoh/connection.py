"""Connection matrices, gauge fixing, flat coordinates and annihilating differential operators."""

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Literal

from . import linalg
from .birkhoff import BirkhoffPair, FundamentalSolution
from .cohomology import CohomologyRing, RingMap, monomials_of_degree
from .errors import GaugeResidual, NoOperatorsFound
from .formal import (
    MatrixSeries,
    QSeries,
    ScalarSeries,
    add_degrees,
    degrees_in_box,
    in_box,
    log_series,
    substitute_matrix,
)
from .mirror import MirrorData
from .types import Box, Slot

logger = logging.getLogger(__name__)

type ConnectionKind = Literal["raw", "gauge_fixed", "flat", "bmodel", "intermediate", "amodel"]


@dataclass
class ConnMatrix:
    """
    A connection matrix with its role and variable names.

    Row b expands the derivative of basis direction b; at q = 0 the
    gauge-fixed matrix of p_i has row b equal to p_i times e_b.

    Attributes:
        matrix: The matrix series.
        kind: Which stage of the pipeline produced it.
        index: Generator (or coordinate) the matrix belongs to, 0-based.
        variables: Name of the series variables.
    """

    matrix: MatrixSeries
    kind: ConnectionKind
    index: int
    variables: str = "q"

    def entry(self, i: int, j: int) -> ScalarSeries:
        return self.matrix.entry(i, j)

    def rational(self, i: int, j: int) -> dict[tuple[int, ...], Fraction]:
        """Rational coefficients of an hbar free entry."""
        return self.matrix.entry(i, j).rationals()

    def is_hbar_free(self) -> bool:
        return self.matrix.is_hbar_free()


def multiplication(ring: CohomologyRing, i: int, box: Box) -> MatrixSeries:
    """Classical multiplication by p_{i+1} as a constant matrix series."""
    return MatrixSeries.constant(ring.mult_matrix(ring.generator(i)), box)


def raw_connection(solution: FundamentalSolution, i: int) -> ConnMatrix:
    """
    Omega_i = (theta_i S) S^-1, with theta_i acting on the prefactor as p_i.

    The full derivative of the rows is hbar q_i d/dq_i S + S M_i where M_i
    is classical multiplication by p_i.
    """
    s = solution.matrix
    mult = multiplication(solution.ring, i, s.box)
    derivative = s.theta(i) + s @ mult
    omega = derivative @ s.inverse()
    logger.debug("Raw connection matrix %d built", i + 1)
    return ConnMatrix(omega, "raw", i)


def _hbar_free(m: MatrixSeries) -> MatrixSeries:
    return m.map_entries(lambda e: ScalarSeries({d: c.constant() for d, c in e.coeffs.items()}, e.box))


def omega_hat_from_r(pair: BirkhoffPair, ring: CohomologyRing, i: int) -> ConnMatrix:
    """
    Gauge-fixed connection from R alone: Omega^_i = M_i + q_i d/dq_i R_(-1).

    R_(-1) is the hbar^-1 slot of R. This follows from theta_i R = Omega^_i R
    at hbar^0.
    """
    r_minus = pair.R.slot(-1)
    omega = multiplication(ring, i, pair.R.box) + r_minus.q_derivative(i)
    return ConnMatrix(omega, "gauge_fixed", i)


def gauge_fix(omega: ConnMatrix, pair: BirkhoffPair, ring: CohomologyRing) -> ConnMatrix:
    """
    Omega^_i = Q^-1 Omega_i Q + (hbar q_i d/dq_i Q^-1) Q.

    The result is cross-checked against `omega_hat_from_r`.

    Raises:
        GaugeResidual: If hbar survives or the two constructions disagree.
    """
    i = omega.index
    q_inv = pair.Q.inverse()
    fixed = q_inv @ omega.matrix @ pair.Q + q_inv.theta(i) @ pair.Q
    if not fixed.is_hbar_free():
        msg = f"Gauge-fixed connection matrix {i + 1} still carries hbar"
        raise GaugeResidual(msg)
    fixed = _hbar_free(fixed)
    check = omega_hat_from_r(pair, ring, i).matrix
    if fixed != check:
        msg = f"Gauge-fixed connection matrix {i + 1} disagrees with the R construction"
        raise GaugeResidual(msg)
    logger.info("Gauge-fixed connection matrix %d", i + 1)
    return ConnMatrix(fixed, "gauge_fixed", i)


def commutator(a: MatrixSeries, b: MatrixSeries) -> MatrixSeries:
    return a @ b - b @ a


def flatness_residual(omegas: Sequence[ConnMatrix], i: int, j: int) -> MatrixSeries:
    """hbar theta_i Omega_j - hbar theta_j Omega_i + [Omega_j, Omega_i]; zero for a flat connection."""
    a, b = omegas[i].matrix, omegas[j].matrix
    return b.theta(i) - a.theta(j) + commutator(b, a)


def flat_jacobian(mirror: MirrorData) -> list[list[ScalarSeries]]:
    """
    d log q_i / d t_j as series in y.

    With q_i = y_i v_i(y) this is delta_ij + y_j d/dy_j log v_i.
    """
    inverse = mirror.inverse_map
    k = mirror.ring.num_generators
    logs = [log_series(inverse.units[i]) for i in range(k)]
    return [
        [logs[i].q_derivative(j) + int(i == j) for j in range(k)]
        for i in range(k)
    ]


def to_flat(
    omega_hats: Sequence[ConnMatrix],
    mirror: MirrorData,
    basis_change: RingMap | None = None,
) -> list[ConnMatrix]:
    """
    Rewrite gauge-fixed connections in flat coordinates.

    Each Omega^_i is evaluated at q = q(y), contracted with the Jacobian
    d log q_i / d t_j and, when a ring map is given, conjugated into the
    target basis and recombined so that matrix j multiplies by the target
    generator p~_j.

    Args:
        omega_hats: Gauge-fixed matrices, one per generator.
        mirror: Mirror data whose divisor maps define y_i = e^{t_i}.
        basis_change: Ring map p_i -> sum_j A_ij p~_j.

    Returns:
        The flat connection matrices in y.
    """
    k = len(omega_hats)
    jacobian = flat_jacobian(mirror)
    substituted = [substitute_matrix(o.matrix, mirror.inverse_map) for o in omega_hats]
    box = substituted[0].box
    flat = []
    for j in range(k):
        total = MatrixSeries.zero(substituted[0].size, box)
        for i in range(k):
            total = total + substituted[i] * jacobian[i][j]
        flat.append(total)
    if basis_change is not None:
        images = [list(row) for row in basis_change.matrix]
        inverse = linalg.inverse(images)
        flat = [m.conjugate(inverse, images) for m in flat]
        recombine = linalg.inverse([list(row) for row in basis_change.generators])
        flat = [
            sum((flat[i] * recombine[j][i] for i in range(k) if recombine[j][i]), MatrixSeries.zero(flat[0].size, box))
            for j in range(k)
        ]
    logger.info("Connection matrices rewritten in flat coordinates")
    return [ConnMatrix(m, "flat", j, "y") for j, m in enumerate(flat)]


type OpKey = tuple[tuple[int, ...], tuple[int, ...], int, int]


class DiffOperator:
    """
    A differential operator sum c y^b hbar^e lambda^l theta^a in normal order.

    theta_i = hbar y_i d/dy_i; the y powers stand to the left of the thetas.
    Keys are (a, b, e, l).
    """

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: Mapping[OpKey, Fraction | int] | None = None) -> None:
        self.nvars = nvars
        self.terms: dict[OpKey, Fraction] = {}
        for key, c in (terms or {}).items():
            if c:
                self.terms[key] = self.terms.get(key, Fraction(0)) + Fraction(c)
        self.terms = {k: v for k, v in self.terms.items() if v}

    @classmethod
    def const(cls, c: Fraction | int, nvars: int = 1) -> "DiffOperator":
        zero = (0,) * nvars
        return cls(nvars, {(zero, zero, 0, 0): c})

    @classmethod
    def theta(cls, i: int, nvars: int = 1) -> "DiffOperator":
        """theta_{i+1}."""
        zero = (0,) * nvars
        return cls(nvars, {(tuple(int(j == i) for j in range(nvars)), zero, 0, 0): 1})

    @classmethod
    def var(cls, i: int, nvars: int = 1) -> "DiffOperator":
        """Multiplication by y_{i+1}."""
        zero = (0,) * nvars
        return cls(nvars, {(zero, tuple(int(j == i) for j in range(nvars)), 0, 0): 1})

    @classmethod
    def hbar(cls, nvars: int = 1) -> "DiffOperator":
        zero = (0,) * nvars
        return cls(nvars, {(zero, zero, 1, 0): 1})

    @classmethod
    def lam(cls, nvars: int = 1) -> "DiffOperator":
        zero = (0,) * nvars
        return cls(nvars, {(zero, zero, 0, 1): 1})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"DiffOperator({self.terms})"

    def _lift(self, other: "DiffOperator | Fraction | int") -> "DiffOperator":
        return other if isinstance(other, DiffOperator) else DiffOperator.const(other, self.nvars)

    def __add__(self, other: "DiffOperator | Fraction | int") -> "DiffOperator":
        other = self._lift(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return DiffOperator(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "DiffOperator":
        return DiffOperator(self.nvars, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "DiffOperator | Fraction | int") -> "DiffOperator":
        return self + (-self._lift(other))

    def __rsub__(self, other: Fraction | int) -> "DiffOperator":
        return (-self) + other

    def __mul__(self, other: "DiffOperator | Fraction | int") -> "DiffOperator":
        """Composition, moving thetas past y powers with theta_i y^b = y^b (theta_i + hbar b_i)."""
        if not isinstance(other, DiffOperator):
            return DiffOperator(self.nvars, {k: c * Fraction(other) for k, c in self.terms.items()})
        out: dict[OpKey, Fraction] = {}
        for (a1, b1, e1, l1), c1 in self.terms.items():
            for (a2, b2, e2, l2), c2 in other.terms.items():
                # theta^a1 y^b2 = y^b2 prod_i (theta_i + hbar b2_i)^a1_i
                expansions: list[tuple[tuple[int, ...], int, Fraction]] = [((), 0, Fraction(1))]
                for i in range(self.nvars):
                    nxt = []
                    for partial, e, c in expansions:
                        for k in range(a1[i] + 1):
                            factor = comb(a1[i], k) * Fraction(b2[i]) ** (a1[i] - k)
                            if factor:
                                nxt.append(((*partial, k), e + a1[i] - k, c * factor))
                    expansions = nxt
                for theta, e, c in expansions:
                    key = (
                        tuple(x + y for x, y in zip(theta, a2, strict=True)),
                        tuple(x + y for x, y in zip(b1, b2, strict=True)),
                        e1 + e2 + e,
                        l1 + l2,
                    )
                    out[key] = out.get(key, Fraction(0)) + c1 * c2 * c
        return DiffOperator(self.nvars, out)

    def __rmul__(self, other: Fraction | int) -> "DiffOperator":
        return self * other

    def __pow__(self, n: int) -> "DiffOperator":
        out = DiffOperator.const(1, self.nvars)
        for _ in range(n):
            out = out * self
        return out

    def theta_degree(self) -> int:
        return max((sum(a) for a, _, _, _ in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms


def _multiply_monomial(s: QSeries, b: Sequence[int], e: int, l: int, c: Fraction) -> QSeries:
    out = {}
    for d, v in s.coeffs.items():
        target = add_degrees(d, tuple(b))
        if in_box(target, s.box):
            out[target] = v.shifted(e, l) * c
    return s.like(out)


def apply_operator(op: DiffOperator, s: QSeries) -> QSeries:
    """Apply an operator to a (possibly prefactor-flagged) series, truncating to its box."""
    derivatives: dict[tuple[int, ...], QSeries] = {}
    result = s.like({})
    for (a, b, e, l), c in op.terms.items():
        if a not in derivatives:
            derivatives[a] = s.theta_monomial(a)
        result = result + _multiply_monomial(derivatives[a], b, e, l, c)
    return result


def operator_monomials(
    nvars: int, theta_degree: int, y_degree: Sequence[int], hbar_degree: int = 0, lambda_degree: int = 0
) -> list[OpKey]:
    """All normal-ordered monomials within the given bounds."""
    thetas = [m for n in range(theta_degree + 1) for m in monomials_of_degree(nvars, n)]
    ys = degrees_in_box(tuple(y_degree))
    return [
        (a, b, e, l)
        for a in thetas
        for b in ys
        for e in range(hbar_degree + 1)
        for l in range(lambda_degree + 1)
    ]


def _conditions(series: QSeries) -> dict[tuple[tuple[int, ...], Slot, int], Fraction]:
    out = {}
    for d, v in series.coeffs.items():
        for idx, comp in enumerate(v.comps):
            for slot, c in comp.terms.items():
                out[(d, slot, idx)] = c
    return out


def find_annihilators(
    j_function: QSeries,
    theta_degree: int,
    y_degree: Sequence[int],
    hbar_degree: int = 0,
    lambda_degree: int = 0,
) -> list[DiffOperator]:
    """
    Find minimal generators of the operators within the bounds that kill J inside its box.

    Every candidate monomial is applied to J; the coefficients of all
    (degree, slot, basis) triples give an exact linear system. Its nullspace
    is reduced so each vector's leading entry is 1, and vectors that are
    combinations of y-shifts of lower operators are dropped.

    Raises:
        NoOperatorsFound: If only the zero operator survives.
    """
    nvars = len(j_function.box)
    monomials = operator_monomials(nvars, theta_degree, y_degree, hbar_degree, lambda_degree)
    # highest theta degree first so reduced vectors lead with their theta part
    monomials.sort(key=lambda m: (-sum(m[0]), m[0], m[1], m[2], m[3]))
    columns = [_conditions(apply_operator(DiffOperator(nvars, {m: 1}), j_function)) for m in monomials]
    keys = sorted({k for col in columns for k in col})
    rows = [[col.get(k, Fraction(0)) for col in columns] for k in keys]
    logger.debug("Annihilator search: %d unknowns, %d conditions", len(monomials), len(rows))
    null = linalg.nullspace(rows, len(monomials))
    if not null:
        msg = f"No annihilating operator with theta degree {theta_degree} and y degree {tuple(y_degree)}"
        raise NoOperatorsFound(msg)
    reduced, _ = linalg.rref(null, len(monomials))
    reduced.sort(key=lambda vec: _leading_y_degree(vec, monomials))
    candidates = [DiffOperator(nvars, {m: c for m, c in zip(monomials, vec, strict=True) if c}) for vec in reduced]
    operators = _minimal_generators(candidates, monomials, y_degree)
    logger.info("Found %d annihilating operators (%d before dropping y-shifts)", len(operators), len(candidates))
    return operators


def _leading_y_degree(vec: Sequence[Fraction], monomials: Sequence[OpKey]) -> tuple[int, int]:
    pivot = next(i for i, c in enumerate(vec) if c)
    return sum(monomials[pivot][1]), pivot


def y_shift(op: DiffOperator, c: Sequence[int], y_degree: Sequence[int]) -> DiffOperator:
    """y^c op, dropping monomials past the y bounds."""
    terms = {}
    for (a, b, e, l), coeff in op.terms.items():
        shifted = add_degrees(b, tuple(c))
        if in_box(shifted, tuple(y_degree)):
            terms[(a, shifted, e, l)] = coeff
    return DiffOperator(op.nvars, terms)


def _minimal_generators(
    candidates: Sequence[DiffOperator], monomials: Sequence[OpKey], y_degree: Sequence[int]
) -> list[DiffOperator]:
    """Keep the candidates outside the span of the kept ones and their y-shifts, in order."""
    shifts = [c for c in degrees_in_box(tuple(y_degree)) if any(c)]
    kept: list[DiffOperator] = []
    span: list[list[Fraction]] = []
    for op in candidates:
        vec = annihilator_vector(op, monomials)
        if linalg.in_span(span, vec, len(monomials)):
            continue
        kept.append(op)
        span.append(vec)
        span.extend(annihilator_vector(y_shift(op, c, y_degree), monomials) for c in shifts)
    return kept


def annihilator_vector(op: DiffOperator, monomials: Sequence[OpKey]) -> list[Fraction]:
    """Coefficients of an operator over a monomial list."""
    return [op.terms.get(m, Fraction(0)) for m in monomials]


def quantum_relation_residual(op: DiffOperator, flats: Sequence[ConnMatrix]) -> MatrixSeries:
    """
    Evaluate the hbar^0 part of an operator with theta_j -> Omega~_j.

    Zero when the operator's symbol holds in the quantum ring.
    """
    first = flats[0].matrix
    n, box = first.size, first.box
    total = MatrixSeries.zero(n, box)
    for (a, b, e, l), c in op.terms.items():
        if e or l:
            continue
        term = MatrixSeries.identity(n, box)
        for i, power in enumerate(a):
            for _ in range(power):
                term = term @ flats[i].matrix
        monomial = ScalarSeries({tuple(b): c}, box)
        total = total + term * monomial
    return total


def _linear(coeffs: Sequence[int], hbar: int = 0, lam: int = 0, nvars: int = 2) -> DiffOperator:
    out = DiffOperator.const(0, nvars)
    for i, c in enumerate(coeffs):
        if c:
            out = out + DiffOperator.theta(i, nvars) * c
    return out + DiffOperator.hbar(nvars) * hbar + DiffOperator.lam(nvars) * lam


def equivariant_local_curve_operator(k: int) -> DiffOperator:
    """
    The equivariant Picard-Fuchs operator of the local curves with k in {-1, 0}.

    k = -1: theta^2 - q (theta - lambda)^2.
    k = 0: theta^2 - q (2 theta - lambda)(2 theta - lambda + hbar).

    Raises:
        ValueError: For other k.
    """
    t = DiffOperator.theta(0)
    q = DiffOperator.var(0)
    lam = DiffOperator.lam()
    if k == -1:
        return t * t - q * (t - lam) * (t - lam)
    if k == 0:
        return t * t - q * (t * 2 - lam) * (t * 2 - lam + DiffOperator.hbar())
    msg = f"No stored equivariant operator for k = {k}"
    raise ValueError(msg)


def hirzebruch_operators(n: int) -> tuple[DiffOperator, DiffOperator]:
    """
    Picard-Fuchs operators annihilating I of the Hirzebruch surface F_n.

    D1 = theta_1^2 - q_1 prod_{m=0}^{n-1} (-n theta_1 + theta_2 - m hbar),
    D2 = theta_2 (-n theta_1 + theta_2) - q_2.
    """
    t1, t2 = DiffOperator.theta(0, 2), DiffOperator.theta(1, 2)
    q1, q2 = DiffOperator.var(0, 2), DiffOperator.var(1, 2)
    product = DiffOperator.const(1, 2)
    for m in range(n):
        product = product * _linear((-n, 1), hbar=-m)
    return t1 * t1 - q1 * product, t2 * _linear((-n, 1)) - q2


def f4_flat_operators() -> tuple[DiffOperator, DiffOperator]:
    """theta_1^2 - y_1 y_2^2 and theta_2 (theta_2 - 4 theta_1) + y_2 (4 y_1 y_2 - 1)."""
    t1, t2 = DiffOperator.theta(0, 2), DiffOperator.theta(1, 2)
    y1, y2 = DiffOperator.var(0, 2), DiffOperator.var(1, 2)
    return t1 * t1 - y1 * y2 * y2, t2 * (t2 - t1 * 4) + y2 * (y1 * y2 * 4 - 1)
