"""Mirror maps, shifted and stripped J-functions, and Gromov-Witten readouts."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .birkhoff import BirkhoffPair, row_series
from .cohomology import CohomologyRing
from .errors import NotHbarFree
from .formal import (
    BiLaurent,
    MatrixSeries,
    QSeries,
    ScalarSeries,
    SeriesMap,
    degrees_in_box,
    exp_series,
    invert_map,
    substitute,
)
from .ifunction import twist_j
from .types import Box, Multidegree

logger = logging.getLogger(__name__)

# Slots reported by gw_readout
READOUT_HBAR = (-1, -2, -3)
READOUT_LAMBDA = (0, 1, 2, 3)


@dataclass
class MirrorData:
    """
    Mirror maps read off the hbar^-1 coefficient of a J-function.

    Attributes:
        ring: Cohomology ring of J.
        box: Box in which the maps are known.
        maps: Rational series per basis index (the log q_i part of divisor maps omitted).
        equivariant: The lambda^1 part per basis index, as a multiple of lambda.
    """

    ring: CohomologyRing
    box: Box
    maps: dict[int, ScalarSeries]
    equivariant: dict[int, ScalarSeries] = field(default_factory=dict)

    @property
    def generator_indices(self) -> tuple[int, ...]:
        return tuple(self.ring.index(tuple(int(j == i) for j in range(self.ring.num_generators)))
                     for i in range(self.ring.num_generators))

    def series(self, index: int) -> ScalarSeries:
        """The map attached to a basis index (zero when absent)."""
        return self.maps.get(index, ScalarSeries.zero(self.box))

    def divisor_shift(self, i: int) -> ScalarSeries:
        """t_i - log q_i for generator i (0-based)."""
        return self.series(self.generator_indices[i])

    @property
    def extra_indices(self) -> tuple[int, ...]:
        """Basis indices other than the divisors that carry a nonzero map."""
        gens = set(self.generator_indices)
        return tuple(sorted(a for a, s in self.maps.items() if a not in gens and not s.is_zero()))

    @property
    def tilde(self) -> ScalarSeries:
        """The equivariant map t~ (unit component, multiple of lambda)."""
        return self.equivariant.get(0, ScalarSeries.zero(self.box))

    def is_trivial(self) -> bool:
        """Whether every map vanishes apart from the log q_i parts."""
        return all(s.is_zero() for s in self.maps.values()) and all(s.is_zero() for s in self.equivariant.values())

    def divisor_map(self) -> SeriesMap:
        """y_i = q_i exp(t_i - log q_i)."""
        shifts = [self.divisor_shift(i) for i in range(self.ring.num_generators)]
        return SeriesMap.from_log_shifts(shifts, self.box, ("y", "q"))

    @cached_property
    def inverse_map(self) -> SeriesMap:
        """q_i = y_i v_i(y), the inverse of the divisor map."""
        return invert_map(self.divisor_map())

    def in_flat(self, s: ScalarSeries) -> ScalarSeries:
        """Rewrite a series in q as a series in the flat variables y."""
        return substitute(s, self.inverse_map)


def extract_mirror(j_function: QSeries) -> MirrorData:
    """
    Split the hbar^-1 coefficient of J over the basis and over lambda.

    The lambda^0 part gives the geometric maps, the lambda^1 part the
    equivariant maps.
    """
    ring = j_function.ring
    maps: dict[int, ScalarSeries] = {}
    equivariant: dict[int, ScalarSeries] = {}
    for a in range(ring.dim):
        geometric = j_function.extract(-1, 0, a)
        if not geometric.is_zero():
            maps[a] = geometric
        lam = j_function.extract(-1, 1, a)
        if not lam.is_zero():
            equivariant[a] = lam
    data = MirrorData(ring, j_function.box, maps, equivariant)
    logger.info(
        "Extracted mirror data: %d geometric maps, %d extra, equivariant=%s",
        len(maps),
        len(data.extra_indices),
        bool(equivariant),
    )
    return data


def shift_by_mirror(j_function: QSeries, mirror: MirrorData) -> QSeries:
    """Insert the inverse mirror map; the prefactor is then in log y."""
    if mirror.is_trivial():
        return j_function
    return substitute(j_function, mirror.inverse_map)


def strip_equivariant(shifted: QSeries, tilde: ScalarSeries) -> QSeries:
    """Multiply by exp(-lambda t~ / hbar) with t~ given in the shifted variables."""
    if tilde.is_zero():
        return shifted
    window = shifted.window
    exponent = ScalarSeries(
        {d: BiLaurent.monomial(-c.constant(), -1, 1, window) for d, c in tilde.coeffs.items()},
        shifted.box,
        window,
    )
    return shifted * exp_series(exponent)


def proportionality_constant(a: ScalarSeries, b: ScalarSeries) -> Fraction | None:
    """Return c with a = c b, or None when the series are not proportional."""
    if b.is_zero():
        return Fraction(0) if a.is_zero() else None
    ra, rb = a.rationals(), b.rationals()
    lead = min(rb, key=lambda d: (sum(d), d))
    c = ra.get(lead, Fraction(0)) / rb[lead]
    if all(ra.get(d, Fraction(0)) == c * rb.get(d, Fraction(0)) for d in set(ra) | set(rb)):
        return c
    return None


@dataclass
class GWOutput:
    """
    Named series of a Gromov-Witten readout.

    Attributes:
        mirror: The mirror data of J.
        W: lambda^1 p slot at hbar^-2 before inversion.
        W_tilde: lambda^2 unit slot at hbar^-2 before inversion.
        W_hat: lambda^1 p slot at hbar^-2 after shift and strip, in y.
        W_tilde_hat: lambda^2 unit slot at hbar^-2 after shift and strip (W~ - t~^2/2 in y).
        tilde_flat: t~ written in y.
        constant: c with W_tilde_hat = c W_hat, or None.
        slots: (hbar power, lambda power, basis name) -> rational series of the stripped J.
    """

    mirror: MirrorData
    W: ScalarSeries  # noqa: N815
    W_tilde: ScalarSeries  # noqa: N815
    W_hat: ScalarSeries  # noqa: N815
    W_tilde_hat: ScalarSeries  # noqa: N815
    tilde_flat: ScalarSeries
    constant: Fraction | None
    slots: dict[tuple[int, int, str], ScalarSeries]
    stripped: QSeries


def gw_readout(j_function: QSeries, divisor: int = 1) -> GWOutput:
    """
    Shift J by its mirror map, strip the equivariant map and name the slots.

    Args:
        j_function: J from the scalar Birkhoff factorization.
        divisor: Basis index of the divisor class p whose slot holds W.

    Returns:
        The readout, including both W-level and hatted series.
    """
    mirror = extract_mirror(j_function)
    shifted = shift_by_mirror(j_function, mirror)
    tilde_flat = mirror.in_flat(mirror.tilde) if not mirror.tilde.is_zero() else mirror.tilde
    stripped = strip_equivariant(shifted, tilde_flat)
    ring = j_function.ring

    slots: dict[tuple[int, int, str], ScalarSeries] = {}
    for h in READOUT_HBAR:
        for l in READOUT_LAMBDA:
            for a, name in enumerate(ring.basis_names):
                s = stripped.extract(h, l, a)
                if not s.is_zero():
                    slots[(h, l, name)] = s

    w_hat = stripped.extract(-2, 1, divisor)
    w_tilde_hat = stripped.extract(-2, 2, 0)
    constant = proportionality_constant(w_tilde_hat, w_hat)
    logger.info("GW readout done; W~ - t~^2/2 = c W^ with c = %s", constant)
    return GWOutput(
        mirror=mirror,
        W=j_function.extract(-2, 1, divisor),
        W_tilde=j_function.extract(-2, 2, 0),
        W_hat=w_hat,
        W_tilde_hat=w_tilde_hat,
        tilde_flat=tilde_flat,
        constant=constant,
        slots=slots,
        stripped=stripped,
    )


@dataclass
class ModifiedJ:
    """
    J extended by exp(Theta / hbar) with Theta = q_0 Id + sum_a q_a Omega^_a.

    Attributes:
        ring: Cohomology ring.
        rows: Rows of R as prefactor-flagged series; row 0 is J.
        indices: Basis indices of the extended variables (0 is q_0).
        operators: Omega^_a for each extended index (identity for the unit).
    """

    ring: CohomologyRing
    rows: list[QSeries]
    indices: tuple[int, ...]
    operators: list[MatrixSeries]

    @property
    def box(self) -> Box:
        return self.rows[0].box

    def theta(self, values: Sequence[ScalarSeries]) -> MatrixSeries:
        """Theta with the extended variables set to series in q."""
        total = MatrixSeries.zero(self.ring.dim, self.box)
        for value, op in zip(values, self.operators, strict=True):
            total = total + op * value
        return total

    def evaluate(self, values: Sequence[ScalarSeries]) -> QSeries:
        """
        The extended J with each extended variable replaced by a series in q.

        Values must have zero constant term so that exp(Theta / hbar) truncates.
        """
        theta = self.theta(values)
        n = self.ring.dim
        vector = [ScalarSeries.one(self.box) if b == 0 else ScalarSeries.zero(self.box) for b in range(n)]
        result = self.rows[0]
        k = 1
        while True:
            vector = [
                sum((vector[a] * theta.entry(a, b) for a in range(n)), ScalarSeries.zero(self.box)) * Fraction(1, k)
                for b in range(n)
            ]
            if all(v.is_zero() for v in vector):
                break
            for b, coeff in enumerate(vector):
                if coeff.is_zero():
                    continue
                row = self.rows[b]
                shifted = row.like({d: c.shifted(-k) for d, c in row.coeffs.items()})
                result = result + shifted * coeff.with_window(row.window)
            k += 1
        return result


def monomial_operator(omega_hats: Sequence[MatrixSeries], exps: Sequence[int]) -> MatrixSeries:
    """Product of gauge-fixed connection matrices for a basis monomial."""
    n, box = omega_hats[0].size, omega_hats[0].box
    out = MatrixSeries.identity(n, box)
    for i, e in enumerate(exps):
        for _ in range(e):
            out = out @ omega_hats[i]
    return out


def modified_j(pair: BirkhoffPair, ring: CohomologyRing, omega_hats: Sequence[MatrixSeries], mirror: MirrorData) -> ModifiedJ:
    """
    Adjoin a variable for the unit and for every extra basis element with a nonzero map.

    Raises:
        NotHbarFree: If a connection matrix still carries hbar.
    """
    for i, m in enumerate(omega_hats):
        if not m.is_hbar_free():
            msg = f"Connection matrix {i + 1} is not hbar free"
            raise NotHbarFree(msg)
    indices = tuple(sorted({0, *mirror.extra_indices}))
    operators = [monomial_operator(omega_hats, ring.basis[a]) for a in indices]
    rows = [row_series(pair.R, ring, b) for b in range(ring.dim)]
    logger.info("Modified J with extended indices %s", [ring.basis_names[a] for a in indices])
    return ModifiedJ(ring, rows, indices, operators)


def solve_extended(extended: ModifiedJ, mirror: MirrorData) -> list[ScalarSeries]:
    """
    Values of the extended variables that cancel the unit and extra maps.

    The hbar^-1 slot of the extended J at index a is t_a + Theta[0][a], which
    is affine in the extended variables; the system matrix is the identity
    at q = 0.
    """
    n = len(extended.indices)
    box = extended.box
    system = MatrixSeries(
        [[extended.operators[j].entry(0, a) for j in range(n)] for a in extended.indices],
        box,
    )
    rhs = [-mirror.series(a) for a in extended.indices]
    inverse = system.inverse()
    return [
        sum((inverse.entry(j, a) * rhs[a] for a in range(n)), ScalarSeries.zero(box))
        for j in range(n)
    ]


def modified_limit(extended: ModifiedJ, mirror: MirrorData) -> tuple[QSeries, MirrorData]:
    """
    The small J in flat coordinates obtained from the extended J.

    The extended variables are fixed so that the unit and extra maps vanish,
    then the remaining divisor maps are inverted.

    Returns:
        Tuple of (J' in y, the divisor-only mirror data used for the shift).
    """
    values = solve_extended(extended, mirror)
    evaluated = extended.evaluate(values)
    reduced = extract_mirror(evaluated)
    leftover = reduced.extra_indices
    if leftover:
        msg = f"Extended variables did not cancel the maps at {leftover}"
        raise ValueError(msg)
    logger.info("Solved extended variables; shifting by the modified divisor maps")
    return shift_by_mirror(evaluated, reduced), reduced


@dataclass
class InvariantTable:
    """
    Local Calabi-Yau invariants read from the top-class slot.

    Attributes:
        box: Degrees covered.
        gw: Gromov-Witten numbers; None where the degree weight vanishes.
        gv: Integers after removing multiple covers; None where undetermined.
        W: The hbar^-2 top-class series after the mirror shift.
    """

    box: Box
    gw: dict[Multidegree, Fraction | None]
    gv: dict[Multidegree, Fraction | None]
    W: ScalarSeries  # noqa: N815

    def undetermined(self) -> list[Multidegree]:
        return sorted(d for d, v in self.gv.items() if v is None)


def _divisors(d: Multidegree) -> list[int]:
    g = int(np.gcd.reduce(np.asarray(d, dtype=np.int64))) if any(d) else 0
    return [k for k in range(2, g + 1) if g % k == 0]


def gopakumar_vafa(gw: dict[Multidegree, Fraction | None]) -> dict[Multidegree, Fraction | None]:
    """n_d = N_d - sum_{k | d, k > 1} n_{d/k} / k^3, propagating undetermined cells."""
    out: dict[Multidegree, Fraction | None] = {}
    for d in sorted(gw, key=lambda d: (sum(d), d)):
        value = gw[d]
        for k in _divisors(d):
            if value is None:
                break
            lower = out.get(tuple(x // k for x in d))
            value = None if lower is None else value - lower / k**3
        out[d] = value
    return out


def local_invariants(j_prime: QSeries, canonical: Sequence[int]) -> InvariantTable:
    """
    Twist J' by the canonical class and read invariants from the top class.

    W(y(s)) is matched against the prepotential derivative along the
    canonical direction, so N_d = W_d / <K, d>; degrees with <K, d> = 0
    are left undetermined.

    Args:
        j_prime: J of the base in flat coordinates, prefactor-flagged.
        canonical: Coordinates of the canonical class K.
    """
    twisted = twist_j(j_prime, canonical, 0, "hbar")
    mirror = extract_mirror(twisted)
    shifted = shift_by_mirror(twisted, mirror)
    top = j_prime.ring.dim - 1
    w = shifted.extract(-2, 0, top)
    gw: dict[Multidegree, Fraction | None] = {}
    for d in degrees_in_box(j_prime.box):
        weight = int(np.dot(canonical, d))
        gw[d] = None if weight == 0 else w.rational(d) / weight
    table = InvariantTable(j_prime.box, gw, gopakumar_vafa(gw), w)
    logger.info("Local invariants computed; undetermined cells %s", table.undetermined())
    return table