"""I-functions of toric spaces with bundle twists, and twisted J-functions."""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property

import numpy as np

from .cohomology import (
    CohomologyRing,
    IntersectionForm,
    RingPresentation,
    build_ring,
    product_of_linear_forms,
)
from .formal import CohValue, Expansion, QSeries, degrees_in_box, invert_linear, linear_factor
from .types import DEFAULT_DEGREE_CAP, WINDOW_MARGIN, Box, Monomial, Multidegree, Polynomial, Window

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Twist:
    """
    A line bundle twist: the class sum_i cls[i] p_i with equivariant weight weight*lambda.

    Attributes:
        cls: Integer coordinates of the bundle's first Chern class.
        weight: Rational multiple of lambda carried by the fiber.
        expand: Variable used to invert factors with both hbar and lambda parts.
    """

    cls: tuple[int, ...]
    weight: Fraction = Fraction(0)
    expand: Expansion = "lambda"

    def pairing(self, d: Multidegree) -> int:
        return int(np.dot(self.cls, d))


@dataclass(frozen=True, eq=False)
class GeometrySpec:
    """
    Toric geometry data: weights, relations, twists and truncation box.

    Attributes:
        name: Display name.
        weights: k x n integer weight matrix; column j gives u_j = sum_i m_ij p_i.
        relations: Ring relations as monomial dictionaries.
        twists: Bundle twists inserted into the I-function.
        box: Default truncation box.
        degree_cap: Degree at which the ring must vanish.
        expected_c1: First Chern class the weights should produce, when known.
        frame: Alternative basis monomials used by the intersection form.
        eta: Intersection matrix in `frame`.
        canonical_twist: Twist applied afterwards to J (local Calabi-Yau readout).
    """

    name: str
    weights: tuple[tuple[int, ...], ...]
    relations: tuple[Polynomial, ...]
    twists: tuple[Twist, ...] = ()
    box: Box = ()
    degree_cap: int = DEFAULT_DEGREE_CAP
    expected_c1: tuple[int, ...] | None = None
    frame: tuple[Monomial, ...] | None = None
    eta: tuple[tuple[int, ...], ...] | None = None
    canonical_twist: Twist | None = field(default=None)

    @property
    def num_generators(self) -> int:
        return len(self.weights)

    @property
    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.int64)

    @property
    def c1(self) -> tuple[int, ...]:
        """First Chern class as the row sums of the weight matrix."""
        return tuple(int(x) for x in self.weight_array.sum(axis=1))

    @property
    def presentation(self) -> RingPresentation:
        return RingPresentation(self.num_generators, self.relations)

    @cached_property
    def ring(self) -> CohomologyRing:
        return build_ring(self.presentation, self.degree_cap)

    @cached_property
    def intersection_form(self) -> IntersectionForm | None:
        if self.eta is None:
            return None
        return IntersectionForm.from_matrix(self.eta)

    @property
    def is_equivariant(self) -> bool:
        return any(t.weight != 0 and any(t.cls) for t in self.twists)

    def column_pairings(self, d: Multidegree) -> list[int]:
        """<d, column_j> for every column of the weight matrix."""
        return [int(x) for x in np.asarray(d, dtype=np.int64) @ self.weight_array]

    def with_box(self, box: Box) -> "GeometrySpec":
        """A copy with another truncation box; the ring is rebuilt lazily."""
        return replace(self, box=tuple(box))

    def factor_counts(self, d: Multidegree) -> tuple[int, int]:
        """Number of (inverted, polynomial) linear factors in the degree-d coefficient."""
        pairings = self.column_pairings(d) + [t.pairing(d) for t in self.twists]
        return sum(n for n in pairings if n > 0), sum(-n for n in pairings if n < 0)


def toric_relations(weights: Sequence[Sequence[int]], collections: Sequence[Sequence[int]]) -> tuple[Polynomial, ...]:
    """
    Relations prod_{j in S} u_j for each primitive collection S of columns.

    Args:
        weights: k x n weight matrix.
        collections: Column index sets (0-based).

    Returns:
        One relation per collection.
    """
    k = len(weights)
    columns = [[weights[i][j] for i in range(k)] for j in range(len(weights[0]))]
    return tuple(product_of_linear_forms([columns[j] for j in s], k) for s in collections)


def default_window(spec: GeometrySpec, box: Box | None = None) -> Window:
    """
    Truncation window large enough for every coefficient the pipelines read.

    With den and num the largest counts of inverted and polynomial factors
    over the box, hbar runs over [-(den + top + m), num + 2 top + m] and,
    for equivariant twists, lambda over +-(den + 2 top + 2m + 1).
    """
    box = spec.box if box is None else box
    counts = [spec.factor_counts(d) for d in degrees_in_box(box)]
    den = max(c[0] for c in counts)
    num = max(c[1] for c in counts)
    top = spec.ring.top_degree
    lam = den + 2 * top + 2 * WINDOW_MARGIN + 1 if spec.is_equivariant else 0
    return Window(-(den + top + WINDOW_MARGIN), num + 2 * top + WINDOW_MARGIN, -lam, lam)


def _bundle_factor(
    ring: CohomologyRing,
    cls: tuple,
    pairing: int,
    lam: Fraction,
    window: Window,
    expand: Expansion | None,
) -> CohValue:
    """prod_{m=-inf}^{0} (c + m hbar + lam) / prod_{m=-inf}^{pairing} (c + m hbar + lam)."""
    out = CohValue.unit(ring, window)
    if pairing > 0:
        for m in range(1, pairing + 1):
            out = out * invert_linear(ring, cls, m, lam, window, expand)
    else:
        for m in range(pairing + 1, 1):
            out = out * linear_factor(ring, cls, m, lam, window)
    return out


def i_coefficient(spec: GeometrySpec, d: Multidegree, window: Window | None = None) -> CohValue:
    """
    The degree-d coefficient of the I-function.

    Geometric factors are inverted as 1/hbar series; twist factors follow
    their own expansion rule. The product runs in a widened window and is
    truncated at the end.

    Raises:
        NonInvertibleFactor: If a twist factor has neither hbar nor lambda part.
    """
    ring = spec.ring
    window = default_window(spec) if window is None else window
    den, num = spec.factor_counts(d)
    inner = window.widened(den + num, den + num if window.is_equivariant else 0)
    value = CohValue.unit(ring, inner)
    for j, pairing in enumerate(spec.column_pairings(d)):
        u_j = ring.linear_class(spec.weight_array[:, j].tolist())
        value = value * _bundle_factor(ring, u_j, pairing, Fraction(0), inner, "hbar")
    for twist in spec.twists:
        pairing = twist.pairing(d)
        if pairing == 0:
            continue
        value = value * _bundle_factor(
            ring, ring.linear_class(twist.cls), pairing, Fraction(twist.weight), inner, twist.expand
        )
    return value.with_window(window)


def build_i(spec: GeometrySpec, box: Box | None = None, window: Window | None = None) -> QSeries:
    """
    Assemble the prefactor-flagged I-function over the whole box.

    Args:
        spec: Geometry data.
        box: Truncation box (defaults to the spec's).
        window: Truncation window (defaults to `default_window`).

    Returns:
        The I-function with constant coefficient 1.
    """
    box = spec.box if box is None else tuple(box)
    window = default_window(spec, box) if window is None else window
    coeffs = {d: i_coefficient(spec, d, window) for d in degrees_in_box(box)}
    series = QSeries(spec.ring, coeffs, box, window, prefactor=True)
    logger.info("Built I-function for %s in box %s (%d coefficients)", spec.name, box, len(series.coeffs))
    return series


def twist_j(J: QSeries, cls: Sequence[int], weight: Fraction | int = 0, expand: Expansion | None = None) -> QSeries:  # noqa: N803
    """
    Multiply each J_d by the bundle factor of the class with pairing <cls, d>.

    Args:
        J: Prefactor-flagged J-function.
        cls: Integer coordinates of the bundle class.
        weight: Equivariant weight as a multiple of lambda.
        expand: Expansion variable for factors with hbar and lambda parts.

    Returns:
        The twisted series.

    Raises:
        NonInvertibleFactor: If a factor has neither hbar nor lambda part.
    """
    ring = J.ring
    c = ring.linear_class(cls)
    out = {}
    for d, value in J.coeffs.items():
        pairing = int(np.dot(cls, d))
        if pairing == 0:
            out[d] = value
            continue
        inner = J.window.widened(abs(pairing), abs(pairing) if J.window.is_equivariant else 0)
        factor = _bundle_factor(ring, c, pairing, Fraction(weight), inner, expand)
        out[d] = (value.with_window(inner) * factor).with_window(J.window)
    return J.like(out)
