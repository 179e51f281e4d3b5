"""Big quantum connection matrices: B-model matrices, flat coordinates, WDVV and parallel transport."""

import itertools
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from . import linalg
from .birkhoff import birkhoff_matrix, build_fundamental, j_from_r
from .cohomology import CohomologyRing, IntersectionForm, linear_substitute
from .connection import gauge_fix, omega_hat_from_r, raw_connection
from .errors import Inconsistent, InconsistentJacobian, OrderTooLow, Underdetermined
from .formal import (
    MatrixSeries,
    ScalarSeries,
    SeriesMap,
    covers,
    degrees_in_box,
    in_box,
    invert_map,
    substitute,
    substitute_matrix,
    substitute_matrix_monomial,
    sub_degrees,
)
from .ifunction import GeometrySpec, build_i
from .mirror import extract_mirror, monomial_operator
from .presets import hirzebruch
from .types import Box, Monomial, Multidegree

logger = logging.getLogger(__name__)

# F3 -> F1: p1 -> p~1, p2 -> p~1 + p~2 and q~1 -> Q1 Q2, q~2 -> Q2
F1_GENERATORS = ((1, 0), (1, 1))
F1_DEGREES = ((1, 1), (0, 1))

type Triple = tuple[int, int, int]
type UPolynomial = dict[int, Fraction]  # u3 power -> coefficient


def frame_matrix(ring: CohomologyRing, frame: Sequence[Monomial]) -> list[list[Fraction]]:
    """Row a holds the ring-basis coordinates of frame monomial a."""
    return [list(ring.monomial(m)) for m in frame]


def b_matrices(omega_hats: Sequence[MatrixSeries], ring: CohomologyRing, frame: Sequence[Monomial]) -> list[MatrixSeries]:
    """
    B-model connection matrices in the frame, one per frame monomial.

    The generator matrices are L Omega^_i L^-1 with L the frame matrix;
    the others are products of these, so B for the unit is the identity
    and B for p2^2 is B_2 squared.
    """
    l_mat = frame_matrix(ring, frame)
    l_inv = linalg.inverse(l_mat)
    generators = [m.conjugate(l_mat, l_inv) for m in omega_hats]
    out = [monomial_operator(generators, exps) for exps in frame]
    logger.info("Built %d B-model connection matrices", len(out))
    return out


def jacobian_from_b(bs: Sequence[MatrixSeries], divisors: Sequence[int]) -> MatrixSeries:
    """
    d t_i / d x_j = (B_j)_{0i}.

    Args:
        bs: B matrices, one per frame direction.
        divisors: Frame indices of the log q_i directions.

    Raises:
        InconsistentJacobian: If mixed partials along the divisor directions disagree.
    """
    n, box = bs[0].size, bs[0].box
    jac = MatrixSeries([[bs[j].entry(0, i) for j in range(n)] for i in range(n)], box)
    for i in range(n):
        for (a, ja), (b, jb) in itertools.combinations(enumerate(divisors), 2):
            if jac.entry(i, ja).q_derivative(b) != jac.entry(i, jb).q_derivative(a):
                msg = f"Mixed partials of t_{i} along x_{ja} and x_{jb} disagree"
                raise InconsistentJacobian(msg)
    return jac


def _integrate(derivatives: Sequence[ScalarSeries], box: Box, what: str) -> ScalarSeries:
    """The series s with s(0) = 0 and q_i d/dq_i s = derivatives[i]."""
    rationals = [d.rationals() for d in derivatives]
    coeffs: dict[Multidegree, Fraction] = {}
    for d in degrees_in_box(box)[1:]:
        raw = [r.get(d, Fraction(0)) for r in rationals]
        candidates = {c / d[i] for i, c in enumerate(raw) if d[i]}
        if len(candidates) != 1 or any(c for i, c in enumerate(raw) if not d[i]):
            msg = f"{what} does not integrate at degree {d}"
            raise InconsistentJacobian(msg)
        value = candidates.pop()
        if value:
            coeffs[d] = value
    return ScalarSeries(coeffs, box)


def integrate_jacobian(jac: MatrixSeries, divisors: Sequence[int]) -> dict[int, ScalarSeries]:
    """
    Recover the flat coordinates t_a - x_a from the divisor columns of the Jacobian.

    Returns:
        Frame index -> series in q (the log q part of divisor coordinates omitted).
    """
    n, box = jac.size, jac.box
    maps = {}
    for a in range(n):
        derivatives = [jac.entry(a, j) - int(a == j) for j in divisors]
        series = _integrate(derivatives, box, f"t_{a}")
        if not series.is_zero():
            maps[a] = series
    return maps


def frame_maps(j_maps: dict[int, ScalarSeries], ring: CohomologyRing, frame: Sequence[Monomial]) -> dict[int, ScalarSeries]:
    """Rewrite mirror maps given over the ring basis as coordinates in the frame (t L^-1)."""
    l_inv = linalg.inverse(frame_matrix(ring, frame))
    box = next(iter(j_maps.values())).box if j_maps else ()
    out = {}
    for a in range(len(frame)):
        total = ScalarSeries.zero(box)
        for b, s in j_maps.items():
            if l_inv[b][a]:
                total = total + s * l_inv[b][a]
        if not total.is_zero():
            out[a] = total
    return out


@dataclass
class FlatFrame:
    """
    The change from B-model coordinates x to flat coordinates t.

    Attributes:
        jacobian: d t_i / d x_j as series in q.
        maps: t_a - x_a per frame index, in q.
        inverse: q_i = Q_i v_i(Q) with Q_i = exp(t_i) for the divisor directions.
    """

    jacobian: MatrixSeries
    maps: dict[int, ScalarSeries]
    inverse: SeriesMap

    def in_flat(self, s: ScalarSeries) -> ScalarSeries:
        return substitute(s, self.inverse)

    def transport(self, point: int) -> ScalarSeries:
        """The flat coordinate of the expansion point x = 0 along a frame direction, in Q."""
        return self.in_flat(self.maps.get(point, ScalarSeries.zero(self.jacobian.box)))


def flat_frame(jac: MatrixSeries, divisors: Sequence[int]) -> FlatFrame:
    maps = integrate_jacobian(jac, divisors)
    box = jac.box
    shifts = [maps.get(j, ScalarSeries.zero(box)) for j in divisors]
    inverse = invert_map(SeriesMap.from_log_shifts(shifts, box, ("Q", "q")))
    return FlatFrame(jac, maps, inverse)


def intermediate_c(bs: Sequence[MatrixSeries], frame_data: FlatFrame) -> list[MatrixSeries]:
    """
    C-_i = sum_j (d x_j / d t_i) B_j written in Q_i = exp(t_i).

    Returns one matrix per frame direction; the unit direction gives the identity.
    """
    n, box = bs[0].size, bs[0].box
    inverse = frame_data.jacobian.inverse()
    out = []
    for i in range(n):
        total = MatrixSeries.zero(n, box)
        for j in range(n):
            weight = inverse.entry(j, i)
            if not weight.is_zero():
                total = total + bs[j] * weight
        out.append(substitute_matrix(total, frame_data.inverse))
    logger.info("Intermediate connection matrices written in flat variables")
    return out


@dataclass
class BigQGF:
    """
    Generating function of intermediate invariants around the B-model expansion point.

    Coefficients w(D; n, m) multiply Q^D u^n / n! u_pt^m / m!, where n counts
    divisor insertions and m = <c1, D> - 1 point insertions (the selection rule).
    The classical cubic part is kept as eta: d_0 d_j d_k F = eta_jk.

    Attributes:
        eta: Intersection form in the frame (unit, divisors, point).
        c1: First Chern class, for the selection rule.
        box: Q-degrees covered.
        slopes: Q_i d/dQ_i of the point coordinate of the expansion point.
        bases: w(D; 0, m) per degree.
    """

    eta: IntersectionForm
    c1: tuple[int, ...]
    box: Box
    slopes: tuple[dict[Multidegree, Fraction], ...]
    bases: dict[Multidegree, Fraction] = field(default_factory=dict)
    _cache: dict[tuple[Multidegree, tuple[int, ...]], Fraction] = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.eta.eta)

    @property
    def num_generators(self) -> int:
        return len(self.c1)

    @property
    def point(self) -> int:
        return self.size - 1

    def order(self, d: Multidegree) -> int:
        """Number of point insertions allowed at degree d."""
        return int(np.dot(self.c1, d)) - 1

    def set_base(self, d: Multidegree, value: Fraction) -> None:
        self.bases[d] = Fraction(value)
        self._cache = {k: v for k, v in self._cache.items() if k[0] != d}

    def value(self, d: Multidegree, gens: tuple[int, ...]) -> Fraction:
        """
        w(d; gens, order(d)) from the modified Kahler equations.

        w(D; n + e_i) = D_i w(D; n) - sum_d' s_i[d'] w(D - d'; n) where s_i is
        the slope along Q_i; the second term only sees degrees whose point
        count is one higher.
        """
        if not any(d) or self.order(d) < 0 or not in_box(d, self.box):
            return Fraction(0)
        key = (d, gens)
        if key in self._cache:
            return self._cache[key]
        if not any(gens):
            result = self.bases.get(d, Fraction(0))
        else:
            i = next(g for g, x in enumerate(gens) if x)
            prev = tuple(x - int(g == i) for g, x in enumerate(gens))
            result = d[i] * self.value(d, prev)
            for dp, c in self.slopes[i].items():
                if not in_box(dp, d):
                    continue
                rest = sub_degrees(d, dp)
                if self.order(rest) == self.order(d) + 1:
                    result -= c * self.value(rest, prev)
        self._cache[key] = result
        return result

    def insertions(self, triple: Sequence[int]) -> tuple[tuple[int, ...], int]:
        gens = tuple(sum(1 for t in triple if t == g + 1) for g in range(self.num_generators))
        return gens, sum(1 for t in triple if t == self.point)

    def third_derivative(self, triple: Sequence[int], d: Multidegree) -> UPolynomial:
        """Q^d coefficient of d_i d_j d_k F at u1 = u2 = 0, as a polynomial in the point variable."""
        if 0 in triple:
            if any(d):
                return {}
            rest = sorted(triple)[1:]
            c = self.eta.eta[rest[0]][rest[1]]
            return {0: c} if c else {}
        gens, points = self.insertions(triple)
        nu = self.order(d)
        if not any(d) or nu < points:
            return {}
        c = self.value(d, gens)
        return {nu - points: c / factorial(nu - points)} if c else {}

    def coefficients(self, order: int = 3) -> dict[tuple[int, ...], Fraction]:
        """(d1, d2, n1, n2, m) -> w for divisor orders up to `order` and at least three insertions."""
        out = {}
        for d in degrees_in_box(self.box)[1:]:
            nu = self.order(d)
            if nu < 0:
                continue
            for total in range(order + 1):
                for gens in itertools.product(range(total + 1), repeat=self.num_generators):
                    if sum(gens) != total or total + nu < 3:
                        continue
                    c = self.value(d, gens)
                    if c:
                        out[(*d, *gens, nu)] = c
        return out


def _accumulate(acc: UPolynomial, a: UPolynomial, b: UPolynomial, weight: Fraction) -> None:
    for pa, ca in a.items():
        for pb, cb in b.items():
            acc[pa + pb] = acc.get(pa + pb, Fraction(0)) + weight * ca * cb


def wdvv_at(gf: BigQGF, d: Multidegree) -> dict[tuple[int, ...], Fraction]:
    """
    Nonzero Q^d coefficients of F_ijk eta^kl F_lmn - F_imk eta^kl F_ljn.

    Keys are (i, j, m, n, point power).
    """
    n = gf.size
    lower = degrees_in_box(d)
    table: dict[tuple[Triple, Multidegree], UPolynomial] = {}

    def third(i: int, j: int, k: int, e: Multidegree) -> UPolynomial:
        key = (tuple(sorted((i, j, k))), e)
        if key not in table:
            table[key] = gf.third_derivative(key[0], e)
        return table[key]

    pairs = [(k, l, c) for k, row in enumerate(gf.eta.eta_inv) for l, c in enumerate(row) if c]
    out: dict[tuple[int, ...], Fraction] = {}
    for i, j, m, nn in itertools.product(range(1, n), repeat=4):
        acc: UPolynomial = {}
        for k, l, c in pairs:
            for e in lower:
                rest = sub_degrees(d, e)
                _accumulate(acc, third(i, j, k, e), third(l, m, nn, rest), c)
                _accumulate(acc, third(i, m, k, e), third(l, j, nn, rest), -c)
        for power, c in acc.items():
            if c:
                out[(i, j, m, nn, power)] = c
    return out


def wdvv_residual(gf: BigQGF) -> dict[tuple[int, ...], Fraction]:
    """All nonzero associativity residuals in the box, keyed by (d..., i, j, m, n, power)."""
    out = {}
    for d in degrees_in_box(gf.box)[1:]:
        for key, c in wdvv_at(gf, d).items():
            out[(*d, *key)] = c
    return out


def boundary_data(c_bars: Sequence[MatrixSeries], eta: IntersectionForm) -> dict[Triple, dict[Multidegree, Fraction]]:
    """
    Third derivatives at u = 0: d_i d_j d_k F = sum_l (C-_i)_j^l eta_lk.

    Raises:
        Inconsistent: If the result is not symmetric in (i, j, k).
    """
    n = len(c_bars)
    entries = [m.rational_entries() for m in c_bars]
    full: dict[Triple, dict[Multidegree, Fraction]] = {}
    for i, j, k in itertools.product(range(n), repeat=3):
        coeffs: dict[Multidegree, Fraction] = {}
        for l in range(n):
            if not eta.eta[l][k]:
                continue
            for d, c in entries[i][j][l].items():
                coeffs[d] = coeffs.get(d, Fraction(0)) + c * eta.eta[l][k]
        full[(i, j, k)] = {d: c for d, c in coeffs.items() if c}
    out = {}
    for triple, coeffs in full.items():
        key = tuple(sorted(triple))
        if key in out:
            if out[key] != coeffs:
                msg = f"Third derivatives at u = 0 are not symmetric in {key}"
                raise Inconsistent(msg)
        else:
            out[key] = coeffs
    return out


def _stratum_equations(gf: BigQGF, d: Multidegree, boundary: dict[Triple, dict[Multidegree, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    """Affine equations a x + b = 0 in the base coefficient of degree d."""
    nu = gf.order(d)
    equations = []
    for triple, coeffs in boundary.items():
        target = coeffs.get(d, Fraction(0))
        if 0 in triple:
            if target:
                msg = f"Unit insertion {triple} carries a quantum correction at degree {d}"
                raise Inconsistent(msg)
            continue
        gens, points = gf.insertions(triple)
        if points != nu:
            if target:
                msg = f"Coefficient {triple} at degree {d} breaks the selection rule"
                raise Inconsistent(msg)
            continue
        gf.set_base(d, Fraction(0))
        b = gf.value(d, gens)
        a = Fraction(int(np.prod([d[g] ** x for g, x in enumerate(gens)])))
        equations.append((a, b - target))
    gf.set_base(d, Fraction(0))
    r0 = wdvv_at(gf, d)
    if nu >= 0:
        gf.set_base(d, Fraction(1))
        r1 = wdvv_at(gf, d)
    else:
        r1 = r0
    for key in set(r0) | set(r1):
        b = r0.get(key, Fraction(0))
        equations.append((r1.get(key, Fraction(0)) - b, b))
    return equations


def solve_bigq(
    c_bars: Sequence[MatrixSeries],
    eta: IntersectionForm,
    transport: ScalarSeries,
    c1: Sequence[int],
) -> BigQGF:
    """
    Determine the generating function from its boundary values.

    Degrees are processed by total degree then lex. Each degree has one
    base coefficient; the boundary values at u = 0 and the associativity
    equations give an exact linear system for it.

    Args:
        c_bars: Intermediate connection matrices, one per frame direction.
        eta: Intersection form in the frame.
        transport: Point coordinate of the expansion point, as a series in Q.
        c1: First Chern class.

    Raises:
        Inconsistent: If a stratum's equations contradict each other.
        Underdetermined: If a stratum's base coefficient stays free.
    """
    box = transport.box
    slopes = tuple(transport.q_derivative(i).rationals() for i in range(len(box)))
    gf = BigQGF(eta, tuple(c1), box, slopes)
    boundary = boundary_data(c_bars, eta)
    for d in degrees_in_box(box)[1:]:
        equations = [(a, b) for a, b in _stratum_equations(gf, d, boundary) if a or b]
        if gf.order(d) < 0:
            if equations:
                msg = f"Degree {d} has no coefficients but {len(equations)} nonzero equations"
                raise Inconsistent(msg)
            del gf.bases[d]
            continue
        solved = linalg.solve([[a] for a, _ in equations], [-b for _, b in equations]) if equations else None
        if solved is None and equations:
            msg = f"Stratum {d} is inconsistent"
            raise Inconsistent(msg)
        if solved is None or solved[1]:
            msg = f"Stratum {d} leaves its coefficient free"
            raise Underdetermined(msg)
        gf.set_base(d, solved[0][0])
        logger.debug("Stratum %s solved: %s", d, gf.bases[d])
    logger.info("Big quantum generating function solved in box %s", box)
    return gf


def parallel_transport(gf: BigQGF, transport: ScalarSeries, box: Box | None = None) -> list[MatrixSeries]:
    """
    C_i(Q) = C-_i(Q, u1 = u2 = 0, u_pt = -t_pt(Q)).

    Raises:
        OrderTooLow: If the shift has a constant term or the box is not covered.
    """
    box = gf.box if box is None else tuple(box)
    if not covers(gf.box, box) or not covers(transport.box, box):
        msg = f"Generating function known in {gf.box} cannot serve box {box}"
        raise OrderTooLow(msg)
    if transport.constant_term():
        msg = "The point shift must vanish at Q = 0"
        raise OrderTooLow(msg)
    shift = -transport.truncate(box)
    top = max((gf.order(d) for d in degrees_in_box(box)), default=0)
    powers = [ScalarSeries.one(box)]
    for _ in range(max(top, 0)):
        powers.append(powers[-1] * shift)

    n = gf.size
    third: dict[Triple, ScalarSeries] = {}
    for triple in itertools.combinations_with_replacement(range(n), 3):
        total = ScalarSeries.zero(box)
        for d in degrees_in_box(box):
            for power, c in gf.third_derivative(triple, d).items():
                total = total + powers[power] * ScalarSeries({d: c}, box)
        third[triple] = total

    out = []
    for i in range(n):
        rows = []
        for j in range(n):
            row = []
            for l in range(n):
                entry = ScalarSeries.zero(box)
                for k in range(n):
                    if gf.eta.eta_inv[k][l]:
                        entry = entry + third[tuple(sorted((i, j, k)))] * gf.eta.eta_inv[k][l]
                row.append(entry)
            rows.append(row)
        out.append(MatrixSeries(rows, box))
    logger.info("Parallel transport done")
    return out


@dataclass
class BigQuantumResult:
    """
    Every stage of the big quantum pipeline.

    Attributes:
        spec: Geometry.
        frame: Frame monomials (unit, divisors, point class).
        B: B-model matrices per frame direction.
        flat: Jacobian, flat coordinates and the inverse map.
        c_bar: Intermediate matrices in Q.
        transport: Point coordinate of the expansion point in Q.
        gf: Solved generating function.
        C: Transported connection matrices in Q.
    """

    spec: GeometrySpec
    frame: tuple[Monomial, ...]
    B: list[MatrixSeries]  # noqa: N815
    flat: FlatFrame
    c_bar: list[MatrixSeries]
    transport: ScalarSeries
    gf: BigQGF
    C: list[MatrixSeries]  # noqa: N815


def big_quantum(box: Box = (3, 3), check_gauge: bool = False) -> BigQuantumResult:
    """
    Run the F3 pipeline from its I-function to the transported connection matrices.

    Args:
        box: Truncation box.
        check_gauge: Also build Omega^ through the gauge transformation of Omega.

    Raises:
        InconsistentJacobian: If the Jacobian route disagrees with the mirror map of J.
    """
    spec = hirzebruch(3, box)
    ring = spec.ring
    frame = spec.frame
    if frame is None or spec.intersection_form is None:
        msg = f"{spec.name} has no frame for big quantum cohomology"
        raise ValueError(msg)
    solution = build_fundamental(build_i(spec))
    pair = birkhoff_matrix(solution)
    k = ring.num_generators
    if check_gauge:
        omegas = [gauge_fix(raw_connection(solution, i), pair, ring).matrix for i in range(k)]
    else:
        omegas = [omega_hat_from_r(pair, ring, i).matrix for i in range(k)]

    bs = b_matrices(omegas, ring, frame)
    divisors = tuple(frame.index(tuple(int(j == i) for j in range(k))) for i in range(k))
    jac = jacobian_from_b(bs, divisors)
    flat = flat_frame(jac, divisors)
    expected = frame_maps(extract_mirror(j_from_r(pair, ring)).maps, ring, frame)
    if expected != flat.maps:
        msg = "Flat coordinates from the Jacobian disagree with the mirror map of J"
        raise InconsistentJacobian(msg)

    c_bar = intermediate_c(bs, flat)
    point = len(frame) - 1
    transport = flat.transport(point)
    gf = solve_bigq(c_bar, spec.intersection_form, transport, spec.c1)
    c_mats = parallel_transport(gf, transport)
    return BigQuantumResult(spec, frame, bs, flat, c_bar, transport, gf, c_mats)


def f1_connection(box: Box) -> list[MatrixSeries]:
    """Gauge-fixed connection matrices of F1 in its own q variables."""
    spec = hirzebruch(1, box)
    pair = birkhoff_matrix(build_fundamental(build_i(spec)))
    return [omega_hat_from_r(pair, spec.ring, i).matrix for i in range(spec.ring.num_generators)]


def f1_comparison(result: BigQuantumResult) -> list[MatrixSeries]:
    """
    Differences between the transported matrices and the F1 matrices.

    The frame is carried to F1 by p1 -> p~1, p2 -> p~1 + p~2 and the F1
    variables by q~1 = Q1 Q2, q~2 = Q2. Zero matrices mean agreement.
    """
    box = result.gf.box
    f3_ring = result.spec.ring
    f1 = hirzebruch(1, box)
    ring_map = linear_substitute(f3_ring, f1.ring, F1_GENERATORS)
    images = [list(ring_map(f3_ring.monomial(m))) for m in result.frame]
    inverse = linalg.inverse(images)
    f1_mats = [substitute_matrix_monomial(m, F1_DEGREES, box) for m in f1_connection(box)]
    diffs = []
    for i, row in enumerate(F1_GENERATORS):
        target = MatrixSeries.zero(f1.ring.dim, box)
        for j, c in enumerate(row):
            if c:
                target = target + f1_mats[j] * c
        mine = result.C[i + 1].conjugate(inverse, images)
        diffs.append(mine - target)
    return diffs
