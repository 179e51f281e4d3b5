"""End-to-end runs that chain the I-function, Birkhoff, mirror and connection stages."""

import logging
from dataclasses import dataclass

from .birkhoff import BirkhoffPair, FundamentalSolution, ScalarBirkhoff, birkhoff_matrix, birkhoff_scalar, build_fundamental, j_from_r
from .cohomology import linear_substitute
from .connection import ConnMatrix, gauge_fix, omega_hat_from_r, raw_connection
from .formal import QSeries, ScalarSeries, substitute_monomial
from .ifunction import GeometrySpec, build_i
from .mirror import InvariantTable, MirrorData, extract_mirror, local_invariants, modified_j, modified_limit, shift_by_mirror
from .presets import g_space, hirzebruch
from .types import Box, Window

logger = logging.getLogger(__name__)

# F1 -> F3: p~1 -> p1, p~2 -> p2 - p1 with q~1 = y1 y2, q~2 = y2
F3_LIMIT_GENERATORS = ((1, 0), (-1, 1))
F3_LIMIT_DEGREES = ((1, 1), (0, 1))
LIMIT_HBAR = (0, -1, -2, -3)


@dataclass
class MatrixRun:
    """
    Matrix factorization of one geometry and what is read from it.

    Attributes:
        spec: Geometry.
        solution: Fundamental solution S.
        pair: S = Q R.
        J: Row 0 of R.
        mirror: Mirror data of J.
    """

    spec: GeometrySpec
    solution: FundamentalSolution
    pair: BirkhoffPair
    J: QSeries  # noqa: N815
    mirror: MirrorData

    def omega_hats(self, check_gauge: bool = False) -> list[ConnMatrix]:
        """Gauge-fixed connection matrices, optionally cross-checked against the gauge transformation."""
        ring = self.spec.ring
        if check_gauge:
            return [gauge_fix(raw_connection(self.solution, i), self.pair, ring) for i in range(ring.num_generators)]
        return [omega_hat_from_r(self.pair, ring, i) for i in range(ring.num_generators)]


def scalar_run(spec: GeometrySpec, box: Box | None = None, window: Window | None = None) -> ScalarBirkhoff:
    """J of a geometry from the scalar factorization of its I-function."""
    return birkhoff_scalar(build_i(spec, box, window))


def matrix_run(spec: GeometrySpec, box: Box | None = None, window: Window | None = None) -> MatrixRun:
    """Factor the fundamental solution of a geometry and read its mirror data."""
    solution = build_fundamental(build_i(spec, box, window))
    pair = birkhoff_matrix(solution)
    j_function = j_from_r(pair, spec.ring)
    return MatrixRun(spec, solution, pair, j_function, extract_mirror(j_function))


def flat_limit(run: MatrixRun) -> tuple[QSeries, MirrorData]:
    """J' in flat coordinates from the extended J with the unit and extra maps cancelled."""
    omegas = [o.matrix for o in run.omega_hats()]
    extended = modified_j(run.pair, run.spec.ring, omegas, run.mirror)
    return modified_limit(extended, run.mirror)


def local_table(spec: GeometrySpec, box: Box | None = None) -> InvariantTable:
    """
    Invariants of the canonical bundle over a surface.

    Raises:
        ValueError: If the geometry records no canonical twist.
    """
    if spec.canonical_twist is None:
        msg = f"{spec.name} has no canonical twist"
        raise ValueError(msg)
    run = matrix_run(spec, box)
    j_prime, _ = flat_limit(run)
    return local_invariants(j_prime, spec.canonical_twist.cls)


def f1_limit_residual(j_prime: QSeries) -> dict[tuple[int, str], ScalarSeries]:
    """
    Compare J' of F3 with I of F1 at q~1 = y1 y2, q~2 = y2.

    Returns:
        Nonzero differences keyed by (hbar power, basis name); empty on agreement.
    """
    box = j_prime.box
    f1 = hirzebruch(1, box)
    ring_map = linear_substitute(f1.ring, j_prime.ring, F3_LIMIT_GENERATORS)
    i_f1 = substitute_monomial(build_i(f1, box).map_ring(ring_map), F3_LIMIT_DEGREES, box)
    diffs = {}
    for h in LIMIT_HBAR:
        for a, name in enumerate(j_prime.ring.basis_names):
            diff = j_prime.extract(h, 0, a) - i_f1.extract(h, 0, a)
            if not diff.is_zero():
                diffs[(h, name)] = diff
    logger.info("F3 limit against F1: %d differing slots", len(diffs))
    return diffs


def g_identity_residual(k: int, box: Box = (3, 3)) -> dict[tuple[int, str], ScalarSeries]:
    """
    Compare the mirror-shifted J of G_k with I of G-1 at q1 = y1 y2^k, q2 = y2.

    J is carried to the G-1 basis by p1 -> p~1, p2 -> k p~1 + p~2.

    Returns:
        Nonzero differences keyed by (hbar power, basis name); empty on agreement.
    """
    source = g_space(k, box)
    target = g_space(-1, box)
    ring_map = linear_substitute(source.ring, target.ring, ((1, 0), (k, 1)))
    j_function = scalar_run(source, box).J
    shifted = shift_by_mirror(j_function, extract_mirror(j_function)).map_ring(ring_map)
    i_target = substitute_monomial(build_i(target, box), ((1, k), (0, 1)), box)
    diffs = {}
    for h in LIMIT_HBAR:
        for a, name in enumerate(target.ring.basis_names):
            diff = shifted.extract(h, 0, a) - i_target.extract(h, 0, a)
            if not diff.is_zero():
                diffs[(h, name)] = diff
    logger.info("G%d against G-1: %d differing slots", k, len(diffs))
    return diffs
