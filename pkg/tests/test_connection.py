"""Tests for the connection module."""

from fractions import Fraction

import pytest

from qcoh.birkhoff import birkhoff_matrix, build_fundamental
from qcoh.cohomology import linear_substitute
from qcoh.connection import (
    DiffOperator,
    apply_operator,
    commutator,
    equivariant_local_curve_operator,
    f4_flat_operators,
    find_annihilators,
    flatness_residual,
    gauge_fix,
    hirzebruch_operators,
    omega_hat_from_r,
    operator_monomials,
    quantum_relation_residual,
    raw_connection,
    to_flat,
    y_shift,
)
from qcoh.errors import NoOperatorsFound
from qcoh.golden import (
    G1_OMEGA_HAT,
    G1_OMEGA_TILDE,
    G1_OMEGA_TILDE_UNCHECKED,
    G1_PRINTED_LAST_ROW_SCALE,
    PolyMatrix,
    matrix_mismatches,
    table_matrix,
)
from qcoh.ifunction import build_i
from qcoh.mirror import extract_mirror, shift_by_mirror
from qcoh.pipeline import matrix_run, scalar_run
from qcoh.presets import g_space, hirzebruch, local_curve, projective_line


def _p1_pair(order: int = 4):  # noqa: ANN202
    series = build_i(projective_line((order,)))
    solution = build_fundamental(series)
    return series, solution, birkhoff_matrix(solution)


def _scaled_last_row(table: PolyMatrix, factor: int) -> PolyMatrix:
    return [*table[:-1], [{d: c * factor for d, c in poly.items()} for poly in table[-1]]]


class TestDiffOperator:
    """Tests for normal-ordered differential operators."""

    def test_theta_past_y(self) -> None:
        """Test theta y = y theta + hbar y."""
        product = DiffOperator.theta(0) * DiffOperator.var(0)

        assert product.terms == {((1,), (1,), 0, 0): 1, ((0,), (1,), 1, 0): 1}

    def test_y_before_theta_is_normal_order(self) -> None:
        """Test y theta stays a single term."""
        product = DiffOperator.var(0) * DiffOperator.theta(0)

        assert product.terms == {((1,), (1,), 0, 0): 1}

    def test_arithmetic(self) -> None:
        """Test sums cancel and powers compose."""
        t = DiffOperator.theta(0)

        assert (t - t).is_zero()
        assert (t**2).theta_degree() == 2
        assert (t * 3 + 1).terms == {((1,), (0,), 0, 0): 3, ((0,), (0,), 0, 0): 1}

    def test_operator_monomials(self) -> None:
        """Test the monomial grid size."""
        monomials = operator_monomials(2, 1, (1, 1), hbar_degree=1)

        assert len(monomials) == 3 * 4 * 2


class TestAnnihilators:
    """Tests for applying and finding Picard-Fuchs operators."""

    def test_p1_picard_fuchs(self) -> None:
        """Test theta^2 - q kills I_P1."""
        series = build_i(projective_line((4,)))
        op = DiffOperator.theta(0) ** 2 - DiffOperator.var(0)

        assert apply_operator(op, series).is_zero()
        assert not apply_operator(DiffOperator.theta(0), series).is_zero()

    def test_find_p1_operator(self) -> None:
        """Test the search returns theta^2 - q for P1."""
        series = build_i(projective_line((4,)))

        found = find_annihilators(series, 2, (1,))

        assert found == [DiffOperator(1, {((2,), (0,), 0, 0): 1, ((0,), (1,), 0, 0): -1})]

    def test_no_operator(self) -> None:
        """Test first-order operators cannot kill I_P1."""
        series = build_i(projective_line((3,)))

        with pytest.raises(NoOperatorsFound):
            find_annihilators(series, 1, (1,))

    @pytest.mark.parametrize(("k", "action"), [(-1, "diagonal"), (0, "x0")])
    def test_equivariant_operators(self, k: int, action: str) -> None:
        """Test the equivariant operators of X_{-1} and X_0."""
        series = build_i(local_curve(k, action, (4,)))

        assert apply_operator(equivariant_local_curve_operator(k), series).is_zero()

    def test_no_stored_operator(self) -> None:
        """Test other k have no stored operator."""
        with pytest.raises(ValueError, match="No stored equivariant operator"):
            equivariant_local_curve_operator(1)

    def test_hirzebruch_operators(self) -> None:
        """Test both F1 operators kill I_F1."""
        series = build_i(hirzebruch(1, (2, 2)))

        for op in hirzebruch_operators(1):
            assert apply_operator(op, series).is_zero()

    def test_y_shift(self) -> None:
        """Test y-shifts drop monomials past the y bounds."""
        op = f4_flat_operators()[0]
        y1, y2 = DiffOperator.var(0, 2), DiffOperator.var(1, 2)

        assert y_shift(op, (1, 0), (2, 2)) == y1 * op
        assert y_shift(op, (0, 1), (2, 2)) == y2 * DiffOperator.theta(0, 2) ** 2

    def test_p1_shift_dropped(self) -> None:
        """Test y (theta^2 - q) is dropped as a shift when the y bound allows it."""
        series = build_i(projective_line((4,)))

        found = find_annihilators(series, 2, (2,))

        assert found == [DiffOperator.theta(0) ** 2 - DiffOperator.var(0)]

    @pytest.mark.slow
    def test_f4_minimal_generators(self) -> None:
        """Test the F4 search returns exactly the two flat operators and none of their y-shifts."""
        j_function = scalar_run(hirzebruch(4, (3, 4))).J
        flat = shift_by_mirror(j_function, extract_mirror(j_function))

        found = find_annihilators(flat, 2, (2, 2))

        assert len(found) == 2
        assert all(op in found for op in f4_flat_operators())


class TestConnection:
    """Tests for connection matrices."""

    def test_p1_gauge_fixed(self) -> None:
        """Test the quantum multiplication by p on P1: rows (0, 1) and (q, 0)."""
        series, _, pair = _p1_pair()

        omega = omega_hat_from_r(pair, series.ring, 0)

        assert omega.kind == "gauge_fixed"
        assert omega.rational(0, 1) == {(0,): 1}
        assert omega.rational(1, 0) == {(1,): 1}
        assert omega.entry(0, 0).is_zero()
        assert omega.entry(1, 1).is_zero()

    def test_gauge_fix_agrees(self) -> None:
        """Test the gauge transformation of the raw matrix matches the R construction."""
        series, solution, pair = _p1_pair()

        fixed = gauge_fix(raw_connection(solution, 0), pair, series.ring)

        assert fixed.matrix == omega_hat_from_r(pair, series.ring, 0).matrix

    def test_quantum_relation(self) -> None:
        """Test p * p = q in the P1 quantum ring."""
        series, _, pair = _p1_pair()
        omega = omega_hat_from_r(pair, series.ring, 0)
        op = DiffOperator.theta(0) ** 2 - DiffOperator.var(0)

        assert quantum_relation_residual(op, [omega]).is_zero()

    def test_f1_flatness(self) -> None:
        """Test the F1 gauge-fixed matrices commute and are integrable."""
        omegas = matrix_run(hirzebruch(1, (2, 2))).omega_hats()

        assert all(o.is_hbar_free() for o in omegas)
        assert flatness_residual(omegas, 0, 1).is_zero()


class TestG1Matrices:
    """Tests for the G1 connection matrices against the stored tables."""

    def test_tables_commute(self) -> None:
        """Test the stored gauge-fixed matrices commute."""
        first, second = (table_matrix(t, (2, 2)) for t in G1_OMEGA_HAT)

        assert commutator(first, second).is_zero()

    def test_printed_last_row_does_not_commute(self) -> None:
        """Test last rows scaled by 5 leave an 8 q1 q2^2 entry in the commutator."""
        factor = G1_PRINTED_LAST_ROW_SCALE["omega_hat"]
        first, second = (table_matrix(_scaled_last_row(t, factor), (2, 2)) for t in G1_OMEGA_HAT)

        assert commutator(first, second).entry(3, 1).rationals() == {(1, 2): 8}

    @pytest.mark.slow
    def test_gauge_fixed(self) -> None:
        """Test the gauge-fixed matrices, their last rows and their commutator."""
        omegas = matrix_run(g_space(1, (2, 2))).omega_hats(check_gauge=True)

        assert omegas[0].rational(5, 1) == {(1, 2): -6}
        assert omegas[1].rational(5, 1) == {(0, 1): 1, (1, 2): -12}
        for omega, table in zip(omegas, G1_OMEGA_HAT, strict=True):
            assert matrix_mismatches(omega.matrix, table) == []
        assert commutator(omegas[0].matrix, omegas[1].matrix).is_zero()

    @pytest.mark.slow
    def test_flat_in_g_minus_one_basis(self) -> None:
        """Test the flat matrices written in the G-1 basis."""
        run = matrix_run(g_space(1, (3, 3)))
        ring_map = linear_substitute(run.spec.ring, g_space(-1, (3, 3)).ring, ((1, 0), (1, 1)))

        flats = to_flat(run.omega_hats(), run.mirror, ring_map)

        assert flats[1].rational(5, 1) == {(0, 1): 1, (1, 2): -1}
        for j, flat in enumerate(flats):
            skip = [(r, c) for (m, r, c) in G1_OMEGA_TILDE_UNCHECKED if m == j]
            assert matrix_mismatches(flat.matrix, G1_OMEGA_TILDE[j], skip=skip) == []


def test_rational_coefficients_exact() -> None:
    """Test the P1 matrix carries exact rationals."""
    series, _, pair = _p1_pair(2)
    omega = omega_hat_from_r(pair, series.ring, 0)

    assert all(isinstance(c, Fraction) for c in omega.rational(1, 0).values())
