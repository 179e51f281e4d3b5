"""Tests for the mirror module."""

from fractions import Fraction

import pytest

from qcoh.birkhoff import birkhoff_scalar
from qcoh.formal import ScalarSeries
from qcoh.golden import (
    F3_MIRROR,
    X1_ANTIDIAGONAL_T,
    X1_ANTIDIAGONAL_TILDE,
    X1_ANTIDIAGONAL_W_HAT,
    X1_DIAGONAL_T,
    X1_DIAGONAL_TILDE,
    series_mismatches,
)
from qcoh.ifunction import build_i
from qcoh.localization import LocConfig, derivative_check
from qcoh.mirror import (
    InvariantTable,
    extract_mirror,
    gopakumar_vafa,
    gw_readout,
    proportionality_constant,
    shift_by_mirror,
)
from qcoh.pipeline import scalar_run
from qcoh.presets import hirzebruch, local_curve, projective_line


def _j(k: int, action: str, order: int):  # noqa: ANN202
    box = (order,)
    return birkhoff_scalar(build_i(local_curve(k, action, box), box)).J


def test_p1_mirror_is_trivial() -> None:
    """Test P1 has no mirror correction."""
    j_function = birkhoff_scalar(build_i(projective_line((3,)))).J
    mirror = extract_mirror(j_function)

    assert mirror.is_trivial()
    assert shift_by_mirror(j_function, mirror) is j_function
    assert mirror.divisor_shift(0).is_zero()


class TestLocalCurveMirror:
    """Tests for the mirror maps of O(1) + O(-3) over P1."""

    @pytest.mark.parametrize(
        ("action", "t", "tilde"),
        [
            ("diagonal", X1_DIAGONAL_T, X1_DIAGONAL_TILDE),
            ("antidiagonal", X1_ANTIDIAGONAL_T, X1_ANTIDIAGONAL_TILDE),
        ],
    )
    def test_maps(self, action: str, t: dict, tilde: dict) -> None:
        """Test t and t~ through q^3."""
        mirror = extract_mirror(_j(1, action, 3))
        low = {d: c for d, c in t.items() if d[0] <= 3}
        low_tilde = {d: c for d, c in tilde.items() if d[0] <= 3}

        assert series_mismatches(mirror.divisor_shift(0), low) == []
        assert series_mismatches(mirror.tilde, low_tilde) == []

    def test_inverse_map_undoes_divisor_map(self) -> None:
        """Test y(q(y)) = y."""
        mirror = extract_mirror(_j(1, "antidiagonal", 3))
        y = ScalarSeries.variable(0, (3,))
        q_of_y = mirror.in_flat(y)

        assert q_of_y.rational((1,)) == 1
        assert q_of_y.rational((2,)) == -X1_ANTIDIAGONAL_T[(1,)]


@pytest.mark.slow
def test_f3_mirror_map() -> None:
    """Test the four F3 maps through q1^6 q2^3."""
    mirror = extract_mirror(scalar_run(hirzebruch(3, (6, 3))).J)

    for a, expected in F3_MIRROR.items():
        assert series_mismatches(mirror.series(a), expected) == []


class TestGWReadout:
    """Tests for the shifted and stripped J of local curves."""

    @pytest.mark.slow
    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_dilogarithm_slots(self, k: int) -> None:
        """Test the lambda p hbar^-2 slot is -2 Li2 and the lambda^2 slot is Li2."""
        readout = gw_readout(_j(k, "diagonal", 4))

        assert readout.W_hat.rationals() == {(n,): Fraction(-2, n * n) for n in range(1, 5)}
        assert readout.W_tilde_hat.rationals() == {(n,): Fraction(1, n * n) for n in range(1, 5)}
        assert readout.constant == Fraction(-1, 2)

    def test_antidiagonal_w_hat(self) -> None:
        """Test the antidiagonal lambda p slot and the sign of t~ through q^3."""
        readout = gw_readout(_j(1, "antidiagonal", 3))
        low = {d: c for d, c in X1_ANTIDIAGONAL_W_HAT.items() if d[0] <= 3}

        assert readout.mirror.tilde.rational((1,)) == 2
        assert series_mismatches(readout.W_hat, low) == []

    def test_antidiagonal_agrees_with_localization(self) -> None:
        """Test W^ equals 4 q dF/dq of the z = -1 graph sum."""
        readout = gw_readout(_j(1, "antidiagonal", 3))
        check = derivative_check(LocConfig(1, Fraction(-1), 3))

        assert series_mismatches(readout.W_hat, check.rationals()) == []

    @pytest.mark.slow
    def test_antidiagonal_through_q5(self) -> None:
        """Test t, t~ and W^ of the antidiagonal action through q^5."""
        readout = gw_readout(_j(1, "antidiagonal", 5))

        assert series_mismatches(readout.mirror.divisor_shift(0), X1_ANTIDIAGONAL_T, exact=False) == []
        assert series_mismatches(readout.mirror.tilde, X1_ANTIDIAGONAL_TILDE) == []
        assert series_mismatches(readout.W_hat, X1_ANTIDIAGONAL_W_HAT) == []

    def test_slots_are_named(self) -> None:
        """Test slot keys carry basis names."""
        readout = gw_readout(_j(1, "diagonal", 2))

        assert all(name in ("1", "p1") for _, _, name in readout.slots)


class TestProportionality:
    """Tests for c with a = c b."""

    def test_proportional(self) -> None:
        """Test a proportional pair."""
        b = ScalarSeries({(1,): 2, (2,): 4}, (2,))

        assert proportionality_constant(b * Fraction(-1, 4), b) == Fraction(-1, 4)

    def test_not_proportional(self) -> None:
        """Test a non-proportional pair."""
        a = ScalarSeries({(1,): 1, (2,): 1}, (2,))
        b = ScalarSeries({(1,): 1, (2,): 2}, (2,))

        assert proportionality_constant(a, b) is None

    def test_zero_denominator(self) -> None:
        """Test the zero series on the right."""
        zero = ScalarSeries.zero((2,))

        assert proportionality_constant(zero, zero) == 0
        assert proportionality_constant(ScalarSeries.one((2,)), zero) is None


class TestGopakumarVafa:
    """Tests for removing multiple covers."""

    def test_single_variable(self) -> None:
        """Test N_d = sum_{k | d} n_{d/k} / k^3."""
        gw = {(1,): Fraction(3), (2,): Fraction(3, 8) + 5, (3,): Fraction(3, 27), (4,): Fraction(3, 64) + Fraction(5, 8)}

        assert gopakumar_vafa(gw) == {(1,): 3, (2,): 5, (3,): 0, (4,): 0}

    def test_undetermined_propagates(self) -> None:
        """Test a missing lower cell leaves its multiples undetermined."""
        gw = {(1, 1): None, (2, 2): Fraction(7), (1, 2): Fraction(4)}

        result = gopakumar_vafa(gw)

        assert result[(2, 2)] is None
        assert result[(1, 2)] == 4


def test_invariant_table_undetermined() -> None:
    """Test the list of undetermined cells."""
    table = InvariantTable(
        box=(1, 1),
        gw={(0, 0): None, (1, 0): Fraction(1)},
        gv={(0, 0): None, (1, 0): Fraction(1)},
        W=ScalarSeries.zero((1, 1)),
    )

    assert table.undetermined() == [(0, 0)]
