"""Tests for the formal module."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qcoh.errors import BadConstantTerm, BoxMismatch, NonInvertibleFactor, NotConverged
from qcoh.formal import (
    BiLaurent,
    MatrixSeries,
    QSeries,
    ScalarSeries,
    SeriesMap,
    compose,
    degrees_in_box,
    exp_series,
    invert_linear,
    invert_map,
    log_series,
    reciprocal,
    substitute,
    substitute_monomial,
)
from qcoh.presets import projective_line
from qcoh.types import Window

P1 = projective_line().ring
WINDOW = Window(-4, 4)

rationals = st.fractions(min_value=-10, max_value=10, max_denominator=12)


def test_degrees_in_box_order() -> None:
    """Test degrees are listed by total degree then lex."""
    assert degrees_in_box((1, 1)) == [(0, 0), (0, 1), (1, 0), (1, 1)]


class TestBiLaurent:
    """Tests for hbar/lambda Laurent polynomials."""

    def test_window_truncation(self) -> None:
        """Test terms outside the window are dropped."""
        x = BiLaurent({(5, 0): 1, (1, 0): 2}, Window(0, 2))

        assert x.terms == {(1, 0): Fraction(2)}

    def test_product_truncates(self) -> None:
        """Test products drop exponents beyond the window."""
        x = BiLaurent({(1, 0): 1, (0, 0): 1}, Window(0, 1))

        assert (x * x).terms == {(0, 0): 1, (1, 0): 2}

    def test_zero_coefficients_not_stored(self) -> None:
        """Test cancellation removes the slot."""
        x = BiLaurent.monomial(3, -1, 0, WINDOW)

        assert not (x - x).terms
        assert not (x - x)

    def test_parts(self) -> None:
        """Test the hbar sign split."""
        x = BiLaurent({(-2, 0): 1, (0, 0): 2, (1, 0): 3}, WINDOW)

        assert x.negative_hbar().terms == {(-2, 0): 1}
        assert x.nonnegative_hbar().terms == {(0, 0): 2, (1, 0): 3}
        assert x.min_hbar() == -2
        assert x.max_hbar() == 1

    def test_compares_with_rationals(self) -> None:
        """Test equality against plain numbers."""
        assert BiLaurent.const(Fraction(1, 2)) == Fraction(1, 2)


class TestInvertLinear:
    """Tests for inverting cls + m hbar + c lambda."""

    def test_inverse_of_hbar(self) -> None:
        """Test 1 / hbar."""
        inv = invert_linear(P1, P1.zero(), 1, Fraction(0), WINDOW)

        assert inv.comps[0].terms == {(-1, 0): 1}

    def test_nilpotent_part(self) -> None:
        """Test 1 / (p + hbar) = 1/hbar - p/hbar^2."""
        inv = invert_linear(P1, P1.generator(0), 1, Fraction(0), WINDOW)

        assert inv.comps[0].terms == {(-1, 0): 1}
        assert inv.comps[1].terms == {(-2, 0): -1}

    def test_lambda_expansion(self) -> None:
        """Test 1 / (hbar + lambda) expanded in 1/lambda."""
        window = Window(-4, 4, -4, 4)
        inv = invert_linear(P1, P1.zero(), 1, Fraction(1), window, expand="lambda")

        assert inv.comps[0].slot(0, -1) == 1
        assert inv.comps[0].slot(1, -2) == -1
        assert inv.comps[0].slot(2, -3) == 1

    def test_no_unit_part(self) -> None:
        """Test that a purely nilpotent factor cannot be inverted."""
        with pytest.raises(NonInvertibleFactor):
            invert_linear(P1, P1.generator(0), 0, Fraction(0), WINDOW)


class TestScalarSeries:
    """Tests for rational and BiLaurent q-series."""

    def test_product_truncates_to_box(self) -> None:
        """Test (1 + q)^3 in box (2,)."""
        s = ScalarSeries({(0,): 1, (1,): 1}, (2,))

        assert (s**3).rationals() == {(0,): 1, (1,): 3, (2,): 3}

    def test_box_mismatch(self) -> None:
        """Test series over different boxes cannot be added."""
        with pytest.raises(BoxMismatch):
            ScalarSeries.one((2,)) + ScalarSeries.one((3,))

    def test_reciprocal_geometric(self) -> None:
        """Test 1 / (1 - q) = sum q^n."""
        s = ScalarSeries({(0,): 1, (1,): -1}, (4,))

        assert reciprocal(s).rationals() == {(n,): 1 for n in range(5)}

    def test_reciprocal_needs_constant(self) -> None:
        """Test that a zero constant term is refused."""
        with pytest.raises(BadConstantTerm):
            reciprocal(ScalarSeries.variable(0, (3,)))

    def test_exp_needs_nilpotent_constant(self) -> None:
        """Test exp refuses a unit constant term."""
        with pytest.raises(BadConstantTerm):
            exp_series(ScalarSeries.one((3,)))

    def test_exp_of_q(self) -> None:
        """Test exp(q) = sum q^n / n!."""
        result = exp_series(ScalarSeries.variable(0, (4,))).rationals()

        assert result == {(0,): 1, (1,): 1, (2,): Fraction(1, 2), (3,): Fraction(1, 6), (4,): Fraction(1, 24)}

    def test_q_derivative_and_theta(self) -> None:
        """Test q d/dq and hbar q d/dq."""
        s = ScalarSeries({(2,): 5}, (3,), WINDOW)

        assert s.q_derivative(0).rationals() == {(2,): 10}
        assert s.theta(0).coefficient((2,)).terms == {(1, 0): 10}

    def test_rationals_refuses_hbar(self) -> None:
        """Test that hbar-carrying coefficients are not plain rationals."""
        s = ScalarSeries({(1,): BiLaurent.monomial(1, -1, 0, WINDOW)}, (3,), WINDOW)

        with pytest.raises(ValueError, match="not a plain rational"):
            s.rationals()


@given(st.lists(rationals, min_size=4, max_size=4))
def test_log_inverts_exp(coeffs: list[Fraction]) -> None:
    """Test log(exp(s)) = s for s without constant term."""
    s = ScalarSeries({(n + 1,): c for n, c in enumerate(coeffs)}, (4,))

    assert log_series(exp_series(s)) == s


class TestSeriesMap:
    """Tests for changes of variables."""

    def test_inverse_has_catalan_coefficients(self) -> None:
        """Test q = y v(y) inverts y = q (1 + q)."""
        box = (5,)
        forward = SeriesMap([ScalarSeries({(0,): 1, (1,): 1}, box)], box)
        backward = invert_map(forward)

        assert backward.units[0].rationals() == {
            (0,): 1,
            (1,): -1,
            (2,): 2,
            (3,): -5,
            (4,): 14,
            (5,): -42,
        }

    def test_compose_with_inverse_is_identity(self) -> None:
        """Test a map composed with its inverse."""
        box = (2, 2)
        forward = SeriesMap(
            [
                ScalarSeries({(0, 0): 1, (1, 0): 2, (0, 1): -1}, box),
                ScalarSeries({(0, 0): 1, (1, 1): 3}, box),
            ],
            box,
        )

        assert compose(forward, invert_map(forward)).is_identity()

    def test_inversion_round_limit(self) -> None:
        """Test a round limit below the box degree stops the inversion."""
        box = (5,)
        forward = SeriesMap([ScalarSeries({(0,): 1, (1,): 1}, box)], box)

        with pytest.raises(NotConverged, match="within 2 rounds"):
            invert_map(forward, max_rounds=2)

    def test_leading_coefficient_checked(self) -> None:
        """Test unit series must start with 1."""
        with pytest.raises(BadConstantTerm):
            SeriesMap([ScalarSeries({(0,): 2}, (3,))], (3,))

    def test_substitute_scalar(self) -> None:
        """Test q -> y (1 + y) applied to q."""
        box = (3,)
        change = SeriesMap([ScalarSeries({(0,): 1, (1,): 1}, box)], box)

        result = substitute(ScalarSeries.variable(0, box), change)

        assert result.rationals() == {(1,): 1, (2,): 1}


def test_substitute_monomial() -> None:
    """Test q1 -> y1 y2, q2 -> y2."""
    s = ScalarSeries({(1, 1): 3, (1, 0): 1}, (2, 2))

    result = substitute_monomial(s, ((1, 1), (0, 1)), (2, 2))

    assert result.rationals() == {(1, 2): 3, (1, 1): 1}


class TestQSeries:
    """Tests for cohomology-valued series."""

    def test_theta_on_prefactor(self) -> None:
        """Test theta acting on exp(p log q / hbar) multiplies by p."""
        one = QSeries.one(P1, (3,), WINDOW, prefactor=True)

        result = one.theta(0)

        assert result.extract(0, 0, 1).rationals() == {(0,): 1}
        assert result.extract(0, 0, 0).is_zero()

    def test_theta_without_prefactor(self) -> None:
        """Test theta on a plain series only differentiates."""
        s = QSeries.from_scalar(P1, ScalarSeries({(2,): 1}, (3,), WINDOW))

        assert s.theta(0).extract(1, 0, 0).rationals() == {(2,): 2}

    def test_two_prefactors_refused(self) -> None:
        """Test that only one factor may carry the prefactor."""
        one = QSeries.one(P1, (3,), WINDOW, prefactor=True)

        with pytest.raises(ValueError, match="prefactor"):
            one * one


class TestMatrixSeries:
    """Tests for matrices of series."""

    def test_inverse(self) -> None:
        """Test M M^-1 = 1 for a unipotent matrix."""
        box = (3,)
        q = ScalarSeries.variable(0, box)
        m = MatrixSeries(
            [[ScalarSeries.one(box), q], [ScalarSeries.zero(box), ScalarSeries.one(box) + q]],
            box,
        )

        assert m @ m.inverse() == MatrixSeries.identity(2, box)

    def test_singular_constant_term(self) -> None:
        """Test a singular constant term is refused."""
        with pytest.raises(BadConstantTerm):
            MatrixSeries.constant([[1, 1], [1, 1]], (2,)).inverse()

    def test_classical(self) -> None:
        """Test the q = 0 part."""
        m = MatrixSeries.constant([[1, 2], [3, 4]], (2,))

        assert m.classical() == [[1, 2], [3, 4]]
