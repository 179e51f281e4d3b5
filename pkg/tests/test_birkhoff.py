"""Tests for the birkhoff module."""

import pytest

from qcoh.birkhoff import (
    birkhoff_matrix,
    birkhoff_scalar,
    build_fundamental,
    factorization_residual,
    j_from_r,
    theta_derivatives,
)
from qcoh.errors import WindowTooSmall
from qcoh.formal import ScalarSeries
from qcoh.ifunction import build_i
from qcoh.presets import hirzebruch, local_curve, projective_line
from qcoh.types import Window


def _has_nonnegative_hbar(series) -> bool:  # noqa: ANN001
    return any(any(d) and v.nonnegative_hbar() for d, v in series.coeffs.items())


class TestScalarBirkhoff:
    """Tests for J from I by theta-derivative elimination."""

    def test_p1_needs_no_elimination(self) -> None:
        """Test J = I for P1, whose I has only negative hbar powers."""
        series = build_i(projective_line((4,)))
        result = birkhoff_scalar(series)

        assert result.J == series
        assert result.coeffs["1"] == ScalarSeries.one((4,), series.window)
        assert result.coeffs["p1"].is_zero()

    def test_local_curve_j_is_negative(self) -> None:
        """Test J of X1 keeps only negative hbar powers beyond degree zero."""
        series = build_i(local_curve(1, "diagonal", (3,)))
        result = birkhoff_scalar(series)

        assert not _has_nonnegative_hbar(result.J)
        assert _has_nonnegative_hbar(series)

    def test_rejects_plain_series(self) -> None:
        """Test the prefactor flag is required."""
        series = build_i(projective_line((2,)))
        plain = series.like(series.coeffs, prefactor=False)

        with pytest.raises(ValueError, match="prefactor"):
            birkhoff_scalar(plain)

    def test_window_too_small(self) -> None:
        """Test a window that cuts I at its lower edge is refused."""
        series = build_i(projective_line((3,)), window=Window(-4, 2))

        with pytest.raises(WindowTooSmall):
            birkhoff_scalar(series)


def test_theta_derivatives_follow_basis() -> None:
    """Test one derivative per basis monomial."""
    series = build_i(hirzebruch(1, (1, 1)))

    assert len(theta_derivatives(series)) == 4


class TestMatrixBirkhoff:
    """Tests for S = Q R."""

    def test_p1_fundamental_solution(self) -> None:
        """Test S(q=0) is the identity and row 0 is I."""
        series = build_i(projective_line((3,)))
        solution = build_fundamental(series)

        assert solution.matrix.classical() == [[1, 0], [0, 1]]
        assert solution.matrix.entry(0, 0) == series.component(0)

    def test_factorization_is_exact(self) -> None:
        """Test Q R = S inside the box for F1."""
        solution = build_fundamental(build_i(hirzebruch(1, (2, 2))))
        pair = birkhoff_matrix(solution)

        assert factorization_residual(pair, solution).is_zero()
        assert pair.Q.classical() == [[int(i == j) for j in range(4)] for i in range(4)]

    def test_row_zero_of_r_is_scalar_j(self) -> None:
        """Test both factorizations give the same J for P1."""
        series = build_i(projective_line((3,)))
        pair = birkhoff_matrix(build_fundamental(series))

        assert j_from_r(pair, series.ring) == birkhoff_scalar(series).J
