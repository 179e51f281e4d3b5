"""Tests for the golden module."""

from fractions import Fraction

import pytest

from qcoh.formal import MatrixSeries, ScalarSeries
from qcoh.golden import matrix_mismatches, run_suites, series_mismatches


def test_unknown_suite() -> None:
    """Test unknown suite names are refused."""
    with pytest.raises(ValueError, match="Unknown suite"):
        run_suites("bogus")


class TestMismatches:
    """Tests for exact comparisons."""

    def test_exact_reports_extra_terms(self) -> None:
        """Test exact comparison sees terms missing from the table."""
        s = ScalarSeries({(1,): 2, (2,): 5}, (2,))

        assert series_mismatches(s, {(1,): Fraction(2)}) == ["(2,): got 5, expected 0"]
        assert series_mismatches(s, {(1,): Fraction(2)}, exact=False) == []

    def test_wrong_value(self) -> None:
        """Test a differing coefficient."""
        s = ScalarSeries({(1,): 3}, (2,))

        assert series_mismatches(s, {(1,): Fraction(2)}) == ["(1,): got 3, expected 2"]

    def test_matrix_skip(self) -> None:
        """Test skipped entries are not compared."""
        m = MatrixSeries.constant([[1, 0], [0, 7]], (1,))
        expected = [[{(0,): Fraction(1)}, {}], [{}, {(0,): Fraction(1)}]]

        assert matrix_mismatches(m, expected) == ["(1,1) (0,): got 7, expected 1"]
        assert matrix_mismatches(m, expected, skip=[(1, 1)]) == []


def test_localization_suite_passes() -> None:
    """Test the localization checks at low degree."""
    results = run_suites("localization", {"dmax": 4})

    assert results
    assert all(r.suite == "localization" for r in results)
    assert [r.name for r in results if not r.passed] == []


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["g1", "f4"])
def test_suite_passes(suite: str) -> None:
    """Test the G1 and F4 suites pass in full."""
    results = run_suites(suite)

    assert [r.name for r in results if not r.passed] == []
