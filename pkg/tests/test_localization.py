"""Tests for the localization module."""

from fractions import Fraction

import pytest

from qcoh.errors import ConfigError, ZeroDenominator
from qcoh.golden import LOCALIZATION_ANTIDIAGONAL, X1_ANTIDIAGONAL_W_HAT, series_mismatches
from qcoh.localization import (
    LambdaSeries,
    LocConfig,
    a_coeff,
    assemble_F,
    brute_force_F,
    derivative_check,
    enumerate_colored_trees,
    lambda_order_stable,
    orientation_sign,
)


class TestLocConfig:
    """Tests for parameter validation."""

    def test_default_lambda_order(self) -> None:
        """Test lambda_order defaults to 2 d_max - 2."""
        cfg = LocConfig(1, Fraction(-1), 4)

        assert cfg.order == 6
        assert cfg.z == Fraction(-1)

    @pytest.mark.parametrize(
        ("k", "d_max", "lambda_order", "match"),
        [
            (-1, 3, None, "k must be nonnegative"),
            (1, 0, None, "d_max must be positive"),
            (1, 3, 3, "below 2 d_max - 2"),
        ],
    )
    def test_invalid(self, k: int, d_max: int, lambda_order: int | None, match: str) -> None:
        """Test invalid parameters are refused."""
        with pytest.raises(ConfigError, match=match):
            LocConfig(k, Fraction(1), d_max, lambda_order)


class TestLambdaSeries:
    """Tests for truncated lambda series."""

    def test_inverse(self) -> None:
        """Test 1 / (1 - lambda) = sum lambda^n."""
        assert LambdaSeries([1, -1], 4).inverse() == LambdaSeries([1, 1, 1, 1, 1], 4)

    def test_product_truncates(self) -> None:
        """Test (1 + lambda)^3 at order 2."""
        assert LambdaSeries([1, 1], 2) ** 3 == LambdaSeries([1, 3, 3], 2)

    def test_zero_constant(self) -> None:
        """Test a zero constant term cannot be inverted."""
        with pytest.raises(ZeroDenominator):
            LambdaSeries([0, 1], 3).inverse()


def test_a_coeff_degree_one() -> None:
    """Test a_1 = 1 - 2 lambda for k = 1 and z = -1."""
    cfg = LocConfig(1, Fraction(-1), 3)

    assert a_coeff(cfg, 1) == LambdaSeries([1, -2], cfg.order)


def test_a_coeff_constant_term() -> None:
    """Test the constant term d^{2d} / (d!)^2."""
    cfg = LocConfig(0, Fraction(1), 3)

    assert a_coeff(cfg, 2).coefficient(0) == 4
    assert a_coeff(cfg, 3).coefficient(0) == Fraction(729, 36)


class TestColoredTrees:
    """Tests for tree enumeration."""

    def test_degree_one(self) -> None:
        """Test one edge joining the two fixed points."""
        trees = enumerate_colored_trees(1)

        assert len(trees) == 1
        assert trees[0].automorphisms == 1
        assert sorted(trees[0].colors) == [1, 2]

    def test_degree_two(self) -> None:
        """Test a double edge and two colored paths."""
        trees = enumerate_colored_trees(2)

        assert len(trees) == 3
        assert sorted(t.automorphisms for t in trees) == [1, 2, 2]
        assert all(t.degree == 2 for t in trees)

    def test_colors_alternate(self) -> None:
        """Test adjacent vertices map to different fixed points."""
        for tree in enumerate_colored_trees(3):
            assert all(tree.colors[u] != tree.colors[v] for u, v, _ in tree.edges)


class TestBruteForce:
    """Tests for the direct graph sum."""

    def test_degree_one(self) -> None:
        """Test the single tree contributes 1."""
        assert brute_force_F(LocConfig(1, Fraction(-1), 3), 1) == 1

    def test_degree_limit(self) -> None:
        """Test the brute-force limit."""
        with pytest.raises(ValueError, match="Brute force is limited"):
            brute_force_F(LocConfig(1, Fraction(-1), 6), 5)

    @pytest.mark.parametrize(("k", "z"), [(0, Fraction(1)), (1, Fraction(-1)), (2, Fraction(-1, 2))])
    def test_agrees_with_assembly(self, k: int, z: Fraction) -> None:
        """Test the equations of motion reproduce the graph sum."""
        cfg = LocConfig(k, z, 3)
        assembled = assemble_F(cfg).rationals()

        for d in range(1, 4):
            assert brute_force_F(cfg, d) == assembled.get((d,), Fraction(0))


class TestOrientation:
    """Tests for the sign of the antidiagonal tables."""

    @pytest.mark.parametrize(
        ("k", "z", "d", "sign"),
        [(1, Fraction(-1), 2, -1), (1, Fraction(-1), 3, 1), (2, Fraction(-1), 2, 1), (1, Fraction(1), 2, 1)],
    )
    def test_orientation_sign(self, k: int, z: Fraction, d: int, sign: int) -> None:
        """Test only odd k at negative z flips even degrees."""
        assert orientation_sign(LocConfig(k, z, 3), d) == sign

    def test_both_paths_give_minus_seven_eighths(self) -> None:
        """Test the k = 1, z = -1 coefficient of q^2 on both paths."""
        cfg = LocConfig(1, Fraction(-1), 3)

        assert brute_force_F(cfg, 2) == Fraction(-7, 8)
        assert assemble_F(cfg).rationals()[(2,)] == Fraction(-7, 8)


class TestAssembly:
    """Tests for F(q, z)."""

    @pytest.mark.parametrize("k", [1, 2])
    def test_antidiagonal_low_degrees(self, k: int) -> None:
        """Test the z = -1 tables through q^3."""
        f = assemble_F(LocConfig(k, Fraction(-1), 3))
        expected = {(d,): LOCALIZATION_ANTIDIAGONAL[k][d - 1] for d in range(1, 4)}

        assert series_mismatches(f, expected) == []

    def test_diagonal_is_multiple_covers(self) -> None:
        """Test z = 1 gives 1 / d^3."""
        f = assemble_F(LocConfig(1, Fraction(1), 4))

        assert f.rationals() == {(d,): Fraction(1, d**3) for d in range(1, 5)}

    def test_derivative_matches_readout(self) -> None:
        """Test 4 q dF/dq against the antidiagonal X1 slot."""
        check = derivative_check(LocConfig(1, Fraction(-1), 5))

        assert series_mismatches(check, X1_ANTIDIAGONAL_W_HAT) == []

    def test_lambda_order_is_enough(self) -> None:
        """Test four more lambda powers change nothing."""
        assert lambda_order_stable(LocConfig(2, Fraction(-1), 3))

    @pytest.mark.slow
    @pytest.mark.parametrize("k", [1, 2])
    def test_antidiagonal_full_table(self, k: int) -> None:
        """Test the z = -1 tables through q^10."""
        f = assemble_F(LocConfig(k, Fraction(-1), 10))
        expected = {(d,): c for d, c in enumerate(LOCALIZATION_ANTIDIAGONAL[k], 1)}

        assert series_mismatches(f, expected) == []
