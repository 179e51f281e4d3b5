"""Tests for the ifunction and presets modules."""

from fractions import Fraction

import pytest

from qcoh.errors import ConfigError
from qcoh.ifunction import GeometrySpec, Twist, build_i, default_window, i_coefficient, toric_relations, twist_j
from qcoh.presets import canonical_bundle, g_space, get_preset, hirzebruch, local_curve, parse_action, projective_line
from qcoh.types import Window


def test_toric_relations_p1() -> None:
    """Test the single relation p^2 of P1."""
    assert toric_relations(((1, 1),), [(0, 1)]) == ({(2,): Fraction(1)},)


def test_default_window_p1() -> None:
    """Test the window covers ten inverted factors at degree five."""
    assert default_window(projective_line((5,))) == Window(-13, 4, 0, 0)


def test_default_window_equivariant() -> None:
    """Test that equivariant twists open a lambda range."""
    window = default_window(local_curve(1, "diagonal", (3,)))

    assert window.is_equivariant
    assert window.lambda_min == -window.lambda_max


class TestProjectiveLineI:
    """Tests for I_P1 = sum q^d / prod (p + m hbar)^2."""

    def test_constant_term(self) -> None:
        """Test the degree-zero coefficient is 1."""
        spec = projective_line((3,))
        series = build_i(spec)

        assert series.prefactor
        assert series.extract(0, 0, 0).rationals() == {(0,): 1}

    def test_degree_one(self) -> None:
        """Test 1 / (p + hbar)^2 = hbar^-2 - 2 p hbar^-3."""
        coeff = i_coefficient(projective_line((3,)), (1,))

        assert coeff.comps[0].terms == {(-2, 0): 1}
        assert coeff.comps[1].terms == {(-3, 0): -2}

    def test_degree_two(self) -> None:
        """Test the leading terms of 1 / ((p + hbar)(p + 2 hbar))^2."""
        coeff = i_coefficient(projective_line((3,)), (2,))

        assert coeff.comps[0].slot(-4) == Fraction(1, 4)
        assert coeff.comps[1].slot(-5) == Fraction(-3, 4)


def test_local_curve_twist_factors() -> None:
    """Test X_{-1} diagonal: (-p + lambda)^2 / (p + hbar)^2 at degree one."""
    spec = local_curve(-1, "diagonal", (2,))
    window = Window(-8, 6, -6, 6)
    coeff = i_coefficient(spec, (1,), window)

    # lambda^2 hbar^-2 on the unit, -2 lambda hbar^-2 - 2 lambda^2 hbar^-3 on p
    assert coeff.comps[0].slot(-2, 2) == 1
    assert coeff.comps[1].slot(-2, 1) == -2
    assert coeff.comps[1].slot(-3, 2) == -2


def test_twist_j_trivial_class() -> None:
    """Test twisting by the zero class changes nothing."""
    series = build_i(projective_line((3,)))

    assert twist_j(series, (0,)) == series


class TestPresets:
    """Tests for the named geometries."""

    @pytest.mark.parametrize(
        ("name", "dim"),
        [("P1", 2), ("X1", 2), ("Xm1", 2), ("G1", 6), ("Gm1", 6), ("F3", 4), ("KF3", 4)],
    )
    def test_ring_dimensions(self, name: str, dim: int) -> None:
        """Test ring dimensions of the presets."""
        assert get_preset(name).ring.dim == dim

    @pytest.mark.parametrize("name", ["P1", "X2", "G0", "G1", "Gm1", "F1", "F3", "F4"])
    def test_c1_matches_expected(self, name: str) -> None:
        """Test the weight row sums agree with the recorded first Chern class."""
        spec = get_preset(name)

        assert spec.c1 == spec.expected_c1

    def test_box_override(self) -> None:
        """Test the box argument."""
        assert get_preset("F3", box=(2, 5)).box == (2, 5)

    def test_x0_defaults_to_x0_action(self) -> None:
        """Test the k = 0 curve uses the x0 action unless told otherwise."""
        spec = get_preset("X0")

        assert spec.twists[0].weight == 0
        assert spec.twists[1].weight == 1

    def test_canonical_bundle_twist(self) -> None:
        """Test K_F3 carries minus c1 = (1, -2)."""
        spec = canonical_bundle(3)

        assert spec.canonical_twist == Twist((1, -2), Fraction(0), "hbar")
        assert spec.name == "KF3"

    def test_hirzebruch_frame_only_for_f3(self) -> None:
        """Test the intersection frame is attached to F3."""
        assert hirzebruch(3).intersection_form is not None
        assert hirzebruch(1).intersection_form is None

    @pytest.mark.parametrize("name", ["Z3", "X", "F", "p1"])
    def test_unknown_preset(self, name: str) -> None:
        """Test unknown names are refused."""
        with pytest.raises(ConfigError, match="Unknown preset"):
            get_preset(name)

    def test_g_space_range(self) -> None:
        """Test G_k needs k >= -1."""
        with pytest.raises(ValueError, match="k >= -1"):
            g_space(-2)


class TestParseAction:
    """Tests for fiber action parsing."""

    def test_named(self) -> None:
        """Test the named actions."""
        assert parse_action("antidiagonal") == (-1, 1)
        assert parse_action(None) == (1, 1)

    def test_custom(self) -> None:
        """Test custom(a,b)."""
        assert parse_action("custom(1/2, -3)") == (Fraction(1, 2), Fraction(-3))

    def test_unknown(self) -> None:
        """Test unknown actions are refused."""
        with pytest.raises(ConfigError, match="Unknown torus action"):
            parse_action("sideways")


def test_with_box_keeps_data() -> None:
    """Test with_box only changes the box."""
    spec = local_curve(2, "antidiagonal", (3,))
    moved = spec.with_box((6,))

    assert isinstance(moved, GeometrySpec)
    assert moved.box == (6,)
    assert moved.twists == spec.twists
