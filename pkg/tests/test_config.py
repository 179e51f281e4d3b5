"""Tests for the config module."""

import pathlib
import tempfile
from collections.abc import Iterator
from fractions import Fraction
from typing import Any

import pytest
import yaml

from qcoh.config import RunConfig, env_box, geometry_from_dict, load_geometry, load_run_config, parse_box
from qcoh.errors import ConfigError
from qcoh.types import Window

P1_DATA: dict[str, Any] = {"weights": [[1, 1]], "relations": [[0, 1]]}


@pytest.fixture
def yaml_file() -> Iterator[Any]:
    """Write mappings to temporary YAML files and remove them afterwards."""
    paths: list[pathlib.Path] = []

    def write(data: object) -> pathlib.Path:
        with tempfile.NamedTemporaryFile(mode="w", suffix=".yaml", delete=False) as f:
            yaml.dump(data, f)
            path = pathlib.Path(f.name)
        paths.append(path)
        return path

    yield write
    for path in paths:
        path.unlink()


class TestLoadGeometry:
    """Tests for geometry files."""

    def test_projective_line(self, yaml_file: Any) -> None:
        """Test a column-collection relation builds H*(P1)."""
        spec = load_geometry(yaml_file({**P1_DATA, "name": "line", "box": [4]}))

        assert spec.name == "line"
        assert spec.box == (4,)
        assert spec.ring.basis_names == ("1", "p1")
        assert spec.twists == ()

    def test_name_defaults_to_stem(self, yaml_file: Any) -> None:
        """Test the file stem names an unnamed geometry."""
        path = yaml_file(P1_DATA)

        assert load_geometry(path).name == path.stem

    def test_missing_file(self) -> None:
        """Test error handling for a missing file."""
        with pytest.raises(ConfigError, match="not found"):
            load_geometry(pathlib.Path("/nonexistent/geometry.yaml"))

    def test_invalid_yaml(self) -> None:
        """Test error handling for unparsable YAML."""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".yaml", delete=False) as f:
            f.write("weights: [[1, 1]\nrelations: {")
            path = pathlib.Path(f.name)

        try:
            with pytest.raises(ConfigError, match="Cannot parse"):
                load_geometry(path)
        finally:
            path.unlink()

    def test_term_relation(self) -> None:
        """Test relations given as explicit terms."""
        data = {"weights": [[1, 1]], "relations": [[{"monomial": [2], "coeff": "1"}]]}

        spec = geometry_from_dict(data)

        assert spec.relations == ({(2,): Fraction(1)},)

    def test_twists_take_lambda_weights(self) -> None:
        """Test twist weights fall back to the lambda list."""
        data = {
            **P1_DATA,
            "lambda": ["1", "-1/2"],
            "twists": [{"class": [-1]}, {"class": [-1], "weight": 3, "expand": "hbar"}],
        }

        spec = geometry_from_dict(data)

        assert spec.twists[0].weight == 1
        assert spec.twists[0].expand == "lambda"
        assert spec.twists[1].weight == 3
        assert spec.twists[1].expand == "hbar"

    @pytest.mark.parametrize(
        ("data", "match"),
        [
            ([1, 2], "must contain a mapping"),
            ({"weights": [[1, 1]]}, "missing 'relations'"),
            ({"weights": [[1, 1], [1]], "relations": [[0]]}, "equal length"),
            ({"weights": [[1, 1]], "relations": [[0, 5]]}, "outside the weight matrix"),
            ({**P1_DATA, "box": [2, 2]}, "must have 1 entries"),
            ({**P1_DATA, "twists": [{"class": [1, 0]}]}, "must have 1 entries"),
            ({**P1_DATA, "twists": [{"class": [1], "kind": "sideways"}]}, "kind"),
            ({**P1_DATA, "twists": [{"class": [1], "weight": "x"}]}, "rational number"),
            ({**P1_DATA, "eta": [[1]], "frame": [[0], [1]]}, "same size"),
        ],
    )
    def test_invalid_geometry(self, data: object, match: str) -> None:
        """Test malformed geometry data is refused."""
        with pytest.raises(ConfigError, match=match):
            geometry_from_dict(data)


class TestParseBox:
    """Tests for box parsing."""

    def test_string_and_list(self) -> None:
        """Test both spellings."""
        assert parse_box("3,4") == (3, 4)
        assert parse_box([2]) == (2,)

    @pytest.mark.parametrize("value", ["", "a,b", [-1], 5])
    def test_invalid(self, value: object) -> None:
        """Test bad boxes are refused."""
        with pytest.raises(ConfigError):
            parse_box(value)


def test_env_box(monkeypatch: pytest.MonkeyPatch) -> None:
    """Test the default box from the environment."""
    monkeypatch.setenv("QCOH_DEFAULT_BOX", "2,5")

    assert env_box() == (2, 5)
    assert geometry_from_dict({"weights": [[1, 1, 0], [0, 1, 1]], "relations": [[0, 1], [1, 2]]}).box == (2, 5)


def test_env_box_unset(monkeypatch: pytest.MonkeyPatch) -> None:
    """Test the fallback when the variable is unset."""
    monkeypatch.delenv("QCOH_DEFAULT_BOX", raising=False)

    assert env_box() is None
    assert geometry_from_dict(P1_DATA).box == (3,)


class TestRunConfig:
    """Tests for run configuration."""

    def test_bad_format(self) -> None:
        """Test unknown output formats are refused."""
        with pytest.raises(ConfigError, match="format"):
            RunConfig(command="ring", format="xml")

    def test_merged(self) -> None:
        """Test overrides replace fields and fill options."""
        base = RunConfig(command="ring", preset="P1", options={"k": 1})

        merged = base.merged({"preset": "F3", "format": None, "dmax": 4})

        assert merged.preset == "F3"
        assert merged.format == "json"
        assert merged.options == {"k": 1, "dmax": 4}
        assert base.preset == "P1"

    def test_window_override(self) -> None:
        """Test explicit bounds replace the default ones."""
        config = RunConfig(command="ifun", hbar_window=(-6, 2))

        assert config.window_override(Window(-10, 4, -3, 3)) == Window(-6, 2, -3, 3)

    def test_load_run_config(self, yaml_file: Any) -> None:
        """Test a run file with extra keys."""
        path = yaml_file({"command": "localize", "k": 2, "z": "-1", "lambda": "1/2", "hbar_window": [-8, 2]})

        config = load_run_config(path)

        assert config.command == "localize"
        assert config.lam == Fraction(1, 2)
        assert config.hbar_window == (-8, 2)
        assert config.options == {"k": 2, "z": "-1"}

    def test_run_file_needs_command(self, yaml_file: Any) -> None:
        """Test a run file without a command."""
        with pytest.raises(ConfigError, match="'command'"):
            load_run_config(yaml_file({"preset": "P1"}))

    def test_empty_window(self, yaml_file: Any) -> None:
        """Test an empty window is refused."""
        with pytest.raises(ConfigError, match="is empty"):
            load_run_config(yaml_file({"command": "ifun", "hbar_window": [3, 1]}))
