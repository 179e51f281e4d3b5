"""Tests for the CLI module."""

import json
import pathlib
import tempfile
from fractions import Fraction

import pytest
import yaml

from qcoh.cli import build_parser, config_from_args, main, resolve_geometry, run
from qcoh.config import RunConfig
from qcoh.errors import ConfigError


def _main(argv: list[str]) -> int:
    with pytest.raises(SystemExit) as excinfo:
        main([*argv, "--no-log-file"])
    return int(excinfo.value.code or 0)


class TestParser:
    """Tests for argument parsing and config merging."""

    def test_connection_flags(self) -> None:
        """Test connection options land in the run options."""
        args = build_parser().parse_args(
            ["connection", "--preset", "G1", "--stage", "flat", "--target", "Gm1", "--box", "2,2"]
        )

        config = config_from_args(args)

        assert config.command == "connection"
        assert config.preset == "G1"
        assert config.box == (2, 2)
        assert config.options["stage"] == "flat"
        assert config.options["ring_map"] == "1,0;0,1"

    def test_windows_and_lambda(self) -> None:
        """Test window pairs and the lambda value."""
        args = build_parser().parse_args(["ifun", "-p", "X1", "--hbar-window=-8,2", "--lambda", "1/2"])

        config = config_from_args(args)

        assert config.hbar_window == (-8, 2)
        assert config.lam == Fraction(1, 2)
        assert config.format == "json"

    def test_unknown_suite_rejected(self) -> None:
        """Test suite names are checked by the parser."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["verify", "--suite", "bogus"])

    def test_run_file_merged_with_flags(self) -> None:
        """Test flags override run-file values."""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".yaml", delete=False) as f:
            yaml.dump({"command": "localize", "k": 2, "z": "-1", "dmax": 2}, f)
            path = pathlib.Path(f.name)

        try:
            args = build_parser().parse_args(["localize", "--config", str(path), "--dmax", "3"])
            config = config_from_args(args)
        finally:
            path.unlink()

        assert config.options["k"] == 2
        assert config.options["dmax"] == 3


class TestResolveGeometry:
    """Tests for picking the geometry of a run."""

    def test_preset_with_box(self) -> None:
        """Test a preset with a box override."""
        spec = resolve_geometry(RunConfig(command="ring", preset="F3", box=(2, 4)))

        assert spec.name == "F3"
        assert spec.box == (2, 4)

    def test_neither_given(self) -> None:
        """Test a run without geometry."""
        with pytest.raises(ConfigError, match="--preset or --geometry"):
            resolve_geometry(RunConfig(command="ring"))


def test_run_unknown_command() -> None:
    """Test unknown commands are refused."""
    with pytest.raises(ConfigError, match="Unknown command"):
        run(RunConfig(command="nope"))


class TestMain:
    """Tests for the entry point."""

    def test_no_command_prints_help(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test a bare invocation."""
        with pytest.raises(SystemExit) as excinfo:
            main([])

        assert excinfo.value.code == 2
        assert "Examples:" in capsys.readouterr().out

    def test_ring_json(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test the ring of P1 as JSON."""
        assert _main(["ring", "--preset", "P1"]) == 0

        payload = json.loads(capsys.readouterr().out)
        assert payload["basis"] == ["1", "p1"]
        assert payload["dim"] == 2
        assert payload["mult"]["p1"] == [["0/1", "1/1"], ["0/1", "0/1"]]

    def test_error_payload(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test errors are reported as JSON with exit status 1."""
        assert _main(["ring", "--preset", "Nope"]) == 1

        payload = json.loads(capsys.readouterr().out)
        assert payload["error"] == "ConfigError"
        assert "Unknown preset" in payload["message"]

    def test_bigq_other_preset(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test bigq refuses geometries other than F3."""
        assert _main(["bigq", "--preset", "P1"]) == 1

        payload = json.loads(capsys.readouterr().out)
        assert payload["error"] == "ConfigError"
        assert "only on the F3 preset, got P1" in payload["message"]

    def test_localize(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test the z = -1 table for k = 1 through q^3."""
        assert _main(["localize", "--k", "1", "--z", "-1", "--dmax", "3"]) == 0

        payload = json.loads(capsys.readouterr().out)
        assert payload["z"] == "-1/1"
        assert [r["coeff"] for r in payload["coefficients"]] == ["1/1", "-7/8", "55/27"]

    def test_localize_text_to_file(self) -> None:
        """Test text output written to a file."""
        with tempfile.TemporaryDirectory() as tmp:
            out = pathlib.Path(tmp) / "table.txt"

            assert _main(["localize", "--k", "2", "--dmax", "2", "-f", "text", "-o", str(out)]) == 0

            assert out.read_text() == "q^1: 1/1\nq^2: 17/8\n"

    def test_ifun_rows(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Test the I-function rows of P1 at degree one."""
        assert _main(["ifun", "--preset", "P1", "--box", "1"]) == 0
        plain = json.loads(capsys.readouterr().out)

        assert plain["geometry"] == "P1"
        assert {"degree": [1], "basis": "p1", "hbar": -3, "lambda": 0, "coeff": "-2/1"} in plain["series"]
