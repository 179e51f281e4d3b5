"""Geometry files, run files and environment defaults."""

import logging
import os
import pathlib
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Any

import yaml

from .errors import ConfigError
from .ifunction import GeometrySpec, Twist, toric_relations
from .types import DEFAULT_DEGREE_CAP, Box, Polynomial, Window, parse_fraction

logger = logging.getLogger(__name__)

BOX_ENV_VAR = "QCOH_DEFAULT_BOX"
OUTPUT_FORMATS = ("json", "text")
TWIST_KINDS = ("numerator", "denominator")


def _read(path: pathlib.Path) -> Any:
    if not path.exists():
        msg = f"Configuration not found at {path}"
        raise ConfigError(msg)
    with path.open() as f:
        try:
            return yaml.safe_load(f)
        except yaml.YAMLError as e:
            msg = f"Cannot parse {path}: {e}"
            raise ConfigError(msg) from e


def parse_box(value: object, key: str = "box") -> Box:
    """
    Read a box from a list of integers or a comma-separated string.

    Raises:
        ConfigError: If an entry is not a nonnegative integer.
    """
    items = value.split(",") if isinstance(value, str) else value
    if not isinstance(items, list | tuple) or not items:
        msg = f"'{key}' must be a non-empty list of integers"
        raise ConfigError(msg)
    try:
        box = tuple(int(x) for x in items)
    except (TypeError, ValueError) as e:
        msg = f"'{key}' must be a list of integers, got {value!r}"
        raise ConfigError(msg) from e
    if any(b < 0 for b in box):
        msg = f"'{key}' entries must be nonnegative, got {box}"
        raise ConfigError(msg)
    return box


def env_box() -> Box | None:
    """The box named by QCOH_DEFAULT_BOX, if set."""
    value = os.environ.get(BOX_ENV_VAR)
    if not value:
        return None
    return parse_box(value, BOX_ENV_VAR)


def _fraction(value: object, key: str) -> Fraction:
    try:
        return parse_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as e:
        msg = f"'{key}' must be a rational number, got {value!r}"
        raise ConfigError(msg) from e


def _int_matrix(value: object, key: str) -> tuple[tuple[int, ...], ...]:
    if not isinstance(value, list) or not value or not all(isinstance(row, list) for row in value):
        msg = f"'{key}' must be a list of integer rows"
        raise ConfigError(msg)
    if len({len(row) for row in value}) != 1:
        msg = f"'{key}' rows must have equal length"
        raise ConfigError(msg)
    try:
        return tuple(tuple(int(x) for x in row) for row in value)
    except (TypeError, ValueError) as e:
        msg = f"'{key}' must contain integers"
        raise ConfigError(msg) from e


def _relation(entry: object, weights: tuple[tuple[int, ...], ...], index: int) -> Polynomial:
    """A relation given as a column collection [j, ...] or as terms [{"monomial": [...], "coeff": "a/b"}]."""
    key = f"relations[{index}]"
    if isinstance(entry, list) and entry and all(isinstance(x, int) for x in entry):
        if any(not 0 <= x < len(weights[0]) for x in entry):
            msg = f"'{key}' names a column outside the weight matrix"
            raise ConfigError(msg)
        return toric_relations(weights, [entry])[0]
    if isinstance(entry, list) and entry and all(isinstance(x, dict) for x in entry):
        poly: Polynomial = {}
        for term in entry:
            if "monomial" not in term:
                msg = f"'{key}' terms need a 'monomial' key"
                raise ConfigError(msg)
            exps = tuple(int(x) for x in term["monomial"])
            if len(exps) != len(weights):
                msg = f"'{key}' monomial {list(exps)} has the wrong number of exponents"
                raise ConfigError(msg)
            poly[exps] = poly.get(exps, Fraction(0)) + _fraction(term.get("coeff", 1), f"{key}.coeff")
        return {e: c for e, c in poly.items() if c}
    msg = f"'{key}' must be a list of column indices or a list of terms"
    raise ConfigError(msg)


def _twist(entry: object, k: int, default_weight: Fraction, index: int) -> Twist:
    key = f"twists[{index}]"
    if not isinstance(entry, dict) or "class" not in entry:
        msg = f"'{key}' must be a mapping with a 'class' key"
        raise ConfigError(msg)
    cls = tuple(int(x) for x in entry["class"])
    if len(cls) != k:
        msg = f"'{key}.class' must have {k} entries"
        raise ConfigError(msg)
    # The factor already follows the sign of the pairing; kind is only checked.
    kind = entry.get("kind", "denominator")
    if kind not in TWIST_KINDS:
        msg = f"'{key}.kind' must be one of {TWIST_KINDS}, got {kind!r}"
        raise ConfigError(msg)
    expand = entry.get("expand", "lambda")
    if expand not in ("lambda", "hbar"):
        msg = f"'{key}.expand' must be 'lambda' or 'hbar', got {expand!r}"
        raise ConfigError(msg)
    weight = _fraction(entry["weight"], f"{key}.weight") if "weight" in entry else default_weight
    return Twist(cls, weight, expand)


def geometry_from_dict(data: object, name: str = "custom") -> GeometrySpec:
    """
    Build a GeometrySpec from parsed geometry data.

    Raises:
        ConfigError: If a key is missing or malformed.
    """
    if not isinstance(data, dict):
        msg = "Geometry file must contain a mapping"
        raise ConfigError(msg)
    for key in ("weights", "relations"):
        if key not in data:
            msg = f"Geometry file is missing '{key}'"
            raise ConfigError(msg)
    weights = _int_matrix(data["weights"], "weights")
    relations_data = data["relations"]
    if not isinstance(relations_data, list) or not relations_data:
        msg = "'relations' must be a non-empty list"
        raise ConfigError(msg)
    relations = tuple(_relation(entry, weights, i) for i, entry in enumerate(relations_data))

    lambdas = [_fraction(x, "lambda") for x in data.get("lambda", [])]
    twists_data = data.get("twists", [])
    if not isinstance(twists_data, list):
        msg = "'twists' must be a list"
        raise ConfigError(msg)
    twists = tuple(
        _twist(entry, len(weights), lambdas[i] if i < len(lambdas) else Fraction(0), i)
        for i, entry in enumerate(twists_data)
    )

    eta = _int_matrix(data["eta"], "eta") if "eta" in data else None
    frame = _int_matrix(data["frame"], "frame") if "frame" in data else None
    if eta is not None and frame is not None and len(eta) != len(frame):
        msg = "'eta' and 'frame' must have the same size"
        raise ConfigError(msg)
    box = parse_box(data["box"]) if "box" in data else (env_box() or (3,) * len(weights))
    if len(box) != len(weights):
        msg = f"'box' must have {len(weights)} entries, got {len(box)}"
        raise ConfigError(msg)

    return GeometrySpec(
        name=str(data.get("name", name)),
        weights=weights,
        relations=relations,
        twists=twists,
        box=box,
        degree_cap=int(data.get("degree_cap", DEFAULT_DEGREE_CAP)),
        frame=frame,
        eta=eta,
    )


def load_geometry(path: pathlib.Path) -> GeometrySpec:
    """
    Load a geometry file (YAML or JSON).

    Args:
        path: File to read.

    Returns:
        The geometry named after the file stem unless the file names it.

    Raises:
        ConfigError: If the file is missing or invalid.
    """
    spec = geometry_from_dict(_read(path), path.stem)
    logger.info("Loaded geometry %s from %s", spec.name, path)
    return spec


def _window(value: object, key: str) -> tuple[int, int]:
    if not isinstance(value, list | tuple) or len(value) != 2:
        msg = f"'{key}' must be a pair [low, high]"
        raise ConfigError(msg)
    low, high = (int(x) for x in value)
    if low > high:
        msg = f"'{key}' is empty: [{low}, {high}]"
        raise ConfigError(msg)
    return low, high


@dataclass
class RunConfig:
    """
    One CLI run, merged from a run file and flags.

    Attributes:
        command: Subcommand to run.
        preset: Preset name, when no geometry file is given.
        geometry: Geometry file path.
        box: Truncation box.
        hbar_window: Explicit hbar window, overriding the default.
        lambda_window: Explicit lambda window, overriding the default.
        lam: Value substituted for lambda in text output, if any.
        format: Output format, json or text.
        output: Output file; stdout when None.
        options: Subcommand-specific values (k, z, dmax, suite, ...).
    """

    command: str
    preset: str | None = None
    geometry: pathlib.Path | None = None
    box: Box | None = None
    hbar_window: tuple[int, int] | None = None
    lambda_window: tuple[int, int] | None = None
    lam: Fraction | None = None
    format: str = "json"
    output: pathlib.Path | None = None
    options: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.format not in OUTPUT_FORMATS:
            msg = f"'format' must be one of {OUTPUT_FORMATS}, got {self.format!r}"
            raise ConfigError(msg)

    def window_override(self, base: Window) -> Window:
        """The base window with any explicit bounds applied."""
        hbar = self.hbar_window or (base.hbar_min, base.hbar_max)
        lam = self.lambda_window or (base.lambda_min, base.lambda_max)
        return Window(hbar[0], hbar[1], lam[0], lam[1])

    def resolved_box(self) -> Box | None:
        return self.box if self.box is not None else env_box()

    def merged(self, overrides: dict[str, Any]) -> "RunConfig":
        """A copy where every non-None override replaces the stored value."""
        names = {f.name for f in fields(self)}
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        options = dict(self.options)
        for key, value in overrides.items():
            if value is None:
                continue
            if key in names and key != "options":
                values[key] = value
            else:
                options[key] = value
        values["options"] = options
        return RunConfig(**values)


def load_run_config(path: pathlib.Path) -> RunConfig:
    """
    Load a YAML run file.

    Raises:
        ConfigError: If the file is missing or a key is invalid.
    """
    data = _read(path)
    if not isinstance(data, dict) or "command" not in data:
        msg = "Run file must contain a mapping with a 'command' key"
        raise ConfigError(msg)
    known = {"command", "preset", "geometry", "box", "hbar_window", "lambda_window", "lambda", "format", "output"}
    config = RunConfig(
        command=str(data["command"]),
        preset=data.get("preset"),
        geometry=pathlib.Path(data["geometry"]) if "geometry" in data else None,
        box=parse_box(data["box"]) if "box" in data else None,
        hbar_window=_window(data["hbar_window"], "hbar_window") if "hbar_window" in data else None,
        lambda_window=_window(data["lambda_window"], "lambda_window") if "lambda_window" in data else None,
        lam=_fraction(data["lambda"], "lambda") if "lambda" in data else None,
        format=str(data.get("format", "json")),
        output=pathlib.Path(data["output"]) if "output" in data else None,
        options={k: v for k, v in data.items() if k not in known},
    )
    logger.debug("Loaded run config from %s: %s", path, config)
    return config
