"""Command-line interface for qcoh."""

import argparse
import logging
import pathlib
import sys
from collections.abc import Sequence
from fractions import Fraction
from typing import Any

from . import serialize
from .bigquantum import big_quantum
from .birkhoff import birkhoff_scalar
from .cohomology import linear_substitute
from .config import RunConfig, load_geometry, load_run_config, parse_box
from .connection import find_annihilators, raw_connection, to_flat
from .errors import ConfigError, QcohError
from .formal import QSeries
from .golden import run_suites
from .ifunction import GeometrySpec, build_i, default_window
from .localization import LocConfig, assemble_F
from .mirror import extract_mirror, gw_readout, shift_by_mirror
from .pipeline import local_table, matrix_run
from .presets import get_preset
from .types import Window, format_fraction, parse_fraction

logger = logging.getLogger(__name__)

BIGQ_PRESET = "F3"


type Output = tuple[dict[str, Any], str]


def setup_logging(debug: bool = False, log_file: bool = True) -> None:
    """
    Configure logging for the application.

    Args:
        debug: Enable debug level logging if True.
        log_file: Also write qcoh.log in the working directory.
    """
    level = logging.DEBUG if debug else logging.INFO
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.insert(0, logging.FileHandler("qcoh.log"))
    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )


def _pair(text: str) -> tuple[int, int]:
    low, high = (int(x) for x in text.split(","))
    return low, high


def _matrix(value: str | list) -> tuple[tuple[int, ...], ...]:
    """Rows separated by ';', entries by ','; run files may give nested lists."""
    if isinstance(value, list):
        return tuple(tuple(int(x) for x in row) for row in value)
    return tuple(tuple(int(x) for x in row.split(",")) for row in value.split(";"))


def resolve_geometry(config: RunConfig) -> GeometrySpec:
    """
    The geometry named by a run: a geometry file wins over a preset.

    Raises:
        ConfigError: If neither is given.
    """
    box = config.resolved_box()
    if config.geometry is not None:
        spec = load_geometry(config.geometry)
        return spec.with_box(box) if box is not None else spec
    if config.preset is None:
        msg = "Either --preset or --geometry is required"
        raise ConfigError(msg)
    return get_preset(config.preset, config.options.get("action"), box)


def _window(config: RunConfig, spec: GeometrySpec) -> Window:
    return config.window_override(default_window(spec))


def _rows_text(rows: Sequence[dict[str, Any]]) -> str:
    return "\n".join(" ".join(f"{k}={v}" for k, v in sorted(r.items())) for r in rows)


def _specialize(rows: list[dict[str, Any]], lam: Fraction | None) -> list[dict[str, Any]]:
    """Evaluate lambda at a number, summing rows that then share a slot."""
    if lam is None:
        return rows
    totals: dict[tuple, Fraction] = {}
    shapes: dict[tuple, dict[str, Any]] = {}
    for r in rows:
        base = {k: v for k, v in r.items() if k not in ("lambda", "coeff")}
        key = tuple(sorted((k, str(v)) for k, v in base.items()))
        totals[key] = totals.get(key, Fraction(0)) + parse_fraction(r["coeff"]) * lam ** int(r["lambda"])
        shapes[key] = base
    return [{**shapes[k], "coeff": format_fraction(c)} for k, c in sorted(totals.items()) if c]


def _series_output(name: str, series: QSeries, lam: Fraction | None) -> Output:
    rows = _specialize(serialize.series_rows(series), lam)
    return {"geometry": name, "basis": list(series.ring.basis_names), "series": rows}, _rows_text(rows)


def cmd_ring(config: RunConfig) -> Output:
    ring = resolve_geometry(config).ring
    mult = {
        ring.basis_names[ring.index(tuple(int(j == i) for j in range(ring.num_generators)))]: [
            [format_fraction(x) for x in row] for row in ring.mult_matrix(ring.generator(i))
        ]
        for i in range(ring.num_generators)
    }
    payload = {"basis": list(ring.basis_names), "dim": ring.dim, "top_degree": ring.top_degree, "mult": mult}
    text = f"basis: {', '.join(ring.basis_names)}\n" + "\n".join(
        f"{g}:\n" + "\n".join("  " + " ".join(row) for row in m) for g, m in mult.items()
    )
    return payload, text


def cmd_ifun(config: RunConfig) -> Output:
    spec = resolve_geometry(config)
    return _series_output(spec.name, build_i(spec, spec.box, _window(config, spec)), config.lam)


def cmd_jfun(config: RunConfig) -> Output:
    spec = resolve_geometry(config)
    factored = birkhoff_scalar(build_i(spec, spec.box, _window(config, spec)))
    return _series_output(spec.name, factored.J, config.lam)


def cmd_mirror(config: RunConfig) -> Output:
    spec = resolve_geometry(config)
    mirror = extract_mirror(birkhoff_scalar(build_i(spec, spec.box, _window(config, spec))).J)
    names = mirror.ring.basis_names
    maps = {names[a]: serialize.rational_rows(s.rationals()) for a, s in sorted(mirror.maps.items())}
    equivariant = {names[a]: serialize.rational_rows(s.rationals()) for a, s in sorted(mirror.equivariant.items())}
    text = "\n".join(
        [f"t[{names[a]}] = {serialize.format_series(s.rationals())}" for a, s in sorted(mirror.maps.items())]
        + [f"t~[{names[a]}] = {serialize.format_series(s.rationals())}" for a, s in sorted(mirror.equivariant.items())]
    )
    return {"geometry": spec.name, "maps": maps, "equivariant": equivariant}, text


def cmd_gw(config: RunConfig) -> Output:
    spec = resolve_geometry(config)
    if spec.canonical_twist is not None:
        table = local_table(spec)
        return {"geometry": spec.name, "table": serialize.table_rows(table)}, serialize.format_table(table)
    readout = gw_readout(birkhoff_scalar(build_i(spec, spec.box, _window(config, spec))).J)
    series = {
        "W": readout.W,
        "W_tilde": readout.W_tilde,
        "W_hat": readout.W_hat,
        "W_tilde_hat": readout.W_tilde_hat,
        "t_tilde": readout.tilde_flat,
    }
    payload: dict[str, Any] = {
        "geometry": spec.name,
        "constant": None if readout.constant is None else format_fraction(readout.constant),
        **{k: serialize.rational_rows(v.rationals()) for k, v in series.items()},
        "slots": [
            {"hbar": h, "lambda": l, "basis": name, "series": serialize.rational_rows(s.rationals())}
            for (h, l, name), s in sorted(readout.slots.items())
        ],
    }
    text = "\n".join(f"{k} = {serialize.format_series(v.rationals())}" for k, v in series.items())
    text += f"\nc = {readout.constant}"
    return payload, text


def cmd_connection(config: RunConfig) -> Output:
    spec = resolve_geometry(config)
    stage = config.options.get("stage") or "gauge_fixed"
    if stage not in ("raw", "gauge_fixed", "flat"):
        msg = f"Unknown connection stage: {stage!r}"
        raise ConfigError(msg)
    run = matrix_run(spec, spec.box, _window(config, spec))
    if stage == "raw":
        mats = [raw_connection(run.solution, i) for i in range(spec.ring.num_generators)]
    else:
        mats = run.omega_hats(check_gauge=bool(config.options.get("check_gauge")))
    if stage == "flat":
        ring_map = None
        if config.options.get("target"):
            target = get_preset(config.options["target"], box=spec.box)
            ring_map = linear_substitute(spec.ring, target.ring, _matrix(config.options.get("ring_map") or "1,0;0,1"))
        mats = to_flat(mats, run.mirror, ring_map)
    payload = {
        "geometry": spec.name,
        "stage": stage,
        "matrices": [{"index": m.index + 1, "variables": m.variables, "entries": serialize.matrix_rows(m.matrix)} for m in mats],
    }
    text = "\n\n".join(
        f"Omega_{m.index + 1} ({m.kind}):\n" + _rows_text(serialize.matrix_rows(m.matrix)) for m in mats
    )
    return payload, text


def cmd_qde(config: RunConfig) -> Output:
    spec = resolve_geometry(config)
    source = config.options.get("of") or "j"
    series = build_i(spec, spec.box, _window(config, spec))
    if source == "j":
        j_function = birkhoff_scalar(series).J
        series = shift_by_mirror(j_function, extract_mirror(j_function))
    y_degree = parse_box(config.options.get("y_degree") or "2", "y_degree")
    if len(y_degree) == 1:
        y_degree = y_degree * len(spec.box)
    operators = find_annihilators(
        series,
        int(config.options.get("theta_degree") or 2),
        y_degree,
        int(config.options.get("hbar_degree") or 0),
        int(config.options.get("lambda_degree") or 0),
    )
    rows = [serialize.operator_rows(op) for op in operators]
    return {"geometry": spec.name, "of": source, "operators": rows}, "\n\n".join(_rows_text(r) for r in rows)


def cmd_bigq(config: RunConfig) -> Output:
    if config.geometry is not None or config.preset not in (None, BIGQ_PRESET):
        msg = f"bigq runs only on the {BIGQ_PRESET} preset, got {config.geometry or config.preset}"
        raise ConfigError(msg)
    box = config.resolved_box() or (3, 3)
    result = big_quantum(box, check_gauge=bool(config.options.get("check_gauge")))
    names = [f"C_{i}" for i in range(len(result.C))]
    payload = {
        "geometry": result.spec.name,
        "transport": serialize.rational_rows(result.transport.rationals()),
        "matrices": {n: serialize.matrix_rows(m) for n, m in zip(names, result.C, strict=True)},
        "invariants": serialize.bigq_rows(result.gf.coefficients(), result.gf.num_generators),
    }
    text = "\n\n".join(f"{n}:\n{_rows_text(serialize.matrix_rows(m))}" for n, m in zip(names, result.C, strict=True))
    return payload, text


def cmd_localize(config: RunConfig) -> Output:
    opts = config.options
    cfg = LocConfig(
        k=int(opts.get("k") if opts.get("k") is not None else 1),
        z=parse_fraction(opts.get("z") or "-1"),
        d_max=int(opts.get("dmax") or 10),
        lambda_order=int(opts["lambda_order"]) if opts.get("lambda_order") is not None else None,
    )
    series = assemble_F(cfg)
    rows = serialize.rational_rows(series.rationals())
    text = "\n".join(f"q^{r['degree'][0]}: {r['coeff']}" for r in rows)
    return {"k": cfg.k, "z": format_fraction(cfg.z), "coefficients": rows}, text


def cmd_verify(config: RunConfig) -> Output:
    results = run_suites(config.options.get("suite") or "all", config.options)
    rows = [{"suite": r.suite, "name": r.name, "passed": r.passed, "detail": r.detail} for r in results]
    width = max((len(r.name) for r in results), default=0)
    text = "\n".join(
        f"{r.suite:<13} {r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}{'  ' + r.detail if r.detail else ''}"
        for r in results
    )
    return {"passed": all(r.passed for r in results), "checks": rows}, text


HANDLERS = {
    "ring": cmd_ring,
    "ifun": cmd_ifun,
    "jfun": cmd_jfun,
    "mirror": cmd_mirror,
    "gw": cmd_gw,
    "connection": cmd_connection,
    "qde": cmd_qde,
    "bigq": cmd_bigq,
    "localize": cmd_localize,
    "verify": cmd_verify,
}


def run(config: RunConfig) -> int:
    """
    Execute one command and write its output.

    Returns:
        0 on success, 1 when a verify suite has failures.
    """
    if config.command not in HANDLERS:
        msg = f"Unknown command: {config.command!r}"
        raise ConfigError(msg)
    logger.info("Running %s", config.command)
    payload, text = HANDLERS[config.command](config)
    rendered = serialize.dumps(payload) if config.format == "json" else text + "\n"
    if config.output is not None:
        config.output.write_text(rendered)
        logger.info("Wrote %s", config.output)
    else:
        sys.stdout.write(rendered)
    return 0 if payload.get("passed", True) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", "-p", type=str, help="Named geometry: P1, X<k>, Xm<k>, G<k>, Gm1, F<n>, KF<n>")
    common.add_argument("--geometry", "-g", type=pathlib.Path, help="Geometry file (YAML or JSON)")
    common.add_argument("--action", type=str, help="Fiber action for X<k>: diagonal, antidiagonal, x0, custom(a,b)")
    common.add_argument("--box", type=str, help="Degree bounds, e.g. 3,6 (default: $QCOH_DEFAULT_BOX or the preset's)")
    common.add_argument("--hbar-window", type=_pair, help="Explicit hbar window low,high")
    common.add_argument("--lambda-window", type=_pair, help="Explicit lambda window low,high")
    common.add_argument("--lambda", dest="lam", type=str, help="Evaluate lambda at this rational in the output")
    common.add_argument("--format", "-f", choices=("json", "text"), help="Output format (default: json)")
    common.add_argument("--output", "-o", type=pathlib.Path, help="Write output here instead of stdout")
    common.add_argument("--config", "-c", type=pathlib.Path, help="YAML run file; flags override its values")
    common.add_argument("--debug", "-d", action="store_true", help="Enable debug logging")
    common.add_argument("--no-log-file", action="store_true", help="Do not write qcoh.log")

    parser = argparse.ArgumentParser(
        description="qcoh - exact quantum cohomology and local Gromov-Witten invariants",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Cohomology ring of the Hirzebruch surface F3
  qcoh ring --preset F3

  # Mirror maps of O(1) + O(-3) over P1 with the antidiagonal action
  qcoh mirror --preset X1 --action antidiagonal --box 5

  # Local invariants of K_F3
  qcoh gw --preset KF3 --box 3,6 --format text

  # Localization table for k = 2 at z = -1
  qcoh localize --k 2 --z -1 --dmax 10

  # Compare against published values
  qcoh verify --suite conjecture1 --k 1 --order 5
        """,
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name in ("ring", "ifun", "jfun", "mirror", "gw", "bigq"):
        sub.add_parser(name, parents=[common], help=f"Run the {name} stage")
    conn = sub.add_parser("connection", parents=[common], help="Connection matrices")
    conn.add_argument("--stage", choices=("raw", "gauge_fixed", "flat"), help="Which matrices (default: gauge_fixed)")
    conn.add_argument("--check-gauge", action="store_true", help="Cross-check the gauge transformation")
    conn.add_argument("--target", type=str, help="Preset whose basis the flat matrices are written in")
    conn.add_argument("--ring-map", type=str, default="1,0;0,1", help="Generator images for --target, rows split by ';'")
    qde = sub.add_parser("qde", parents=[common], help="Annihilating differential operators")
    qde.add_argument("--of", choices=("i", "j"), help="Annihilate I or the flat J (default: j)")
    qde.add_argument("--theta-degree", type=int, help="Highest total theta degree (default: 2)")
    qde.add_argument("--y-degree", type=str, help="Highest y degree per variable (default: 2)")
    qde.add_argument("--hbar-degree", type=int, help="Highest hbar power (default: 0)")
    qde.add_argument("--lambda-degree", type=int, help="Highest lambda power (default: 0)")
    loc = sub.add_parser("localize", parents=[common], help="Localization oracle for O(k) + O(-2-k)")
    loc.add_argument("--k", type=int, help="Degree k (default: 1)")
    loc.add_argument("--z", type=str, help="Weight ratio z (default: -1)")
    loc.add_argument("--dmax", type=int, help="Highest degree (default: 10)")
    loc.add_argument("--lambda-order", type=int, help="Lambda truncation (default: 2 dmax - 2)")
    ver = sub.add_parser("verify", parents=[common], help="Run the golden-data suites")
    ver.add_argument(
        "--suite",
        choices=("all", "conjecture1", "localization", "g1", "f3", "kf3", "f4"),
        help="Suite to run (default: all)",
    )
    ver.add_argument("--k", type=int, help="Restrict conjecture1 to one k")
    ver.add_argument("--order", type=int, help="Degree bound for conjecture1 (default: 5)")
    ver.add_argument("--dmax", type=int, help="Highest degree for localization (default: 10)")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge a run file (if any) with the parsed flags."""
    values = {k: v for k, v in vars(args).items() if k not in ("config", "debug", "no_log_file")}
    base = load_run_config(args.config) if args.config else RunConfig(command=args.command)
    if values.get("box") is not None:
        values["box"] = parse_box(values["box"])
    if values.get("lam") is not None:
        values["lam"] = parse_fraction(values["lam"])
    return base.merged(values)


def main(argv: Sequence[str] | None = None) -> None:
    """Main entry point for the qcoh CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        sys.exit(2)
    setup_logging(args.debug, not args.no_log_file)

    try:
        status = run(config_from_args(args))
    except KeyboardInterrupt:
        logger.info("Interrupted")
        sys.exit(130)
    except (QcohError, ValueError) as e:
        logger.exception("%s failed", args.command)
        sys.stdout.write(serialize.dumps({"error": type(e).__name__, "message": str(e)}))
        sys.exit(1)
    sys.exit(status)


if __name__ == "__main__":
    main()
