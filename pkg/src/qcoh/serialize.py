"""Exact JSON and text renderings of series, matrices, operators and tables."""

import json
import logging
from collections.abc import Mapping, Sequence
from fractions import Fraction
from typing import Any

from .cohomology import CohomologyRing
from .connection import DiffOperator
from .formal import BiLaurent, CohValue, MatrixSeries, QSeries, ScalarSeries
from .mirror import InvariantTable
from .types import Box, Multidegree, Window, format_fraction, parse_fraction

logger = logging.getLogger(__name__)

UNDETERMINED = "undetermined"

type Row = dict[str, Any]


def _slot_rows(value: BiLaurent, base: Row) -> list[Row]:
    return [
        {**base, "hbar": h, "lambda": l, "coeff": format_fraction(c)}
        for (h, l), c in sorted(value.terms.items())
    ]


def scalar_rows(series: ScalarSeries) -> list[Row]:
    """One row per (degree, hbar, lambda) with a nonzero coefficient."""
    rows = []
    for d in sorted(series.coeffs):
        rows.extend(_slot_rows(series.coeffs[d], {"degree": list(d)}))
    return rows


def series_rows(series: QSeries) -> list[Row]:
    """One row per (degree, basis element, hbar, lambda) with a nonzero coefficient."""
    names = series.ring.basis_names
    rows = []
    for d in sorted(series.coeffs):
        for a, comp in enumerate(series.coeffs[d].comps):
            rows.extend(_slot_rows(comp, {"degree": list(d), "basis": names[a]}))
    return rows


def matrix_rows(matrix: MatrixSeries) -> list[Row]:
    """One row per entry, degree and slot with a nonzero coefficient."""
    rows = []
    for i in range(matrix.size):
        for j in range(matrix.size):
            entry = matrix.entry(i, j)
            for d in sorted(entry.coeffs):
                rows.extend(_slot_rows(entry.coeffs[d], {"row": i, "col": j, "degree": list(d)}))
    return rows


def operator_rows(op: DiffOperator) -> list[Row]:
    return [
        {"theta": list(a), "y": list(b), "hbar": e, "lambda": l, "coeff": format_fraction(c)}
        for (a, b, e, l), c in sorted(op.terms.items())
    ]


def operator_from_rows(rows: Sequence[Mapping[str, Any]], nvars: int) -> DiffOperator:
    terms = {
        (tuple(r["theta"]), tuple(r["y"]), int(r.get("hbar", 0)), int(r.get("lambda", 0))): parse_fraction(r["coeff"])
        for r in rows
    }
    return DiffOperator(nvars, terms)


def table_rows(table: InvariantTable) -> list[Row]:
    """GW and GV numbers per degree, with undetermined cells named."""
    return [
        {
            "degree": list(d),
            "gw": UNDETERMINED if table.gw[d] is None else format_fraction(table.gw[d]),
            "gv": UNDETERMINED if table.gv[d] is None else format_fraction(table.gv[d]),
        }
        for d in sorted(table.gw)
    ]


def bigq_rows(coefficients: Mapping[tuple[int, ...], Fraction], num_generators: int) -> list[Row]:
    """Rows {"d", "n", "coeff"}; the trailing key entry is the point-insertion count."""
    return [
        {
            "d": list(key[:num_generators]),
            "n": list(key[num_generators:]),
            "coeff": format_fraction(c),
        }
        for key, c in sorted(coefficients.items())
    ]


def rational_rows(coeffs: Mapping[Multidegree, Fraction]) -> list[Row]:
    return [{"degree": list(d), "coeff": format_fraction(c)} for d, c in sorted(coeffs.items())]


def _coeff_map(rows: Sequence[Mapping[str, Any]]) -> dict[Multidegree, dict[tuple[int, int], Fraction]]:
    out: dict[Multidegree, dict[tuple[int, int], Fraction]] = {}
    for r in rows:
        d = tuple(r["degree"])
        out.setdefault(d, {})[(int(r["hbar"]), int(r["lambda"]))] = parse_fraction(r["coeff"])
    return out


def scalar_from_rows(rows: Sequence[Mapping[str, Any]], box: Box, window: Window) -> ScalarSeries:
    coeffs = {d: BiLaurent(terms, window) for d, terms in _coeff_map(rows).items()}
    return ScalarSeries(coeffs, box, window)


def series_from_rows(
    rows: Sequence[Mapping[str, Any]],
    ring: CohomologyRing,
    box: Box,
    window: Window,
    prefactor: bool = True,
) -> QSeries:
    """Read rows written by `series_rows` back into a series."""
    index = {name: a for a, name in enumerate(ring.basis_names)}
    comps: dict[Multidegree, list[dict[tuple[int, int], Fraction]]] = {}
    for r in rows:
        d = tuple(r["degree"])
        per_basis = comps.setdefault(d, [{} for _ in range(ring.dim)])
        per_basis[index[r["basis"]]][(int(r["hbar"]), int(r["lambda"]))] = parse_fraction(r["coeff"])
    coeffs = {d: CohValue(ring, [BiLaurent(t, window) for t in per_basis]) for d, per_basis in comps.items()}
    return QSeries(ring, coeffs, box, window, prefactor)


def dumps(payload: object) -> str:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _monomial(d: Multidegree, var: str) -> str:
    if len(d) == 1:
        return "" if d[0] == 0 else (var if d[0] == 1 else f"{var}^{d[0]}")
    parts = []
    for i, e in enumerate(d, 1):
        if e == 1:
            parts.append(f"{var}{i}")
        elif e > 1:
            parts.append(f"{var}{i}^{e}")
    return " ".join(parts)


def format_series(coeffs: Mapping[Multidegree, Fraction], var: str = "q") -> str:
    """A rational series as readable text, lowest total degree first."""
    terms = []
    for d in sorted(coeffs, key=lambda d: (sum(d), d)):
        c = coeffs[d]
        if not c:
            continue
        mono = _monomial(d, var)
        body = str(abs(c)) if not mono else (mono if abs(c) == 1 else f"{abs(c)} {mono}")
        sign = "-" if c < 0 else "+"
        terms.append(f"{sign} {body}")
    if not terms:
        return "0"
    text = " ".join(terms)
    return text[2:] if text.startswith("+ ") else "-" + text[2:]


def format_table(table: InvariantTable) -> str:
    """The invariant grid with d1 down and d2 across."""
    d1_max, d2_max = table.box
    header = "d1\\d2 " + " ".join(f"{j:>12}" for j in range(d2_max + 1))
    lines = [header]
    for i in range(d1_max + 1):
        cells = []
        for j in range(d2_max + 1):
            value = table.gv.get((i, j))
            cells.append(f"{'?' if value is None else str(value):>12}")
        lines.append(f"{i:>5} " + " ".join(cells))
    return "\n".join(lines)
