"""Genus-zero local invariants of O(k) + O(-2-k) over P1 by torus localization."""

import itertools
import logging
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from math import factorial

import networkx as nx
from networkx.algorithms.isomorphism import GraphMatcher

from .errors import ConfigError, NotConverged, ZeroDenominator
from .formal import ScalarSeries

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX_DEGREE = 4  # tree counts grow factorially beyond this


@dataclass(frozen=True)
class LocConfig:
    """
    Parameters of the localization computation.

    Attributes:
        k: Degree of the first summand, k >= 0.
        z: Ratio of the two fiber weights (1 diagonal, -1 antidiagonal).
        d_max: Highest curve degree.
        lambda_order: Highest lambda power kept; defaults to 2 d_max - 2.
    """

    k: int
    z: Fraction
    d_max: int
    lambda_order: int | None = None

    def __post_init__(self) -> None:
        if self.k < 0:
            msg = f"k must be nonnegative, got {self.k}"
            raise ConfigError(msg)
        if self.d_max < 1:
            msg = f"d_max must be positive, got {self.d_max}"
            raise ConfigError(msg)
        object.__setattr__(self, "z", Fraction(self.z))
        if self.lambda_order is None:
            object.__setattr__(self, "lambda_order", 2 * self.d_max - 2)
        elif self.lambda_order < 2 * self.d_max - 2:
            msg = f"lambda_order {self.lambda_order} is below 2 d_max - 2 = {2 * self.d_max - 2}"
            raise ConfigError(msg)

    @property
    def order(self) -> int:
        return self.lambda_order if self.lambda_order is not None else 2 * self.d_max - 2

    @cached_property
    def f(self) -> "LambdaSeries":
        """(1 - (k+2) lambda)(1 + k z lambda), the weight of a vertex at the second fixed point."""
        return LambdaSeries([1, -(self.k + 2)], self.order) * LambdaSeries([1, self.k * self.z], self.order)


class LambdaSeries:
    """A dense truncated power series in lambda with rational coefficients."""

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Sequence[Fraction | int], order: int) -> None:
        self.order = order
        padded = [Fraction(c) for c in coeffs[: order + 1]]
        self.coeffs = padded + [Fraction(0)] * (order + 1 - len(padded))

    @classmethod
    def const(cls, c: Fraction | int, order: int) -> "LambdaSeries":
        return cls([c], order)

    @classmethod
    def zero(cls, order: int) -> "LambdaSeries":
        return cls([], order)

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LambdaSeries):
            return NotImplemented
        return self.coeffs == other.coeffs

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"LambdaSeries({[str(c) for c in self.coeffs]})"

    def __add__(self, other: "LambdaSeries") -> "LambdaSeries":
        return LambdaSeries([a + b for a, b in zip(self.coeffs, other.coeffs, strict=True)], self.order)

    def __sub__(self, other: "LambdaSeries") -> "LambdaSeries":
        return LambdaSeries([a - b for a, b in zip(self.coeffs, other.coeffs, strict=True)], self.order)

    def __neg__(self) -> "LambdaSeries":
        return LambdaSeries([-a for a in self.coeffs], self.order)

    def __mul__(self, other: "LambdaSeries | Fraction | int") -> "LambdaSeries":
        if not isinstance(other, LambdaSeries):
            return LambdaSeries([a * other for a in self.coeffs], self.order)
        out = [Fraction(0)] * (self.order + 1)
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j in range(self.order + 1 - i):
                b = other.coeffs[j]
                if b:
                    out[i + j] += a * b
        return LambdaSeries(out, self.order)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LambdaSeries":
        out = LambdaSeries.const(1, self.order)
        for _ in range(n):
            out = out * self
        return out

    def coefficient(self, n: int) -> Fraction:
        return self.coeffs[n] if 0 <= n <= self.order else Fraction(0)

    def inverse(self) -> "LambdaSeries":
        """
        The reciprocal series.

        Raises:
            ZeroDenominator: If the constant term vanishes.
        """
        c0 = self.coeffs[0]
        if not c0:
            msg = "Cannot invert a lambda series with zero constant term"
            raise ZeroDenominator(msg)
        out = [Fraction(0)] * (self.order + 1)
        out[0] = 1 / c0
        for n in range(1, self.order + 1):
            acc = sum((self.coeffs[j] * out[n - j] for j in range(1, n + 1)), Fraction(0))
            out[n] = -acc / c0
        return LambdaSeries(out, self.order)


type QLSeries = list[LambdaSeries]  # index = power of q


def _ql_zero(top: int, order: int) -> QLSeries:
    return [LambdaSeries.zero(order) for _ in range(top + 1)]


def _ql_mul(a: QLSeries, b: QLSeries, top: int) -> QLSeries:
    order = a[0].order
    out = _ql_zero(top, order)
    for i, x in enumerate(a[: top + 1]):
        if not x:
            continue
        for j in range(min(top - i, len(b) - 1) + 1):
            if b[j]:
                out[i + j] = out[i + j] + x * b[j]
    return out


def _ql_add(a: QLSeries, b: QLSeries) -> QLSeries:
    top = max(len(a), len(b))
    order = a[0].order
    zero = LambdaSeries.zero(order)
    return [(a[n] if n < len(a) else zero) + (b[n] if n < len(b) else zero) for n in range(top)]


def _ql_scale(a: QLSeries, c: LambdaSeries | Fraction | int) -> QLSeries:
    return [x * c for x in a]


def a_coeff(cfg: LocConfig, d: int) -> LambdaSeries:
    """
    a_d = d^{2d} / (d!)^2 prod_{m=-(2+k)d+1}^{-1} (1 + m lambda / d) / prod_{m=1}^{kd} (1 + m z lambda / d).

    Raises:
        ZeroDenominator: If a denominator factor has zero constant term.
    """
    order = cfg.order
    value = LambdaSeries.const(Fraction(d ** (2 * d), factorial(d) ** 2), order)
    for m in range(-(2 + cfg.k) * d + 1, 0):
        value = value * LambdaSeries([1, Fraction(m, d)], order)
    for m in range(1, cfg.k * d + 1):
        value = value * LambdaSeries([1, cfg.z * Fraction(m, d)], order).inverse()
    return value


@dataclass
class _StarSums:
    """Star-graph sums s_d (or t_d) and their derivatives at one point b."""

    values: dict[int, QLSeries]
    derivatives: dict[tuple[int, int], QLSeries]  # (d, e) -> d s_d / d b_e


def _star_sums(b: dict[int, QLSeries], cfg: LocConfig, weight: LambdaSeries | None) -> _StarSums:
    """
    s_d = (-1)^d [exp(-d w sum_j b_j Q^j / j)]_{Q^d} / w + (-1)^d b_d for w = 1 or f.

    Q tracks the partition degree; the entries b_j are series in q and the
    results are kept to q-degree d_max - d.
    """
    order, d_max = cfg.order, cfg.d_max
    w = weight if weight is not None else LambdaSeries.const(1, order)
    w_inv = w.inverse()
    values: dict[int, QLSeries] = {}
    derivatives: dict[tuple[int, int], QLSeries] = {}
    for d in range(1, d_max + 1):
        top = d_max - d
        h = {j: _ql_scale(b[j][: top + 1], w * Fraction(-d, j)) for j in range(1, d + 1)}
        g: list[QLSeries] = [[LambdaSeries.const(1, order), *_ql_zero(top, order)[1:]]]
        for m in range(1, d + 1):
            acc = _ql_zero(top, order)
            for j in range(1, m + 1):
                acc = _ql_add(acc, _ql_scale(_ql_mul(h[j], g[m - j], top), j))
            g.append(_ql_scale(acc, Fraction(1, m)))
        sign = (-1) ** d
        values[d] = _ql_add(_ql_scale(g[d], w_inv * sign), _ql_scale(b[d][: top + 1], sign))
        for e in range(1, d + 1):
            deriv = _ql_scale(g[d - e], Fraction(-sign * d, e))
            if e == d:
                deriv[0] = deriv[0] + LambdaSeries.const(sign, order)
            derivatives[(d, e)] = deriv
    return _StarSums(values, derivatives)


def _shifted_point(a: dict[int, LambdaSeries], shift: dict[int, QLSeries], cfg: LocConfig) -> dict[int, QLSeries]:
    out = {}
    for j, aj in a.items():
        base = [aj, *_ql_zero(cfg.d_max, cfg.order)[1:]]
        out[j] = _ql_add(base, shift[j]) if j in shift else base
    return out


def _equation_of_motion(sums: _StarSums, a: dict[int, LambdaSeries], cfg: LocConfig) -> dict[int, QLSeries]:
    """p_e d/d b_e sum_d q^d s_d / d^3 with p_e = (-1)^{e+1} a_e e^3 q^{-e}."""
    out = {}
    for e in range(1, cfg.d_max + 1):
        total = _ql_zero(cfg.d_max - e, cfg.order)
        prefactor = a[e] * ((-1) ** (e + 1) * e**3)
        for d in range(e, cfg.d_max + 1):
            deriv = sums.derivatives[(d, e)]
            for n, c in enumerate(deriv):
                if c and n + d - e <= cfg.d_max - e:
                    total[n + d - e] = total[n + d - e] + c * (prefactor * Fraction(1, d**3))
        out[e] = total
    return out


def _series_sum(sums: _StarSums, cfg: LocConfig) -> QLSeries:
    """sum_d q^d s_d / d^3."""
    out = _ql_zero(cfg.d_max, cfg.order)
    for d, value in sums.values.items():
        for n, c in enumerate(value):
            if c and n + d <= cfg.d_max:
                out[n + d] = out[n + d] + c * Fraction(1, d**3)
    return out


def orientation_sign(cfg: LocConfig, d: int) -> int:
    """
    (-1)^{k(d+1)} for a negative weight ratio, 1 otherwise.

    The graph sum orients the O(k) fiber by z; the stored antidiagonal tables
    use the opposite orientation, which flips F(q) to -F(-q) for odd k.
    """
    return (-1) ** (cfg.k * (d + 1)) if cfg.z < 0 else 1


def extract(series: QLSeries, cfg: LocConfig) -> ScalarSeries:
    """Keep the lambda^{2d-2} coefficient at each q^d, oriented to match the stored antidiagonal tables."""
    d_max = len(series) - 1
    coeffs = {(d,): series[d].coefficient(2 * d - 2) * orientation_sign(cfg, d) for d in range(1, d_max + 1)}
    return ScalarSeries.from_rationals(coeffs, (d_max,))


def generating_series(cfg: LocConfig) -> QLSeries:
    """
    The full lambda-series before extraction.

    F = A - sum_d x_d y_d / p_d + B(a + x) + C(a + y), with x and y the
    fixed point of the equations of motion started from zero.

    Raises:
        NotConverged: If the iteration is not stationary after d_max + 2 rounds.
    """
    d_max, order = cfg.d_max, cfg.order
    a = {d: a_coeff(cfg, d) for d in range(1, d_max + 1)}
    x: dict[int, QLSeries] = {}
    y: dict[int, QLSeries] = {}
    for rounds in range(d_max + 3):
        b_sums = _star_sums(_shifted_point(a, x, cfg), cfg, None)
        c_sums = _star_sums(_shifted_point(a, y, cfg), cfg, cfg.f)
        new_y = _equation_of_motion(b_sums, a, cfg)
        new_x = _equation_of_motion(c_sums, a, cfg)
        if new_x == x and new_y == y:
            logger.debug("Equations of motion stationary after %d rounds", rounds)
            break
        x, y = new_x, new_y
    else:
        msg = f"Equations of motion not stationary after {d_max + 2} rounds"
        raise NotConverged(msg)

    total = _ql_add(_series_sum(b_sums, cfg), _series_sum(c_sums, cfg))
    for d in range(1, d_max + 1):
        one_edge = a[d] * Fraction((-1) ** (d - 1), d**3)
        total[d] = total[d] + one_edge
        propagator_inv = a[d].inverse() * Fraction((-1) ** (d + 1), d**3)
        product = _ql_mul(x[d], y[d], d_max - d)
        for n, c in enumerate(product):
            if c:
                total[n + d] = total[n + d] - c * propagator_inv
    logger.info("Localization sum assembled for k=%d, z=%s through degree %d", cfg.k, cfg.z, d_max)
    return total


def assemble_F(cfg: LocConfig) -> ScalarSeries:  # noqa: N802
    """F(q, z) through q^{d_max}."""
    return extract(generating_series(cfg), cfg)


def derivative_check(cfg: LocConfig, series: ScalarSeries | None = None) -> ScalarSeries:
    """4 q dF/dq, which matches the hatted W of the antidiagonal X1 readout for k = 1, z = -1."""
    f = assemble_F(cfg) if series is None else series
    return f.q_derivative(0) * 4


def lambda_order_stable(cfg: LocConfig, extra: int = 4) -> bool:
    """Whether raising lambda_order by `extra` leaves F unchanged."""
    wider = replace(cfg, lambda_order=cfg.order + extra)
    stable = assemble_F(cfg) == assemble_F(wider)
    if not stable:
        logger.warning("F changes when lambda_order grows from %d to %d", cfg.order, wider.order)
    return stable


@dataclass(frozen=True)
class ColoredTree:
    """
    A tree with vertex colors in {1, 2} and positive edge degrees.

    Attributes:
        colors: Color of each vertex.
        edges: (u, v, degree) triples.
        automorphisms: Order of the automorphism group preserving colors and degrees.
    """

    colors: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]
    automorphisms: int

    @property
    def degree(self) -> int:
        return sum(e[2] for e in self.edges)

    def valence(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e[:2])

    def vertex_degree(self, v: int) -> int:
        return sum(e[2] for e in self.edges if v in e[:2])

    def contribution(self, cfg: LocConfig, a: dict[int, LambdaSeries]) -> LambdaSeries:
        """(-1)^{e+d} / |Aut| prod d_e a_{d_e} prod d_v^{val-3} f_v^{val-1}."""
        value = LambdaSeries.const(Fraction((-1) ** (len(self.edges) + self.degree), self.automorphisms), cfg.order)
        for _, _, d in self.edges:
            value = value * a[d] * d
        for v, color in enumerate(self.colors):
            val = self.valence(v)
            value = value * Fraction(self.vertex_degree(v)) ** (val - 3)
            if color == 2:
                value = value * cfg.f ** (val - 1)
        return value


def _automorphisms(tree: nx.Graph) -> list[dict[int, int]]:
    return list(GraphMatcher(tree, tree).isomorphisms_iter())


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    for cuts in itertools.combinations(range(1, total), parts - 1):
        bounds = (0, *cuts, total)
        yield tuple(bounds[i + 1] - bounds[i] for i in range(parts))


def enumerate_colored_trees(d: int) -> list[ColoredTree]:
    """
    All colored trees of total degree d, one per isomorphism class.

    Classes are found as orbits of the automorphism group of each
    uncolored tree acting on its colorings and degree assignments.
    """
    out = []
    for n_edges in range(1, d + 1):
        for tree in nx.nonisomorphic_trees(n_edges + 1):
            edges = sorted(tuple(sorted(e)) for e in tree.edges())
            index = {frozenset(e): i for i, e in enumerate(edges)}
            autos = _automorphisms(tree)
            root_side = nx.bipartite.color(tree)
            colorings = [
                tuple(1 + root_side[v] for v in range(n_edges + 1)),
                tuple(2 - root_side[v] for v in range(n_edges + 1)),
            ]
            seen: set[tuple[tuple[int, ...], tuple[int, ...]]] = set()
            for colors in colorings:
                for degrees in _compositions(d, n_edges):
                    images = []
                    for sigma in autos:
                        new_colors = [0] * len(colors)
                        for v, c in enumerate(colors):
                            new_colors[sigma[v]] = c
                        new_degrees = [0] * n_edges
                        for i, (u, v) in enumerate(edges):
                            new_degrees[index[frozenset((sigma[u], sigma[v]))]] = degrees[i]
                        images.append((tuple(new_colors), tuple(new_degrees)))
                    key = min(images)
                    if key in seen:
                        continue
                    seen.add(key)
                    stabilizer = sum(1 for img in images if img == (colors, degrees))
                    out.append(
                        ColoredTree(
                            colors=colors,
                            edges=tuple((u, v, deg) for (u, v), deg in zip(edges, degrees, strict=True)),
                            automorphisms=stabilizer,
                        )
                    )
    logger.debug("Degree %d: %d colored trees", d, len(out))
    return out


def graph_sum(cfg: LocConfig, d: int) -> LambdaSeries:
    """The lambda-series of the degree-d graph sum before extraction."""
    a = {e: a_coeff(cfg, e) for e in range(1, d + 1)}
    total = LambdaSeries.zero(cfg.order)
    for tree in enumerate_colored_trees(d):
        total = total + tree.contribution(cfg, a)
    return total


def brute_force_F(cfg: LocConfig, d: int) -> Fraction:  # noqa: N802
    """
    The q^d coefficient of F by summing over every colored tree.

    Raises:
        ValueError: If d exceeds the brute-force limit or d_max.
    """
    if d > BRUTE_FORCE_MAX_DEGREE or d > cfg.d_max:
        msg = f"Brute force is limited to degree {min(BRUTE_FORCE_MAX_DEGREE, cfg.d_max)}, got {d}"
        raise ValueError(msg)
    return graph_sum(cfg, d).coefficient(2 * d - 2) * orientation_sign(cfg, d)
