"""Truncated bi-Laurent scalars and multivariate q-series over exact rationals."""

import logging
from collections.abc import Callable, Iterable, Mapping, Sequence
from fractions import Fraction
from math import comb
from typing import Literal

from . import linalg
from .cohomology import CohomologyRing, RingMap
from .errors import BadConstantTerm, BoxMismatch, BoxOverflow, NonInvertibleFactor, NotConverged, RingMismatch
from .types import MAX_INVERSION_ROUNDS, SCALAR_WINDOW, Box, CohClass, Multidegree, Slot, Window

logger = logging.getLogger(__name__)

type Scalar = BiLaurent | Fraction | int
type Expansion = Literal["hbar", "lambda"]


def degrees_in_box(box: Box) -> list[Multidegree]:
    """All multidegrees inside a box, ordered by total degree then lex."""
    out: list[Multidegree] = [()]
    for bound in box:
        out = [(*d, n) for d in out for n in range(bound + 1)]
    return sorted(out, key=lambda d: (sum(d), d))


def in_box(d: Multidegree, box: Box) -> bool:
    """Check whether a multidegree lies inside a box."""
    return all(0 <= x <= b for x, b in zip(d, box, strict=True))


def add_degrees(a: Multidegree, b: Multidegree) -> Multidegree:
    """Componentwise sum of two multidegrees."""
    return tuple(x + y for x, y in zip(a, b, strict=True))


def sub_degrees(a: Multidegree, b: Multidegree) -> Multidegree:
    """Componentwise difference of two multidegrees."""
    return tuple(x - y for x, y in zip(a, b, strict=True))


def covers(outer: Box, inner: Box) -> bool:
    """Whether box `outer` contains box `inner`."""
    return len(outer) == len(inner) and all(o >= i for o, i in zip(outer, inner, strict=True))


class BiLaurent:
    """
    A Laurent polynomial in hbar and lambda with rational coefficients.

    Terms outside the window are dropped on construction and after every
    operation; zero coefficients are never stored.
    """

    __slots__ = ("terms", "window")

    def __init__(self, terms: Mapping[Slot, Fraction | int] | None = None, window: Window = SCALAR_WINDOW) -> None:
        self.window = window
        self.terms: dict[Slot, Fraction] = {}
        if terms:
            for (h, l), c in terms.items():
                if c and window.contains(h, l):
                    self.terms[(h, l)] = Fraction(c)

    @classmethod
    def const(cls, c: Fraction | int, window: Window = SCALAR_WINDOW) -> "BiLaurent":
        """A constant."""
        return cls({(0, 0): c}, window)

    @classmethod
    def monomial(cls, c: Fraction | int, h: int, l: int, window: Window) -> "BiLaurent":
        """The single term c * hbar^h * lambda^l."""
        return cls({(h, l): c}, window)

    @classmethod
    def _raw(cls, terms: dict[Slot, Fraction], window: Window) -> "BiLaurent":
        out = cls.__new__(cls)
        out.window = window
        out.terms = terms
        return out

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int | Fraction):
            other = BiLaurent.const(other, self.window)
        if not isinstance(other, BiLaurent):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        body = " + ".join(f"{c}*h^{h}*l^{l}" for (h, l), c in sorted(self.terms.items())) or "0"
        return f"BiLaurent({body})"

    def __neg__(self) -> "BiLaurent":
        return BiLaurent._raw({k: -c for k, c in self.terms.items()}, self.window)

    def __add__(self, other: "Scalar") -> "BiLaurent":
        if not isinstance(other, BiLaurent):
            other = BiLaurent.const(other, self.window)
        window = self.window if self.window == other.window else self.window.union(other.window)
        out = dict(self.terms)
        for k, c in other.terms.items():
            v = out.get(k, 0) + c
            if v:
                out[k] = v
            else:
                out.pop(k, None)
        return BiLaurent._raw(out, window)

    __radd__ = __add__

    def __sub__(self, other: "Scalar") -> "BiLaurent":
        if not isinstance(other, BiLaurent):
            other = BiLaurent.const(other, self.window)
        return self + (-other)

    def __rsub__(self, other: "Scalar") -> "BiLaurent":
        return (-self) + other

    def __mul__(self, other: "Scalar") -> "BiLaurent":
        if not isinstance(other, BiLaurent):
            if not isinstance(other, int | Fraction):
                return NotImplemented
            if not other:
                return BiLaurent._raw({}, self.window)
            c = Fraction(other)
            return BiLaurent._raw({k: v * c for k, v in self.terms.items()}, self.window)
        window = self.window if self.window == other.window else self.window.union(other.window)
        out: dict[Slot, Fraction] = {}
        for (h1, l1), c1 in self.terms.items():
            for (h2, l2), c2 in other.terms.items():
                h, l = h1 + h2, l1 + l2
                if window.contains(h, l):
                    out[(h, l)] = out.get((h, l), 0) + c1 * c2
        return BiLaurent._raw({k: v for k, v in out.items() if v}, window)

    __rmul__ = __mul__

    def __truediv__(self, other: Fraction | int) -> "BiLaurent":
        return self * (1 / Fraction(other))

    def slot(self, h: int, l: int = 0) -> Fraction:
        """Coefficient of hbar^h lambda^l."""
        return self.terms.get((h, l), Fraction(0))

    def shifted(self, dh: int, dl: int = 0) -> "BiLaurent":
        """Multiply by hbar^dh lambda^dl, truncating to the window."""
        return BiLaurent({(h + dh, l + dl): c for (h, l), c in self.terms.items()}, self.window)

    def with_window(self, window: Window) -> "BiLaurent":
        """Re-truncate to another window."""
        return BiLaurent(self.terms, window)

    def hbar_part(self, predicate: Callable[[int], bool]) -> "BiLaurent":
        """Keep the terms whose hbar exponent satisfies the predicate."""
        return BiLaurent._raw({k: c for k, c in self.terms.items() if predicate(k[0])}, self.window)

    def nonnegative_hbar(self) -> "BiLaurent":
        """Terms with hbar exponent >= 0."""
        return self.hbar_part(lambda h: h >= 0)

    def negative_hbar(self) -> "BiLaurent":
        """Terms with hbar exponent < 0."""
        return self.hbar_part(lambda h: h < 0)

    def is_constant(self) -> bool:
        """Whether only the hbar^0 lambda^0 slot is present."""
        return all(k == (0, 0) for k in self.terms)

    def is_hbar_free(self) -> bool:
        """Whether no term carries a nonzero hbar exponent."""
        return all(h == 0 for h, _ in self.terms)

    def constant(self) -> Fraction:
        """The hbar^0 lambda^0 coefficient."""
        return self.slot(0, 0)

    def min_hbar(self) -> int | None:
        """Lowest hbar exponent present, or None for zero."""
        return min((h for h, _ in self.terms), default=None)

    def max_hbar(self) -> int | None:
        """Highest hbar exponent present, or None for zero."""
        return max((h for h, _ in self.terms), default=None)


class CohValue:
    """A cohomology-valued coefficient: one BiLaurent per ring basis element."""

    __slots__ = ("comps", "ring")

    def __init__(self, ring: CohomologyRing, comps: Sequence[BiLaurent]) -> None:
        if len(comps) != ring.dim:
            msg = f"Expected {ring.dim} components, got {len(comps)}"
            raise ValueError(msg)
        self.ring = ring
        self.comps = tuple(comps)

    @classmethod
    def zero(cls, ring: CohomologyRing, window: Window) -> "CohValue":
        """The zero value."""
        return cls(ring, [BiLaurent({}, window)] * ring.dim)

    @classmethod
    def from_class(cls, ring: CohomologyRing, c: CohClass, window: Window) -> "CohValue":
        """A constant (hbar and lambda free) class."""
        return cls(ring, [BiLaurent.const(x, window) for x in c])

    @classmethod
    def unit(cls, ring: CohomologyRing, window: Window) -> "CohValue":
        """The unit class."""
        return cls.from_class(ring, ring.unit(), window)

    @property
    def window(self) -> Window:
        return self.comps[0].window

    def __bool__(self) -> bool:
        return any(self.comps)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CohValue):
            return NotImplemented
        return self.ring is other.ring and self.comps == other.comps

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"CohValue({dict(zip(self.ring.basis_names, self.comps, strict=True))})"

    def _check(self, other: "CohValue") -> None:
        if other.ring is not self.ring:
            msg = "Cannot combine values over different cohomology rings"
            raise RingMismatch(msg)

    def __neg__(self) -> "CohValue":
        return CohValue(self.ring, [-c for c in self.comps])

    def __add__(self, other: "CohValue") -> "CohValue":
        self._check(other)
        return CohValue(self.ring, [a + b for a, b in zip(self.comps, other.comps, strict=True)])

    def __sub__(self, other: "CohValue") -> "CohValue":
        self._check(other)
        return CohValue(self.ring, [a - b for a, b in zip(self.comps, other.comps, strict=True)])

    def __mul__(self, other: "CohValue | Scalar") -> "CohValue":
        if not isinstance(other, CohValue):
            return CohValue(self.ring, [c * other for c in self.comps])
        self._check(other)
        window = self.window.union(other.window)
        out = [BiLaurent({}, window) for _ in range(self.ring.dim)]
        table = self.ring.mul_table
        for i, a in enumerate(self.comps):
            if not a:
                continue
            for j, b in enumerate(other.comps):
                if not b:
                    continue
                ab = a * b
                if not ab:
                    continue
                for k, z in enumerate(table[i][j]):
                    if z:
                        out[k] = out[k] + ab * z
        return CohValue(self.ring, out)

    __rmul__ = __mul__

    def mul_class(self, c: CohClass) -> "CohValue":
        """Multiply by a rational class."""
        return self * CohValue.from_class(self.ring, c, self.window)

    def shifted(self, dh: int, dl: int = 0) -> "CohValue":
        """Multiply by hbar^dh lambda^dl."""
        return CohValue(self.ring, [c.shifted(dh, dl) for c in self.comps])

    def map_components(self, fn: Callable[[BiLaurent], BiLaurent]) -> "CohValue":
        """Apply a function to every component."""
        return CohValue(self.ring, [fn(c) for c in self.comps])

    def nonnegative_hbar(self) -> "CohValue":
        return self.map_components(BiLaurent.nonnegative_hbar)

    def negative_hbar(self) -> "CohValue":
        return self.map_components(BiLaurent.negative_hbar)

    def slot(self, h: int, l: int = 0) -> CohClass:
        """The rational class sitting at hbar^h lambda^l."""
        return tuple(c.slot(h, l) for c in self.comps)

    def with_window(self, window: Window) -> "CohValue":
        return self.map_components(lambda c: c.with_window(window))

    def map_ring(self, ring_map: RingMap) -> "CohValue":
        """Push the value through a ring homomorphism."""
        if ring_map.source is not self.ring:
            msg = "Ring map source does not match the value's ring"
            raise RingMismatch(msg)
        target = ring_map.target
        out = [BiLaurent({}, self.window) for _ in range(target.dim)]
        for a, comp in enumerate(self.comps):
            if not comp:
                continue
            for b, x in enumerate(ring_map.matrix[a]):
                if x:
                    out[b] = out[b] + comp * x
        return CohValue(target, out)


def linear_factor(ring: CohomologyRing, cls: CohClass, hbar: int, lam: Fraction, window: Window) -> CohValue:
    """The value cls + hbar*hbar + lam*lambda."""
    value = CohValue.from_class(ring, cls, window)
    shift = BiLaurent({(1, 0): hbar, (0, 1): lam}, window)
    comps = list(value.comps)
    comps[0] = comps[0] + shift
    return CohValue(ring, comps)


def invert_linear(
    ring: CohomologyRing,
    cls: CohClass,
    hbar: int,
    lam: Fraction,
    window: Window,
    expand: Expansion | None = None,
) -> CohValue:
    """
    Invert cls + hbar*hbar + lam*lambda where cls is nilpotent.

    The unit part is inverted as a series in 1/hbar or in 1/lambda; the
    nilpotent part is handled by a finite geometric series.

    Args:
        ring: Ring of the class.
        cls: Nilpotent class (its unit coordinate must be 0).
        hbar: Integer hbar coefficient.
        lam: Rational lambda coefficient.
        window: Truncation window.
        expand: Variable to expand in when both coefficients are nonzero.

    Returns:
        The inverse as a cohomology-valued coefficient.

    Raises:
        NonInvertibleFactor: If both the hbar and lambda coefficients vanish.
    """
    if cls[0] != 0:
        msg = "The class part of a linear factor must be nilpotent"
        raise ValueError(msg)
    lam = Fraction(lam)
    if hbar == 0 and lam == 0:
        msg = "Factor has no hbar or lambda part and cannot be inverted"
        raise NonInvertibleFactor(msg)
    if expand is None or (expand == "hbar" and hbar == 0) or (expand == "lambda" and lam == 0):
        expand = "hbar" if lam == 0 else "lambda"

    # 1 / (m hbar + c lambda)^(n+1) as an expansion in the chosen variable
    def unit_inverse_power(n: int) -> BiLaurent:
        terms: dict[Slot, Fraction] = {}
        if expand == "hbar":
            lead, ratio = Fraction(hbar), lam / hbar
            j = 0
            while True:
                h, l = -(n + 1) - j, j
                if h < window.hbar_min or l > window.lambda_max or (ratio == 0 and j > 0):
                    break
                terms[(h, l)] = comb(n + j, j) * (-ratio) ** j / lead ** (n + 1)
                j += 1
        else:
            lead, ratio = lam, Fraction(hbar) / lam
            j = 0
            while True:
                h, l = j, -(n + 1) - j
                if l < window.lambda_min or h > window.hbar_max or (ratio == 0 and j > 0):
                    break
                terms[(h, l)] = comb(n + j, j) * (-ratio) ** j / lead ** (n + 1)
                j += 1
        return BiLaurent(terms, window)

    result = CohValue.zero(ring, window)
    power = ring.unit()
    neg = tuple(-x for x in cls)
    n = 0
    while any(power):
        result = result + CohValue.from_class(ring, power, window) * unit_inverse_power(n)
        power = ring.mul(power, neg)
        n += 1
    return result


class ScalarSeries:
    """A truncated q-series with BiLaurent coefficients."""

    __slots__ = ("box", "coeffs", "window")

    def __init__(
        self,
        coeffs: Mapping[Multidegree, "Scalar"] | None,
        box: Box,
        window: Window = SCALAR_WINDOW,
    ) -> None:
        self.box = tuple(box)
        self.window = window
        self.coeffs: dict[Multidegree, BiLaurent] = {}
        for d, c in (coeffs or {}).items():
            if not in_box(tuple(d), self.box):
                continue
            value = c if isinstance(c, BiLaurent) else BiLaurent.const(c, window)
            if value:
                self.coeffs[tuple(d)] = value

    @classmethod
    def zero(cls, box: Box, window: Window = SCALAR_WINDOW) -> "ScalarSeries":
        return cls({}, box, window)

    @classmethod
    def one(cls, box: Box, window: Window = SCALAR_WINDOW) -> "ScalarSeries":
        return cls({(0,) * len(box): 1}, box, window)

    @classmethod
    def variable(cls, i: int, box: Box, window: Window = SCALAR_WINDOW) -> "ScalarSeries":
        """The series q_{i+1}."""
        return cls({tuple(int(j == i) for j in range(len(box))): 1}, box, window)

    @classmethod
    def from_rationals(cls, coeffs: Mapping[Multidegree, Fraction | int], box: Box) -> "ScalarSeries":
        return cls(dict(coeffs), box)

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ScalarSeries):
            return NotImplemented
        return self.box == other.box and self.coeffs == other.coeffs

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"ScalarSeries({self.coeffs}, box={self.box})"

    def _check(self, other: "ScalarSeries") -> None:
        if other.box != self.box:
            msg = f"Box mismatch: {self.box} vs {other.box}"
            raise BoxMismatch(msg)

    def like(self, coeffs: Mapping[Multidegree, "Scalar"], window: Window | None = None) -> "ScalarSeries":
        return ScalarSeries(coeffs, self.box, window or self.window)

    def __neg__(self) -> "ScalarSeries":
        return self.like({d: -c for d, c in self.coeffs.items()})

    def __add__(self, other: "ScalarSeries | Scalar") -> "ScalarSeries":
        if not isinstance(other, ScalarSeries):
            other = ScalarSeries({(0,) * len(self.box): other}, self.box, self.window)
        self._check(other)
        out = dict(self.coeffs)
        for d, c in other.coeffs.items():
            out[d] = out[d] + c if d in out else c
        return self.like(out, self.window.union(other.window))

    __radd__ = __add__

    def __sub__(self, other: "ScalarSeries | Scalar") -> "ScalarSeries":
        return self + (-other)

    def __rsub__(self, other: "Scalar") -> "ScalarSeries":
        return (-self) + other

    def __mul__(self, other: "ScalarSeries | Scalar") -> "ScalarSeries":
        if isinstance(other, QSeries | MatrixSeries):
            return NotImplemented
        if not isinstance(other, ScalarSeries):
            return self.like({d: c * other for d, c in self.coeffs.items()})
        self._check(other)
        window = self.window.union(other.window)
        out: dict[Multidegree, BiLaurent] = {}
        for da, ca in self.coeffs.items():
            for db, cb in other.coeffs.items():
                d = add_degrees(da, db)
                if in_box(d, self.box):
                    prod = ca * cb
                    out[d] = out[d] + prod if d in out else prod
        return self.like(out, window)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "ScalarSeries":
        out = ScalarSeries.one(self.box, self.window)
        for _ in range(n):
            out = out * self
        return out

    def coefficient(self, d: Multidegree) -> BiLaurent:
        """The coefficient at multidegree d."""
        return self.coeffs.get(tuple(d), BiLaurent({}, self.window))

    def rational(self, d: Multidegree) -> Fraction:
        """The hbar^0 lambda^0 coefficient at multidegree d."""
        return self.coefficient(d).constant()

    def rationals(self) -> dict[Multidegree, Fraction]:
        """
        The coefficients of an hbar and lambda free series.

        Raises:
            ValueError: If some coefficient carries hbar or lambda.
        """
        out = {}
        for d, c in self.coeffs.items():
            if not c.is_constant():
                msg = f"Coefficient at {d} is not a plain rational: {c}"
                raise ValueError(msg)
            out[d] = c.constant()
        return out

    def constant_term(self) -> BiLaurent:
        return self.coefficient((0,) * len(self.box))

    def slot(self, h: int, l: int = 0) -> "ScalarSeries":
        """The rational series sitting at hbar^h lambda^l."""
        return ScalarSeries({d: c.slot(h, l) for d, c in self.coeffs.items()}, self.box)

    def shifted(self, dh: int, dl: int = 0) -> "ScalarSeries":
        return self.like({d: c.shifted(dh, dl) for d, c in self.coeffs.items()})

    def truncate(self, box: Box) -> "ScalarSeries":
        """Restrict to a smaller box."""
        return ScalarSeries(self.coeffs, box, self.window)

    def with_window(self, window: Window) -> "ScalarSeries":
        return ScalarSeries({d: c.with_window(window) for d, c in self.coeffs.items()}, self.box, window)

    def q_derivative(self, i: int) -> "ScalarSeries":
        """Apply q_i d/dq_i."""
        return self.like({d: c * d[i] for d, c in self.coeffs.items()})

    def theta(self, i: int) -> "ScalarSeries":
        """Apply hbar q_i d/dq_i."""
        return self.like({d: c.shifted(1) * d[i] for d, c in self.coeffs.items()})

    def is_hbar_free(self) -> bool:
        return all(c.is_hbar_free() for c in self.coeffs.values())

    def is_zero(self) -> bool:
        return not self.coeffs

    def one_like(self) -> "ScalarSeries":
        return ScalarSeries.one(self.box, self.window)


class QSeries:
    """
    A truncated q-series with cohomology-valued coefficients.

    When `prefactor` is set the series stands for
    exp(sum_i p_i log q_i / hbar) times the stored data.
    """

    __slots__ = ("box", "coeffs", "prefactor", "ring", "window")

    def __init__(
        self,
        ring: CohomologyRing,
        coeffs: Mapping[Multidegree, CohValue] | None,
        box: Box,
        window: Window,
        prefactor: bool = False,
    ) -> None:
        self.ring = ring
        self.box = tuple(box)
        self.window = window
        self.prefactor = prefactor
        self.coeffs: dict[Multidegree, CohValue] = {}
        for d, c in (coeffs or {}).items():
            if in_box(tuple(d), self.box) and c:
                if c.ring is not ring:
                    msg = "Coefficient ring does not match the series ring"
                    raise RingMismatch(msg)
                self.coeffs[tuple(d)] = c

    @classmethod
    def one(cls, ring: CohomologyRing, box: Box, window: Window, prefactor: bool = False) -> "QSeries":
        return cls(ring, {(0,) * len(box): CohValue.unit(ring, window)}, box, window, prefactor)

    @classmethod
    def from_scalar(cls, ring: CohomologyRing, s: ScalarSeries, c: CohClass | None = None) -> "QSeries":
        """Embed a scalar series times a constant class (the unit by default)."""
        cls_ = ring.unit() if c is None else c
        base = CohValue.from_class(ring, cls_, s.window)
        return cls(ring, {d: base * v for d, v in s.coeffs.items()}, s.box, s.window)

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QSeries):
            return NotImplemented
        return (
            self.ring is other.ring
            and self.box == other.box
            and self.prefactor == other.prefactor
            and self.coeffs == other.coeffs
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"QSeries(dim={self.ring.dim}, box={self.box}, prefactor={self.prefactor}, terms={len(self.coeffs)})"

    def like(self, coeffs: Mapping[Multidegree, CohValue], window: Window | None = None, prefactor: bool | None = None) -> "QSeries":
        return QSeries(
            self.ring,
            coeffs,
            self.box,
            window or self.window,
            self.prefactor if prefactor is None else prefactor,
        )

    def _check(self, other: "QSeries") -> None:
        if other.ring is not self.ring:
            msg = "Cannot combine series over different cohomology rings"
            raise RingMismatch(msg)
        if other.box != self.box:
            msg = f"Box mismatch: {self.box} vs {other.box}"
            raise BoxMismatch(msg)

    def coefficient(self, d: Multidegree) -> CohValue:
        return self.coeffs.get(tuple(d)) or CohValue.zero(self.ring, self.window)

    def __neg__(self) -> "QSeries":
        return self.like({d: -c for d, c in self.coeffs.items()})

    def __add__(self, other: "QSeries") -> "QSeries":
        self._check(other)
        if self.prefactor != other.prefactor:
            msg = "Cannot add a prefactor series to a plain series"
            raise ValueError(msg)
        out = dict(self.coeffs)
        for d, c in other.coeffs.items():
            out[d] = out[d] + c if d in out else c
        return self.like(out, self.window.union(other.window))

    def __sub__(self, other: "QSeries") -> "QSeries":
        return self + (-other)

    def __mul__(self, other: "QSeries | ScalarSeries | Scalar") -> "QSeries":
        if isinstance(other, ScalarSeries):
            if other.box != self.box:
                msg = f"Box mismatch: {self.box} vs {other.box}"
                raise BoxMismatch(msg)
            out: dict[Multidegree, CohValue] = {}
            for da, ca in self.coeffs.items():
                for db, cb in other.coeffs.items():
                    d = add_degrees(da, db)
                    if in_box(d, self.box):
                        prod = ca * cb
                        out[d] = out[d] + prod if d in out else prod
            return self.like(out, self.window.union(other.window))
        if not isinstance(other, QSeries):
            return self.like({d: c * other for d, c in self.coeffs.items()})
        self._check(other)
        if self.prefactor and other.prefactor:
            msg = "At most one factor may carry the log prefactor"
            raise ValueError(msg)
        window = self.window.union(other.window)
        out = {}
        for da, ca in self.coeffs.items():
            for db, cb in other.coeffs.items():
                d = add_degrees(da, db)
                if in_box(d, self.box):
                    prod = ca * cb
                    out[d] = out[d] + prod if d in out else prod
        return self.like(out, window, self.prefactor or other.prefactor)

    __rmul__ = __mul__

    def mul_class(self, c: CohClass) -> "QSeries":
        """Multiply by a constant rational class."""
        return self.like({d: v.mul_class(c) for d, v in self.coeffs.items()})

    def theta(self, i: int) -> "QSeries":
        """
        Apply theta_i = hbar q_i d/dq_i.

        With the prefactor set this also multiplies the stored data by p_i.
        """
        out = {d: c.shifted(1) * d[i] for d, c in self.coeffs.items()}
        if self.prefactor:
            p = self.ring.generator(i)
            for d, c in self.coeffs.items():
                term = c.mul_class(p)
                out[d] = out[d] + term if d in out else term
        return self.like(out)

    def theta_monomial(self, exps: Sequence[int]) -> "QSeries":
        """Apply the theta monomial prod_i theta_i^exps[i]."""
        out = self
        for i, e in enumerate(exps):
            for _ in range(e):
                out = out.theta(i)
        return out

    def extract(self, h: int, l: int, basis_index: int) -> ScalarSeries:
        """The rational q-series at slot (hbar^h, lambda^l, basis element)."""
        return ScalarSeries(
            {d: c.comps[basis_index].slot(h, l) for d, c in self.coeffs.items()}, self.box
        )

    def component(self, basis_index: int) -> ScalarSeries:
        """The BiLaurent-valued series of one basis component."""
        return ScalarSeries({d: c.comps[basis_index] for d, c in self.coeffs.items()}, self.box, self.window)

    def truncate(self, box: Box) -> "QSeries":
        """Restrict to a smaller box."""
        return QSeries(self.ring, self.coeffs, box, self.window, self.prefactor)

    def with_window(self, window: Window) -> "QSeries":
        return QSeries(
            self.ring,
            {d: c.with_window(window) for d, c in self.coeffs.items()},
            self.box,
            window,
            self.prefactor,
        )

    def map_ring(self, ring_map: RingMap) -> "QSeries":
        """Push every coefficient through a ring homomorphism."""
        return QSeries(
            ring_map.target,
            {d: c.map_ring(ring_map) for d, c in self.coeffs.items()},
            self.box,
            self.window,
            self.prefactor,
        )

    def is_zero(self) -> bool:
        return not self.coeffs

    def one_like(self) -> "QSeries":
        return QSeries.one(self.ring, self.box, self.window)


def _check_exp_argument(s: ScalarSeries | QSeries) -> None:
    if isinstance(s, QSeries) and s.prefactor:
        msg = "exp/log are not defined on prefactor series"
        raise ValueError(msg)
    zero = (0,) * len(s.box)
    const = s.coeffs.get(zero)
    if const is None:
        return
    unit_part = const.comps[0] if isinstance(const, CohValue) else const
    if unit_part:
        msg = "exp needs a series whose constant term has no unit part"
        raise BadConstantTerm(msg)


def exp_series[S: (ScalarSeries, QSeries)](s: S) -> S:
    """
    Truncated exponential of a series with nilpotent constant term.

    Raises:
        BadConstantTerm: If the constant term has a unit (scalar) part.
    """
    _check_exp_argument(s)
    total = s.one_like()
    term = s.one_like()
    n = 1
    while True:
        term = term * s * Fraction(1, n)
        if term.is_zero():
            break
        total = total + term
        n += 1
    return total


def log_series[S: (ScalarSeries, QSeries)](s: S) -> S:
    """
    Truncated logarithm of a series with constant term exactly 1.

    Raises:
        BadConstantTerm: If the constant term is not 1.
    """
    if isinstance(s, QSeries) and s.prefactor:
        msg = "exp/log are not defined on prefactor series"
        raise ValueError(msg)
    x = s - s.one_like()
    const = x.coeffs.get((0,) * len(s.box))
    if const is not None:
        msg = "log needs a series with constant term 1"
        raise BadConstantTerm(msg)
    total = s.one_like() * 0
    power = s.one_like()
    n = 1
    while True:
        power = power * x
        if power.is_zero():
            break
        total = total + power * Fraction((-1) ** (n + 1), n)
        n += 1
    return total


def reciprocal(s: ScalarSeries) -> ScalarSeries:
    """
    Reciprocal of a scalar series with a nonzero rational constant term.

    Raises:
        BadConstantTerm: If the constant term is zero or not a plain rational.
    """
    const = s.constant_term()
    if not const or not const.is_constant():
        msg = "reciprocal needs a nonzero rational constant term"
        raise BadConstantTerm(msg)
    c = const.constant()
    x = s * (1 / c) - s.one_like()
    total = s.one_like()
    power = s.one_like()
    while True:
        power = power * (-x)
        if power.is_zero():
            break
        total = total + power
    return total * (1 / c)


class SeriesMap:
    """
    A change of variables old_i = new_i * units[i](new).

    Attributes:
        units: The unit power series, one per variable, constant term 1.
        box: Box in which the map is known.
        variables: (old, new) variable names, for display only.
    """

    __slots__ = ("box", "units", "variables")

    def __init__(self, units: Sequence[ScalarSeries], box: Box, variables: tuple[str, str] = ("q", "y")) -> None:
        self.box = tuple(box)
        self.units = tuple(u.truncate(self.box) if u.box != self.box else u for u in units)
        self.variables = variables
        for i, u in enumerate(self.units):
            if u.rational((0,) * len(self.box)) != 1 or not u.constant_term().is_constant():
                msg = f"Component {i} of a series map must have leading coefficient 1"
                raise BadConstantTerm(msg)
            u.rationals()

    @classmethod
    def identity(cls, box: Box, variables: tuple[str, str] = ("q", "y")) -> "SeriesMap":
        return cls([ScalarSeries.one(box)] * len(box), box, variables)

    @classmethod
    def from_log_shifts(cls, shifts: Sequence[ScalarSeries], box: Box, variables: tuple[str, str] = ("y", "q")) -> "SeriesMap":
        """Build y_i = q_i exp(shifts[i](q)) from series with zero constant term."""
        return cls([exp_series(s.truncate(box)) for s in shifts], box, variables)

    def component(self, i: int) -> ScalarSeries:
        """The full component new_i * units[i]."""
        return ScalarSeries.variable(i, self.box) * self.units[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SeriesMap):
            return NotImplemented
        return self.box == other.box and self.units == other.units

    __hash__ = None  # type: ignore[assignment]

    def is_identity(self) -> bool:
        one = ScalarSeries.one(self.box)
        return all(u == one for u in self.units)

    def truncate(self, box: Box) -> "SeriesMap":
        return SeriesMap([u.truncate(box) for u in self.units], box, self.variables)


def _monomial_factors(m: SeriesMap, box: Box) -> dict[Multidegree, ScalarSeries]:
    """prod_i units[i]^d_i for every d in the box."""
    if not covers(m.box, box):
        msg = f"Series map known in box {m.box} cannot serve box {box}"
        raise BoxOverflow(msg)
    units = [u.truncate(box) for u in m.units]
    factors: dict[Multidegree, ScalarSeries] = {}
    for d in degrees_in_box(box):
        if not any(d):
            factors[d] = ScalarSeries.one(box)
            continue
        i = next(j for j, x in enumerate(d) if x)
        prev = tuple(x - int(j == i) for j, x in enumerate(d))
        factors[d] = factors[prev] * units[i]
    return factors


def _substitute_coeffs[V: (BiLaurent, CohValue)](
    coeffs: Mapping[Multidegree, V], factors: Mapping[Multidegree, ScalarSeries], box: Box
) -> dict[Multidegree, V]:
    out: dict[Multidegree, V] = {}
    for d, c in coeffs.items():
        for e, r in factors[d].coeffs.items():
            target = add_degrees(d, e)
            if in_box(target, box):
                term = c * r.constant()
                out[target] = out[target] + term if target in out else term
    return out


def substitute[S: (ScalarSeries, QSeries)](s: S, m: SeriesMap) -> S:
    """
    Compose a series with a change of variables old_i = new_i * units[i](new).

    With the prefactor set, log old_i = log new_i + log units[i] and the
    second part is folded into the stored data as exp(sum p_i log units[i] / hbar).

    Raises:
        BoxOverflow: If the map is not known throughout the series' box.
    """
    factors = _monomial_factors(m, s.box)
    if isinstance(s, ScalarSeries):
        return ScalarSeries(_substitute_coeffs(s.coeffs, factors, s.box), s.box, s.window)
    result = QSeries(s.ring, _substitute_coeffs(s.coeffs, factors, s.box), s.box, s.window, s.prefactor)
    if s.prefactor:
        shift = QSeries(s.ring, {}, s.box, s.window)
        for i, u in enumerate(m.units):
            log_u = log_series(u.truncate(s.box))
            if log_u.is_zero():
                continue
            shift = shift + QSeries.from_scalar(s.ring, log_u.with_window(s.window), s.ring.generator(i))
        if not shift.is_zero():
            result = result * exp_series(QSeries(s.ring, {d: c.shifted(-1) for d, c in shift.coeffs.items()}, s.box, s.window))
    return result


def invert_map(m: SeriesMap, max_rounds: int = MAX_INVERSION_ROUNDS) -> SeriesMap:
    """
    Compositional inverse of a series map within its box.

    If y_i = q_i u_i(q), the inverse q_i = y_i v_i(y) is the fixed point of
    v_i = 1 / u_i(y v(y)); each round fixes one more total degree, so a box
    of total degree n settles within n + 2 rounds.

    Raises:
        NotConverged: If the iteration has not settled after max_rounds rounds.
    """
    box = m.box
    current = SeriesMap.identity(box, (m.variables[1], m.variables[0]))
    for rounds in range(min(sum(box) + 3, max_rounds)):
        nxt = SeriesMap(
            [reciprocal(substitute(u, current)) for u in m.units],
            box,
            current.variables,
        )
        if nxt == current:
            logger.debug("Map inversion settled after %d rounds", rounds)
            return current
        current = nxt
    msg = f"Series map inversion did not settle within {min(sum(box) + 3, max_rounds)} rounds"
    raise NotConverged(msg)


def compose(outer: SeriesMap, inner: SeriesMap) -> SeriesMap:
    """The map obtained by substituting `inner` into `outer`."""
    units = [substitute(u, inner) * v for u, v in zip(outer.units, inner.units, strict=True)]
    return SeriesMap(units, inner.box, (outer.variables[0], inner.variables[1]))


def substitute_monomial[S: (ScalarSeries, QSeries)](s: S, exponents: Sequence[Sequence[int]], box: Box) -> S:
    """
    Replace q^d by y^(d A) where A is an integer matrix.

    Terms landing outside `box` are dropped. For prefactor series the
    stored data is carried over unchanged, so the prefactor now reads
    sum_j (sum_i A_ij p_i) log y_j.
    """
    def image(d: Multidegree) -> Multidegree:
        return tuple(sum(d[i] * exponents[i][j] for i in range(len(d))) for j in range(len(box)))

    coeffs = {image(d): c for d, c in s.coeffs.items()}
    if isinstance(s, ScalarSeries):
        return ScalarSeries(coeffs, box, s.window)
    return QSeries(s.ring, coeffs, box, s.window, s.prefactor)


def rational_series(coeffs: Iterable[tuple[Multidegree, Fraction | int]], box: Box) -> ScalarSeries:
    """Build a plain rational series from (degree, coefficient) pairs."""
    return ScalarSeries(dict(coeffs), box)


type CoefficientMatrix = list[list[BiLaurent]]


class MatrixSeries:
    """A square matrix whose entries are truncated q-series with BiLaurent coefficients."""

    __slots__ = ("box", "entries", "window")

    def __init__(self, entries: Sequence[Sequence[ScalarSeries]], box: Box, window: Window = SCALAR_WINDOW) -> None:
        self.box = tuple(box)
        self.window = window
        self.entries = [list(row) for row in entries]
        if any(len(row) != len(self.entries) for row in self.entries):
            msg = "Matrix series must be square"
            raise ValueError(msg)

    @property
    def size(self) -> int:
        return len(self.entries)

    @classmethod
    def identity(cls, n: int, box: Box, window: Window = SCALAR_WINDOW) -> "MatrixSeries":
        return cls(
            [[ScalarSeries.one(box, window) if i == j else ScalarSeries.zero(box, window) for j in range(n)] for i in range(n)],
            box,
            window,
        )

    @classmethod
    def zero(cls, n: int, box: Box, window: Window = SCALAR_WINDOW) -> "MatrixSeries":
        return cls([[ScalarSeries.zero(box, window) for _ in range(n)] for _ in range(n)], box, window)

    @classmethod
    def constant(cls, matrix: Sequence[Sequence[Fraction | int]], box: Box, window: Window = SCALAR_WINDOW) -> "MatrixSeries":
        """A q-independent rational matrix."""
        zero = (0,) * len(box)
        return cls([[ScalarSeries({zero: x}, box, window) for x in row] for row in matrix], box, window)

    @classmethod
    def from_rows(cls, rows: Sequence[QSeries]) -> "MatrixSeries":
        """Row a holds the basis components of rows[a]."""
        box, window = rows[0].box, rows[0].window
        return cls([[row.component(b) for b in range(row.ring.dim)] for row in rows], box, window)

    @classmethod
    def from_coefficients(cls, coeffs: Mapping[Multidegree, CoefficientMatrix], n: int, box: Box, window: Window) -> "MatrixSeries":
        """Assemble from per-degree coefficient matrices."""
        entries = [[{} for _ in range(n)] for _ in range(n)]
        for d, mat in coeffs.items():
            for i in range(n):
                for j in range(n):
                    if mat[i][j]:
                        entries[i][j][d] = mat[i][j]
        return cls([[ScalarSeries(e, box, window) for e in row] for row in entries], box, window)

    def coefficients(self) -> dict[Multidegree, CoefficientMatrix]:
        """Per-degree coefficient matrices (only degrees with a nonzero entry)."""
        n = self.size
        out: dict[Multidegree, CoefficientMatrix] = {}
        for i in range(n):
            for j in range(n):
                for d, c in self.entries[i][j].coeffs.items():
                    if d not in out:
                        out[d] = [[BiLaurent({}, self.window) for _ in range(n)] for _ in range(n)]
                    out[d][i][j] = c
        return out

    def entry(self, i: int, j: int) -> ScalarSeries:
        return self.entries[i][j]

    def row(self, i: int) -> list[ScalarSeries]:
        return list(self.entries[i])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MatrixSeries):
            return NotImplemented
        return self.box == other.box and self.entries == other.entries

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"MatrixSeries(size={self.size}, box={self.box})"

    def map_entries(self, fn: Callable[[ScalarSeries], ScalarSeries]) -> "MatrixSeries":
        mapped = [[fn(e) for e in row] for row in self.entries]
        box = mapped[0][0].box if mapped and mapped[0] else self.box
        return MatrixSeries(mapped, box, self.window)

    def __neg__(self) -> "MatrixSeries":
        return self.map_entries(lambda e: -e)

    def __add__(self, other: "MatrixSeries") -> "MatrixSeries":
        return MatrixSeries(
            [[a + b for a, b in zip(ra, rb, strict=True)] for ra, rb in zip(self.entries, other.entries, strict=True)],
            self.box,
            self.window.union(other.window),
        )

    def __sub__(self, other: "MatrixSeries") -> "MatrixSeries":
        return self + (-other)

    def __mul__(self, other: "ScalarSeries | Scalar") -> "MatrixSeries":
        return self.map_entries(lambda e: e * other)

    __rmul__ = __mul__

    def __matmul__(self, other: "MatrixSeries") -> "MatrixSeries":
        n = self.size
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = ScalarSeries.zero(self.box, self.window)
                for k in range(n):
                    a, b = self.entries[i][k], other.entries[k][j]
                    if a and b:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return MatrixSeries(out, self.box, self.window.union(other.window))

    def transpose(self) -> "MatrixSeries":
        n = self.size
        return MatrixSeries([[self.entries[j][i] for j in range(n)] for i in range(n)], self.box, self.window)

    def inverse(self) -> "MatrixSeries":
        """
        Inverse through a Neumann series around the constant term.

        Raises:
            BadConstantTerm: If the degree-zero part is not an invertible rational matrix.
        """
        n = self.size
        zero = (0,) * len(self.box)
        const = []
        for row in self.entries:
            const_row = []
            for e in row:
                c = e.coefficient(zero)
                if not c.is_constant():
                    msg = "Matrix inverse needs a rational constant term"
                    raise BadConstantTerm(msg)
                const_row.append(c.constant())
            const.append(const_row)
        try:
            const_inv = linalg.inverse(const)
        except ValueError as e:
            msg = "Constant term of the matrix is singular"
            raise BadConstantTerm(msg) from e
        base = MatrixSeries.constant(const_inv, self.box, self.window)
        nilpotent = base @ (self - MatrixSeries.constant(const, self.box, self.window))
        total = MatrixSeries.identity(n, self.box, self.window)
        power = MatrixSeries.identity(n, self.box, self.window)
        while True:
            power = -(power @ nilpotent)
            if power.is_zero():
                break
            total = total + power
        return total @ base

    def is_zero(self) -> bool:
        return not any(e for row in self.entries for e in row)

    def is_hbar_free(self) -> bool:
        return all(e.is_hbar_free() for row in self.entries for e in row)

    def theta(self, i: int) -> "MatrixSeries":
        """Entrywise hbar q_i d/dq_i."""
        return self.map_entries(lambda e: e.theta(i))

    def q_derivative(self, i: int) -> "MatrixSeries":
        """Entrywise q_i d/dq_i."""
        return self.map_entries(lambda e: e.q_derivative(i))

    def slot(self, h: int, l: int = 0) -> "MatrixSeries":
        """The rational matrix series at hbar^h lambda^l."""
        return self.map_entries(lambda e: e.slot(h, l))

    def truncate(self, box: Box) -> "MatrixSeries":
        return self.map_entries(lambda e: e.truncate(box))

    def rational_entries(self) -> list[list[dict[Multidegree, Fraction]]]:
        """Entries of an hbar free matrix as rational coefficient maps."""
        return [[e.rationals() for e in row] for row in self.entries]

    def classical(self) -> list[list[Fraction]]:
        """The rational matrix at q = 0."""
        zero = (0,) * len(self.box)
        return [[e.rational(zero) for e in row] for row in self.entries]

    def conjugate(self, left: Sequence[Sequence[Fraction]], right: Sequence[Sequence[Fraction]]) -> "MatrixSeries":
        """Return left * self * right for constant rational matrices."""
        return (
            MatrixSeries.constant(left, self.box, self.window)
            @ self
            @ MatrixSeries.constant(right, self.box, self.window)
        )


def substitute_matrix(m: MatrixSeries, change: SeriesMap) -> MatrixSeries:
    """Compose every entry with a change of variables."""
    return m.map_entries(lambda e: substitute(e, change))


def substitute_matrix_monomial(m: MatrixSeries, exponents: Sequence[Sequence[int]], box: Box) -> MatrixSeries:
    """Apply a monomial substitution to every entry."""
    return m.map_entries(lambda e: substitute_monomial(e, exponents, box))
