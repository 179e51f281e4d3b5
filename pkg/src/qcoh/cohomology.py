"""Finite-dimensional graded quotient rings Q[p1..pk]/I."""

import itertools
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from . import linalg
from .errors import InconsistentRelations, NotAHomomorphism, NotFiniteDimensional
from .types import DEFAULT_DEGREE_CAP, CohClass, Monomial, Polynomial

logger = logging.getLogger(__name__)


def monomials_of_degree(num_generators: int, degree: int) -> list[Monomial]:
    """List the monomials of a given degree in ascending lex order (p1 > p2 > ...)."""
    found = [
        exps
        for exps in itertools.product(range(degree + 1), repeat=num_generators)
        if sum(exps) == degree
    ]
    return sorted(found)


def monomial_name(exps: Monomial) -> str:
    """Render a monomial as p1p2^2 style text; the empty monomial is "1"."""
    parts = []
    for i, e in enumerate(exps, start=1):
        if e == 1:
            parts.append(f"p{i}")
        elif e > 1:
            parts.append(f"p{i}^{e}")
    return "".join(parts) or "1"


def polynomial_degree(poly: Polynomial) -> int:
    """
    Return the degree of a homogeneous polynomial.

    Raises:
        ValueError: If the polynomial is zero or inhomogeneous.
    """
    degrees = {sum(m) for m, c in poly.items() if c != 0}
    if len(degrees) != 1:
        msg = f"Relation is not homogeneous: {poly}"
        raise ValueError(msg)
    return degrees.pop()


def multiply_polynomials(a: Polynomial, b: Polynomial) -> Polynomial:
    """Multiply two polynomials given as monomial dictionaries."""
    out: Polynomial = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            m = tuple(x + y for x, y in zip(ma, mb, strict=True))
            out[m] = out.get(m, Fraction(0)) + ca * cb
    return {m: c for m, c in out.items() if c != 0}


def linear_form(coeffs: Sequence[int | Fraction]) -> Polynomial:
    """Build the degree-one polynomial sum_i coeffs[i] p_i."""
    k = len(coeffs)
    return {
        tuple(int(i == j) for j in range(k)): Fraction(c) for i, c in enumerate(coeffs) if c != 0
    }


def product_of_linear_forms(forms: Iterable[Sequence[int | Fraction]], k: int) -> Polynomial:
    """Multiply a list of linear forms into a single polynomial."""
    out: Polynomial = {(0,) * k: Fraction(1)}
    for form in forms:
        out = multiply_polynomials(out, linear_form(form))
    return out


@dataclass(frozen=True)
class RingPresentation:
    """
    Generators and relations of a cohomology ring.

    Attributes:
        num_generators: Number of degree-one generators p1..pk.
        relations: Homogeneous relations as monomial dictionaries.
    """

    num_generators: int
    relations: tuple[Polynomial, ...]


@dataclass(frozen=True, eq=False)
class CohomologyRing:
    """
    A finite-dimensional graded quotient ring with a monomial basis.

    Attributes:
        num_generators: Number of generators.
        basis: Basis monomials; element 0 is the unit.
        normal_forms: Normal form of every monomial up to the degree cap.
        mul_table: mul_table[a][b] is the coefficient vector of basis[a] * basis[b].
        degree_cap: Degree above which every monomial vanishes.
    """

    num_generators: int
    basis: tuple[Monomial, ...]
    normal_forms: dict[Monomial, CohClass] = field(repr=False)
    mul_table: tuple[tuple[CohClass, ...], ...] = field(repr=False)
    degree_cap: int = DEFAULT_DEGREE_CAP
    relations: tuple[Polynomial, ...] = field(default=(), repr=False)

    @property
    def dim(self) -> int:
        """Dimension of the ring."""
        return len(self.basis)

    @property
    def top_degree(self) -> int:
        """Largest degree of a basis monomial."""
        return max(sum(m) for m in self.basis)

    @property
    def basis_names(self) -> tuple[str, ...]:
        """Display names of the basis monomials."""
        return tuple(monomial_name(m) for m in self.basis)

    def basis_degree(self, index: int) -> int:
        """Degree of a basis element."""
        return sum(self.basis[index])

    def zero(self) -> CohClass:
        """The zero class."""
        return (Fraction(0),) * self.dim

    def unit(self) -> CohClass:
        """The unit class."""
        return self.basis_vector(0)

    def basis_vector(self, index: int) -> CohClass:
        """The class of basis element `index`."""
        return tuple(Fraction(int(i == index)) for i in range(self.dim))

    def generator(self, i: int) -> CohClass:
        """The class of generator p_{i+1} (0-based index)."""
        return self.monomial(tuple(int(j == i) for j in range(self.num_generators)))

    def index(self, exps: Monomial) -> int:
        """Position of a basis monomial."""
        return self.basis.index(tuple(exps))

    def monomial(self, exps: Monomial) -> CohClass:
        """Normal form of an arbitrary monomial."""
        exps = tuple(exps)
        if len(exps) != self.num_generators:
            msg = f"Monomial {exps} has wrong length for {self.num_generators} generators"
            raise ValueError(msg)
        if sum(exps) > self.degree_cap:
            return self.zero()
        return self.normal_forms[exps]

    def polynomial(self, poly: Polynomial) -> CohClass:
        """Normal form of a polynomial."""
        out = [Fraction(0)] * self.dim
        for exps, c in poly.items():
            for idx, x in enumerate(self.monomial(exps)):
                out[idx] += c * x
        return tuple(out)

    def mul(self, a: CohClass, b: CohClass) -> CohClass:
        """Multiply two classes using the multiplication table."""
        out = [Fraction(0)] * self.dim
        for i, x in enumerate(a):
            if x == 0:
                continue
            for j, y in enumerate(b):
                if y == 0:
                    continue
                xy = x * y
                for k, z in enumerate(self.mul_table[i][j]):
                    if z:
                        out[k] += xy * z
        return tuple(out)

    def mult_matrix(self, cls: CohClass) -> list[list[Fraction]]:
        """Matrix of multiplication by `cls`; row b holds the coordinates of basis[b] * cls."""
        return [list(self.mul(self.basis_vector(b), cls)) for b in range(self.dim)]

    def linear_class(self, coeffs: Sequence[int | Fraction]) -> CohClass:
        """The degree-one class sum_i coeffs[i] p_i."""
        return self.polynomial(linear_form(coeffs))


def build_ring(pres: RingPresentation, degree_cap: int = DEFAULT_DEGREE_CAP) -> CohomologyRing:
    """
    Build a quotient ring by row-reducing relation multiples degree by degree.

    Monomials within a degree are ordered so that the smallest in lex order
    become pivots; the surviving (largest) monomials form the basis.

    Args:
        pres: Generators and homogeneous relations.
        degree_cap: Highest degree examined; every monomial must vanish there.

    Returns:
        The cohomology ring with normal forms and multiplication table.

    Raises:
        NotFiniteDimensional: If basis monomials survive at the degree cap.
        InconsistentRelations: If the unit reduces to zero.
        ValueError: If a relation is inhomogeneous.
    """
    k = pres.num_generators
    rel_degrees = [polynomial_degree(r) for r in pres.relations]

    basis_by_degree: list[list[Monomial]] = []
    reductions: dict[Monomial, dict[Monomial, Fraction]] = {}

    for degree in range(degree_cap + 1):
        columns = monomials_of_degree(k, degree)
        col_index = {m: i for i, m in enumerate(columns)}
        rows = []
        for rel, rel_deg in zip(pres.relations, rel_degrees, strict=True):
            if rel_deg > degree:
                continue
            for shift in monomials_of_degree(k, degree - rel_deg):
                row = [Fraction(0)] * len(columns)
                for m, c in multiply_polynomials(rel, {shift: Fraction(1)}).items():
                    row[col_index[m]] += c
                rows.append(row)
        reduced, pivots = linalg.rref(rows, len(columns))
        free = [m for i, m in enumerate(columns) if i not in set(pivots)]
        for row, pivot in zip(reduced, pivots, strict=True):
            reductions[columns[pivot]] = {
                columns[j]: -row[j] for j in range(len(columns)) if j not in pivots and row[j] != 0
            }
        basis_by_degree.append(sorted(free, reverse=True))
        logger.debug("Degree %d: %d basis monomials", degree, len(free))

    if not basis_by_degree[0]:
        msg = "The relations reduce 1 to 0"
        raise InconsistentRelations(msg)
    if basis_by_degree[degree_cap]:
        msg = f"Basis monomials survive at degree cap {degree_cap}; the quotient looks infinite"
        raise NotFiniteDimensional(msg)

    basis = tuple(m for group in basis_by_degree for m in group)
    position = {m: i for i, m in enumerate(basis)}
    normal_forms: dict[Monomial, CohClass] = {}
    for degree in range(degree_cap + 1):
        for m in monomials_of_degree(k, degree):
            vec = [Fraction(0)] * len(basis)
            if m in position:
                vec[position[m]] = Fraction(1)
            else:
                for target, c in reductions.get(m, {}).items():
                    vec[position[target]] += c
            normal_forms[m] = tuple(vec)

    mul_table = tuple(
        tuple(
            normal_forms.get(
                tuple(x + y for x, y in zip(a, b, strict=True)), (Fraction(0),) * len(basis)
            )
            for b in basis
        )
        for a in basis
    )
    ring = CohomologyRing(
        num_generators=k,
        basis=basis,
        normal_forms=normal_forms,
        mul_table=mul_table,
        degree_cap=degree_cap,
        relations=pres.relations,
    )
    logger.info("Built cohomology ring of dimension %d (top degree %d)", ring.dim, ring.top_degree)
    return ring


@dataclass(frozen=True)
class RingMap:
    """
    A ring homomorphism induced by a linear substitution of generators.

    Attributes:
        source: Domain ring.
        target: Codomain ring.
        generators: generators[i] holds the target coordinates of source p_{i+1}.
        matrix: matrix[a] holds the target coordinates of source basis element a.
    """

    source: CohomologyRing
    target: CohomologyRing
    generators: tuple[tuple[Fraction, ...], ...]
    matrix: tuple[CohClass, ...]

    def __call__(self, cls: CohClass) -> CohClass:
        out = [Fraction(0)] * self.target.dim
        for a, x in enumerate(cls):
            if x:
                for b, y in enumerate(self.matrix[a]):
                    out[b] += x * y
        return tuple(out)

    @property
    def is_isomorphism(self) -> bool:
        """Whether the induced map is bijective."""
        if self.source.dim != self.target.dim:
            return False
        try:
            linalg.inverse([list(row) for row in self.matrix])
        except ValueError:
            return False
        return True

    def conjugate(self, m: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
        """Express a source-basis operator in the target basis: L^-1 M L (row convention)."""
        l_mat = [list(row) for row in self.matrix]
        return linalg.matmul(linalg.matmul(linalg.inverse(l_mat), m), l_mat)


def _image(dst: CohomologyRing, gens: Sequence[CohClass], exps: Monomial) -> CohClass:
    out = dst.unit()
    for i, e in enumerate(exps):
        for _ in range(e):
            out = dst.mul(out, gens[i])
    return out


def linear_substitute(
    ring_src: CohomologyRing,
    ring_dst: CohomologyRing,
    matrix: Sequence[Sequence[int | Fraction]],
) -> RingMap:
    """
    Build the ring map sending source generator p_i to sum_j matrix[i][j] p~_j.

    Raises:
        NotAHomomorphism: If some source relation does not vanish in the target.
        ValueError: If the matrix has the wrong shape.
    """
    if len(matrix) != ring_src.num_generators or any(
        len(row) != ring_dst.num_generators for row in matrix
    ):
        msg = "Substitution matrix shape does not match the generator counts"
        raise ValueError(msg)
    gens = [ring_dst.linear_class(row) for row in matrix]
    for rel in ring_src.relations:
        image = [Fraction(0)] * ring_dst.dim
        for exps, c in rel.items():
            for idx, x in enumerate(_image(ring_dst, gens, exps)):
                image[idx] += c * x
        if any(image):
            msg = f"Relation {rel} does not vanish under the substitution"
            raise NotAHomomorphism(msg)
    images = tuple(_image(ring_dst, gens, m) for m in ring_src.basis)
    return RingMap(
        source=ring_src,
        target=ring_dst,
        generators=tuple(tuple(Fraction(x) for x in row) for row in matrix),
        matrix=images,
    )


@dataclass(frozen=True)
class IntersectionForm:
    """
    A symmetric nondegenerate pairing on the ring basis (or a chosen frame).

    Attributes:
        eta: The pairing matrix.
        eta_inv: Its inverse.
    """

    eta: tuple[tuple[Fraction, ...], ...]
    eta_inv: tuple[tuple[Fraction, ...], ...]

    @classmethod
    def from_matrix(cls, eta: Sequence[Sequence[int | Fraction]]) -> "IntersectionForm":
        """
        Build the form and its inverse.

        Raises:
            ValueError: If the matrix is not symmetric or not invertible.
        """
        rows = [[Fraction(x) for x in row] for row in eta]
        n = len(rows)
        if any(rows[i][j] != rows[j][i] for i in range(n) for j in range(n)):
            msg = "Intersection matrix must be symmetric"
            raise ValueError(msg)
        inv = linalg.inverse(rows)
        return cls(tuple(tuple(r) for r in rows), tuple(tuple(r) for r in inv))
