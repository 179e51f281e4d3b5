"""Type definitions for qcoh."""

from dataclasses import dataclass
from fractions import Fraction

# Common type aliases (Python 3.12+ syntax)
type Multidegree = tuple[int, ...]
type Monomial = tuple[int, ...]
type Polynomial = dict[Monomial, Fraction]
type CohClass = tuple[Fraction, ...]
type Box = tuple[int, ...]
type Slot = tuple[int, int]  # (hbar exponent, lambda exponent)

# Engine limits
DEFAULT_DEGREE_CAP = 6
MAX_INVERSION_ROUNDS = 64
WINDOW_MARGIN = 2  # extra hbar/lambda room beyond the structural bound


@dataclass(frozen=True)
class Window:
    """Truncation bounds for Laurent polynomials in hbar and lambda.

    Attributes:
        hbar_min: Lowest kept hbar exponent.
        hbar_max: Highest kept hbar exponent.
        lambda_min: Lowest kept lambda exponent.
        lambda_max: Highest kept lambda exponent.
    """

    hbar_min: int
    hbar_max: int
    lambda_min: int = 0
    lambda_max: int = 0

    def __post_init__(self) -> None:
        if self.hbar_min > self.hbar_max or self.lambda_min > self.lambda_max:
            msg = f"Empty window: {self}"
            raise ValueError(msg)

    def contains(self, h: int, l: int) -> bool:
        """Check whether the slot (h, l) lies inside the window."""
        return self.hbar_min <= h <= self.hbar_max and self.lambda_min <= l <= self.lambda_max

    def union(self, other: "Window") -> "Window":
        """Return the smallest window containing both windows."""
        return Window(
            min(self.hbar_min, other.hbar_min),
            max(self.hbar_max, other.hbar_max),
            min(self.lambda_min, other.lambda_min),
            max(self.lambda_max, other.lambda_max),
        )

    def widened(self, hbar: int, lam: int = 0) -> "Window":
        """Return the window grown by the given amounts on both sides."""
        return Window(
            self.hbar_min - hbar,
            self.hbar_max + hbar,
            self.lambda_min - lam,
            self.lambda_max + lam,
        )

    @property
    def is_equivariant(self) -> bool:
        """Whether the window keeps any nonzero lambda exponent."""
        return self.lambda_min != 0 or self.lambda_max != 0


SCALAR_WINDOW = Window(0, 0, 0, 0)


def parse_fraction(value: object) -> Fraction:
    """
    Parse an exact rational from an int, a Fraction or a "num/den" string.

    Args:
        value: The value to convert.

    Returns:
        The exact rational.

    Raises:
        TypeError: If the value cannot be read as a rational.
    """
    if isinstance(value, bool):
        msg = f"Not a rational: {value!r}"
        raise TypeError(msg)
    if isinstance(value, int | Fraction):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    msg = f"Not a rational: {value!r}"
    raise TypeError(msg)


def format_fraction(value: Fraction) -> str:
    """Render a rational as an exact "num/den" string."""
    return f"{value.numerator}/{value.denominator}"
