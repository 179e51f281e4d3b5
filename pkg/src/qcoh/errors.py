"""Exception hierarchy for qcoh."""


class QcohError(Exception):
    """Base class for every error raised by the engine."""


class ConfigError(QcohError):
    """A geometry or run configuration file is invalid."""


class NotFiniteDimensional(QcohError):
    """Basis monomials still survive at the degree cap."""


class InconsistentRelations(QcohError):
    """The relations reduce the unit to zero."""


class NotAHomomorphism(QcohError):
    """A linear substitution does not send relations to zero."""


class RingMismatch(QcohError):
    """Series over different cohomology rings were combined."""


class BoxMismatch(QcohError):
    """Series with different truncation boxes were combined."""


class BadConstantTerm(QcohError):
    """A series has the wrong constant term for exp, log or reciprocal."""


class BoxOverflow(QcohError):
    """A composition needs degrees outside the available box."""


class NonInvertibleFactor(QcohError):
    """A factor has neither an hbar nor a lambda unit part."""


class WindowTooSmall(QcohError):
    """Birkhoff elimination needs exponents outside the window."""


class NotHbarFree(QcohError):
    """A matrix that must be hbar free still carries hbar terms."""


class GaugeResidual(QcohError):
    """The gauge transformation left hbar terms or disagrees with its cross-check."""


class NoOperatorsFound(QcohError):
    """No annihilating operator exists within the requested bounds."""


class InconsistentJacobian(QcohError):
    """Mixed partial derivatives read from connection matrices disagree."""


class Underdetermined(QcohError):
    """A stratum of the big quantum solve has free unknowns."""


class Inconsistent(QcohError):
    """A stratum of the big quantum solve has contradictory equations."""


class OrderTooLow(QcohError):
    """The big quantum truncation cannot absorb the requested transport."""


class ZeroDenominator(QcohError):
    """A localization weight factor has a zero constant term."""


class NotConverged(QcohError):
    """A fixed-point iteration did not become stationary."""
