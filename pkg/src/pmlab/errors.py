"""Exception hierarchy shared across the package."""


class PmLabError(Exception):
    """Base class for all package errors."""


class BadParam(PmLabError):
    """A constructor or operation received an out-of-range parameter."""


class BadInput(PmLabError):
    """A value outside the channel input alphabet/space."""


class NotPSD(PmLabError):
    """A matrix required to be positive semidefinite is not."""


class OutOfDomain(PmLabError):
    """A point lies outside the domain of a map."""


class ZeroLikelihood(PmLabError):
    """An observation with probability zero under the current model."""


class NoConvergence(PmLabError):
    """An iterative solver exhausted its iteration budget."""


class DegenerateDensity(PmLabError):
    """A density with (numerically) no mass."""


class BadPrior(PmLabError):
    """An alternative prior with mass outside the unit cube."""
