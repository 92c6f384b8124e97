"""Exception vocabulary shared across the package.

Every failure mode that callers are expected to branch on gets its own
class; plain ValueError is reserved for programming errors (bad argument
shapes, misuse of internal helpers).
"""


class Monge1dError(Exception):
    """Base class for all package-specific failures."""


class NoSignChange(Monge1dError):
    """Root bracket endpoints have the same sign."""


class MaxIterations(Monge1dError):
    """An iterative solver hit its iteration budget before converging."""


class MaxDepth(Monge1dError):
    """Adaptive subdivision exceeded the recursion depth cap."""


class NegativeIntegrand(Monge1dError):
    """A cumulative integrand went negative where a CDF was requested."""


class OutOfRange(Monge1dError):
    """An input left the documented numeric range of an operation."""


class DomainError(Monge1dError):
    """An input left the mathematical domain of a formula."""


class CapacityError(Monge1dError):
    """The target interval cannot hold unit mass under the slope bound."""


class NonPositiveDensity(Monge1dError):
    """A source density is zero or negative somewhere on its interval."""


class NotADensity(Monge1dError):
    """A profile handed to an expectation is not unit-mass."""


class InvalidPerturbation(Monge1dError):
    """A variational probe does not vanish at the support endpoints."""


class InsufficientRows(Monge1dError):
    """A convergence report needs at least two successful sweep rows."""


class ConfigError(Monge1dError):
    """A JSON document (run config or problem spec) failed validation."""
