"""Exception hierarchy shared across the package."""


class CforgeError(Exception):
    """Base class for all package-specific errors."""


class SchemaError(CforgeError):
    """Configuration or constraint does not conform to the attribute schema."""


class DimensionError(SchemaError):
    """Vector dimension does not match the feature map."""


class NonEnumerableDomainError(CforgeError):
    """Exhaustive enumeration requested on a domain with continuous attributes."""


class EnumerationLimitError(CforgeError):
    """Enumeration would exceed the configured size limit."""


class DomainTooSmallError(CforgeError):
    """Fewer feature-distinct feasible configurations than the query size k."""


class SolverConfigError(CforgeError):
    """Requested solver backend is unknown or unavailable."""


class SolverFailure(CforgeError):
    """Solver reported infeasible/unbounded where a solution was required."""
