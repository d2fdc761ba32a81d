"""Exception types shared across the package."""


class SpecificationError(ValueError):
    """A network spec, schedule, or configuration violates its contract."""


class IntegrationError(RuntimeError):
    """Time integration failed its accuracy contract (e.g. norm drift)."""


class RootNotFoundError(RuntimeError):
    """Bracketed root search found no sign change in the scanned interval."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""
