"""Exception types shared across the package."""


class FlowboundError(Exception):
    """Base class for all library errors."""


class DomainError(FlowboundError):
    """A chart point lies outside the manifold's admissible set, or a
    finite-difference stencil would leave it."""


class NumericalError(FlowboundError):
    """A linear-algebra primitive failed (non-SPD metric, singular system)."""


class UnknownManifold(FlowboundError):
    """Catalog lookup with an unrecognized manifold name."""


class UnknownField(FlowboundError):
    """Catalog lookup with an unrecognized vector-field name or an
    unparseable inline expression."""


class UnknownScenario(FlowboundError):
    """`reproduce` invoked with an unrecognized preset name."""


class StepLimitExceeded(FlowboundError):
    """The adaptive integrator hit its step budget before reaching T."""


class IncompleteFlow(FlowboundError):
    """A flowed point left the manifold before the requested horizon.

    Attributes record where and when: `tau` (curve parameter in [0, 1]),
    `seed_index` (index into the seed list, when applicable) and
    `exit_time` (largest admissible flow time).
    """

    def __init__(self, message, tau=None, seed_index=None, exit_time=None):
        super().__init__(message)
        self.tau = tau
        self.seed_index = seed_index
        self.exit_time = exit_time


class NoPathFound(FlowboundError):
    """The geodesic optimizer could not keep the polyline inside the
    admissible set (possible on incomplete manifolds such as the slit
    plane)."""


class GridMismatch(FlowboundError):
    """Two trajectories handed to a pointwise comparison do not share a
    time grid."""
