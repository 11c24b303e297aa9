"""Exception hierarchy.

Every failure mode raised by the library derives from PilotWaveError so
callers (and the CLI) can map errors onto exit-code categories.
"""


class PilotWaveError(Exception):
    """Base class for all library errors."""


class ConfigurationError(PilotWaveError):
    """Invalid construction arguments (unknown kind, bad parameter)."""


class DomainError(PilotWaveError):
    """Evaluation outside the state's validity region."""

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class ShapeError(PilotWaveError):
    """Mismatched array shapes, spin dimensions or grids."""


class NormalizationError(PilotWaveError):
    """A state or spinor that was required to be normalized is not."""


class PhysicsError(PilotWaveError):
    """Physically inconsistent input (off-shell momentum, non-causal vector)."""


class StabilityError(PilotWaveError):
    """Propagator time step violates a stability guard."""


class UnsupportedFamilyError(PilotWaveError):
    """Operation not available for this parametric family."""


class SamplerFailureError(PilotWaveError):
    """Rejection sampler acceptance rate collapsed; envelope needs retuning."""


class NodeError(PilotWaveError):
    """Evaluation at a node of the wavefunction (density below floor)."""


class NoFluxError(PilotWaveError):
    """Arrival-time statistics requested where the integrated flux vanishes."""


class NotSeparatedError(PilotWaveError):
    """Measurement channels still overlap at read-out time."""


class CausalityViolationError(PilotWaveError):
    """A current that must be future-causal came out spacelike (test hook)."""


class InvariantViolationError(PilotWaveError):
    """A positivity/constraint invariant failed on supposedly valid input."""


class DegenerateObserverError(PilotWaveError):
    """Total energy-momentum vector is not timelike within quadrature error."""
