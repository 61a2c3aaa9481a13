"""Exception types shared across the simulator and the sensitivity engine."""


class SimError(Exception):
    """Base class for all saltsim errors."""


class DegenerateMass(SimError):
    """Mass matrix failed its symmetric positive-definite check."""


class Infeasible(SimError):
    """A configuration penetrates some constraint beyond tolerance."""


class RankDeficient(SimError):
    """Active constraint rows are numerically dependent (singular Delassus matrix)."""


class DriftExceeded(SimError):
    """An integration arc let an active constraint drift off its surface."""


class StepUnderflow(SimError):
    """The adaptive integrator could not take an acceptable step."""


class NoConvergence(SimError):
    """Event-time refinement failed to converge inside its bracket."""


class GrazingDetected(SimError):
    """Tangential (inadmissible) constraint activation or deactivation.

    When raised by the simulator, ``event`` carries the offending event record
    for diagnostics.
    """

    def __init__(self, message, event=None):
        super().__init__(message)
        self.event = event


class GrazingDenominator(SimError):
    """Saltation denominator Dh.F is too close to zero to divide by."""


class ZenoGuard(SimError):
    """Number of events exceeded the configured cap."""


class TerminalAtEvent(SimError):
    """Requested horizon coincides with an event time; the derivative is undefined there."""


class DecouplingViolated(SimError):
    """Declared limb decoupling is contradicted by the computed saltation forms."""


class ScenarioError(SimError):
    """Invalid scenario or command configuration."""
