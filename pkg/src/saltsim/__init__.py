"""Event-driven simulation and first-order sensitivities for mechanical systems
subject to unilateral constraints."""

from .dynamics import (
    ModeDynamics,
    contact_force,
    decoupled_block_accel,
    field,
    kinetic_energy,
    mode_dynamics,
    projection,
    reset_velocity,
)
from .errors import (
    DecouplingViolated,
    DegenerateMass,
    DriftExceeded,
    GrazingDenominator,
    GrazingDetected,
    Infeasible,
    NoConvergence,
    RankDeficient,
    ScenarioError,
    SimError,
    StepUnderflow,
    TerminalAtEvent,
    ZenoGuard,
)
from .flow import (
    Event,
    SubTransition,
    Trajectory,
    Word,
    classify_event,
    flow_mode,
    refine_event_time,
    simulate,
)
from .model import (
    Constraint,
    ContactMode,
    Decoupling,
    DerivativeHints,
    ModelSpec,
    SolverConfig,
    State,
    active_set,
    coriolis,
    guard,
)
from .sensitivity import (
    FiniteDifferenceResult,
    SaltationMatrix,
    SensitivityResult,
    WordIndependenceReport,
    closed_form_saltation,
    finite_difference_derivative,
    mode_jacobian,
    reset_jacobian,
    saltation_event,
    saltation_for_ordering,
    trajectory_derivative,
    word_independence_check,
)
from .validate import ValidationReport, validate_model
from .zoo import ZooEntry, zoo, zoo_entry, zoo_model

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
