"""First-order sensitivity of trajectory outcomes to initial conditions.

The derivative of the flow is assembled as the ordered product of per-mode
variational Jacobians and per-event saltation matrices,

    Dphi = X_m  Xi_m  ...  Xi_1  X_0 .

Each per-mode Jacobian integrates the variational equation Xdot = DF_J X
alongside the state.  Each saltation matrix is a product over the event's
single-constraint steps,

    Xi = prod_l ( DR_l + S_l ),
    S_l = (F_{l+1} - DR_l F_l) Dh_l / (Dh_l . F_l),

where F_l is the stacked field before the step, F_{l+1} the field after it
(in the post-step mode, which for a bounce is the pre-impact mode again), and
Dh_l = [Da_l, 0] the guard gradient.  A pure admissible deactivation has
Xi = I.  For models with decoupled limbs the product collapses to the
order-free closed form

    Xi = DR_K + sum_k S~_k ,

with every S~_k evaluated at the shared pre-impact velocity; the two forms are
cross-checked whenever a decoupling is declared.  A central finite-difference
derivative of the simulated outcome serves as the independent oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import RK45

from . import numdiff
from .dynamics import field, reset_velocity
from .errors import (
    DecouplingViolated,
    GrazingDenominator,
    StepUnderflow,
    TerminalAtEvent,
)
from .flow import Event, SubTransition, Trajectory, Word, simulate
from .model import ContactMode, ModelSpec, SolverConfig, State, mass_solve

FORM_GAP_LIMIT = 1e-8


@dataclass(frozen=True)
class SaltationMatrix:
    """Jump correction to the flow Jacobian across one event."""

    event: Event
    Xi: np.ndarray
    DR: np.ndarray
    S_terms: tuple[np.ndarray, ...]
    denominators: tuple[float, ...]
    Xi_closed: Optional[np.ndarray] = None
    form_gap: Optional[float] = None


@dataclass(frozen=True)
class SensitivityResult:
    D_phi: np.ndarray
    per_mode: tuple[np.ndarray, ...]
    per_event: tuple[SaltationMatrix, ...]
    word: Word


@dataclass(frozen=True)
class FiniteDifferenceResult:
    """Central-difference flow derivative plus the words met across perturbations."""

    matrix: np.ndarray
    step: float
    words: tuple[tuple, ...]


@dataclass(frozen=True)
class WordIndependenceReport:
    passed: bool
    max_diff: float
    n_orderings: int
    n_simultaneous_events: int
    detail: str = ""


def mode_jacobian(model: ModelSpec, state: State, J: ContactMode, duration: float,
                  config: SolverConfig) -> np.ndarray:
    """Derivative of the mode-J flow over the given duration, X(0) = I.

    Integrates the variational equation with the state in one augmented
    system under a shared step controller whose error norm covers both
    blocks.  (Controlling error on the state alone is unsound: whenever the
    nominal trajectory is dynamically simpler than its linearization, e.g.
    synchronized falls or equilibria, the state steps grow unbounded while
    the variational solution still oscillates.)  DF_J comes from central
    differences of the field; derivative hints make the field itself exact.
    """
    d = model.d
    n2 = 2 * d
    if duration == 0.0:
        return np.eye(n2)
    if duration < 0.0:
        raise ValueError("duration must be non-negative")

    def field_at(z):
        return field(model, z[:d], z[d:], J, config.h_fd)

    def fun(t, y):
        z = y[:n2]
        X = y[n2:].reshape(n2, n2)
        F = field_at(z)
        DF = numdiff.jacobian(field_at, z, config.h_fd)
        return np.concatenate([F, (DF @ X).ravel()])

    y0 = np.concatenate([state.z, np.eye(n2).ravel()])
    rk = RK45(fun, state.t, y0, t_bound=state.t + duration,
              rtol=config.rtol, atol=config.atol, max_step=config.max_step)
    while rk.status == "running":
        rk.step()
        if rk.status == "failed":
            raise StepUnderflow(f"variational integration failed at t={rk.t_old}")
    return rk.y[n2:].reshape(n2, n2)


def reset_jacobian(model: ModelSpec, state_pre: State, J: ContactMode,
                   h_fd: float = 1e-6) -> np.ndarray:
    """Jacobian of the reset map (q, v) -> (q, Delta_J(q, v) v).

    Block structure [[I, 0], [B, D]].  The velocity block D is assembled from
    the restitution law's matrix form plus a central-difference correction for
    velocity-dependent restitution coefficients,

        D = I - M^-1 Da^T W^-1 ((I + diag(gamma)) Da + diag(Da v) dgamma/dv);

    the position block B comes from central differences of the reset.
    """
    d = model.d
    if len(J) == 0:
        return np.eye(2 * d)
    q0, v0 = state_pre.q, state_pre.v
    B = numdiff.jacobian(
        lambda q: reset_velocity(model, State(state_pre.t, q, v0), J, h_fd), q0, h_fd
    )
    idx = J.indices()
    Da = np.vstack([model.constraint_grad(j, q0, h_fd) for j in idx])
    MinvDaT = mass_solve(model, q0, Da.T)
    W = Da @ MinvDaT
    gam = np.array([model.restitution_at(j, q0, v0) for j in idx])
    dgam_dv = np.vstack([
        numdiff.gradient(lambda v, _j=j: model.restitution_at(_j, q0, v), v0, h_fd)
        for j in idx
    ])
    inner = (1.0 + gam)[:, None] * Da + np.diag(Da @ v0) @ dgam_dv
    D = np.eye(d) - MinvDaT @ np.linalg.solve(W, inner)
    DR = np.zeros((2 * d, 2 * d))
    DR[:d, :d] = np.eye(d)
    DR[d:, :d] = B
    DR[d:, d:] = D
    return DR


def _guard_row(model, q, j, h_fd):
    row = np.zeros(2 * model.d)
    row[: model.d] = model.constraint_grad(j, q, h_fd)
    return row


def _sub_factor(model, q, sub: SubTransition, config):
    """Per-step factor DR + S of the saltation product; releases give identity."""
    n2 = 2 * model.d
    if sub.kind == "release":
        return np.eye(n2), None, None
    DR = reset_jacobian(model, State(0.0, q, sub.v_pre), ContactMode.from_indices([sub.constraint]),
                        config.h_fd)
    Dh = _guard_row(model, q, sub.constraint, config.h_fd)
    F_minus = field(model, q, sub.v_pre, sub.mode_before, config.h_fd)
    F_plus = field(model, q, sub.v_post, sub.mode_after, config.h_fd)
    denom = float(Dh @ F_minus)
    if abs(denom) < config.tol_graze:
        raise GrazingDenominator(
            f"saltation denominator {denom:.3e} for constraint {sub.constraint}"
        )
    S = np.outer(F_plus - DR @ F_minus, Dh) / denom
    return DR + S, S, denom


def _product_form(model, q, subs: Sequence[SubTransition], config):
    n2 = 2 * model.d
    Xi = np.eye(n2)
    S_terms = []
    denoms = []
    for sub in subs:
        factor, S, denom = _sub_factor(model, q, sub, config)
        Xi = factor @ Xi
        if S is not None:
            S_terms.append(S)
            denoms.append(denom)
    return Xi, tuple(S_terms), tuple(denoms)


def closed_form_saltation(model: ModelSpec, event: Event, config: SolverConfig):
    """Order-free saltation for decoupled limbs: Xi = DR_K + sum_k S~_k.

    Every term is evaluated at the shared pre-impact velocity; the base mode
    is the one recorded at the first impact (the pre-event mode minus the
    event's own deactivations).
    """
    q, v_pre = event.pre.q, event.pre.v
    impacts = [s for s in event.subs if s.kind in ("stick", "bounce")]
    if impacts:
        # base mode at the instant the impacts begin (event-level releases
        # have already been removed; impact-induced releases have not)
        J0 = impacts[0].mode_before
    else:
        J0 = event.pre.mode
        for s in event.subs:
            if s.kind == "release":
                J0 = J0.remove(s.constraint)
    K = ContactMode.from_indices([s.constraint for s in impacts])
    DR_K = reset_jacobian(model, State(event.t, q, v_pre), K, config.h_fd)
    F_base = field(model, q, v_pre, J0, config.h_fd)
    S_terms = []
    denoms = []
    for s in impacts:
        k = s.constraint
        Jk = ContactMode.from_indices([k])
        v_plus = reset_velocity(model, State(event.t, q, v_pre), Jk, config.h_fd)
        mode_plus = J0 if s.kind == "bounce" else J0.add(k)
        DR_k = reset_jacobian(model, State(event.t, q, v_pre), Jk, config.h_fd)
        Dh = _guard_row(model, q, k, config.h_fd)
        denom = float(Dh @ F_base)
        if abs(denom) < config.tol_graze:
            raise GrazingDenominator(
                f"saltation denominator {denom:.3e} for constraint {k}"
            )
        F_plus = field(model, q, v_plus, mode_plus, config.h_fd)
        S_terms.append(np.outer(F_plus - DR_k @ F_base, Dh) / denom)
        denoms.append(denom)
    Xi = DR_K + sum(S_terms, np.zeros_like(DR_K))
    return Xi, DR_K, tuple(S_terms), tuple(denoms)


def saltation_event(model: ModelSpec, event: Event, config: SolverConfig) -> SaltationMatrix:
    """Saltation matrix of one event, in its realized sub-transition order.

    Pure admissible deactivations give the identity exactly.  When the model
    declares decoupled limbs the order-free closed form is also computed and
    the two must agree within 1e-8, else DecouplingViolated is raised.
    """
    n2 = 2 * model.d
    impacts = [s for s in event.subs if s.kind in ("stick", "bounce")]
    if not impacts:
        eye = np.eye(n2)
        return SaltationMatrix(event, eye.copy(), eye.copy(), (), ())
    q = event.pre.q
    Xi, S_terms, denoms = _product_form(model, q, event.subs, config)
    K = ContactMode.from_indices([s.constraint for s in impacts])
    DR = reset_jacobian(model, State(event.t, q, event.pre.v), K, config.h_fd)
    Xi_closed = None
    gap = None
    if model.decoupling is not None:
        Xi_closed, _, S_closed, _ = closed_form_saltation(model, event, config)
        gap = float(np.max(np.abs(Xi - Xi_closed)))
        if gap > FORM_GAP_LIMIT:
            raise DecouplingViolated(
                f"product and closed saltation forms differ by {gap:.3e} "
                f"for a model declared decoupled ({model.name or 'unnamed'})"
            )
        S_terms = S_closed
    return SaltationMatrix(event, Xi, DR, S_terms, denoms, Xi_closed, gap)


def saltation_for_ordering(model: ModelSpec, event: Event, ordering: Sequence[int],
                           config: SolverConfig) -> SaltationMatrix:
    """Saltation matrix with the event's activations resolved in a given order.

    Rebuilds the single-constraint reset chain for the permutation and takes
    the ordered product; no decoupled cross-check is applied (the point is to
    compare orderings).
    """
    from .flow import resolve_transition

    impacts = [s.constraint for s in event.subs if s.kind in ("stick", "bounce")]
    if sorted(ordering) != sorted(impacts):
        raise ValueError(f"ordering {ordering} does not permute the activating set {impacts}")
    releases = [s.constraint for s in event.subs if s.kind == "release"]
    subs, _, _, _ = resolve_transition(
        model, event.pre.q, event.pre.v, event.pre.mode, list(ordering), releases,
        config, t=event.t
    )
    Xi, S_terms, denoms = _product_form(model, event.pre.q, subs, config)
    K = ContactMode.from_indices(impacts)
    DR = reset_jacobian(model, State(event.t, event.pre.q, event.pre.v), K, config.h_fd)
    return SaltationMatrix(event, Xi, DR, S_terms, denoms)


def _segment_starts(trajectory: Trajectory):
    return [trajectory.initial] + [e.post for e in trajectory.word.events]


def trajectory_derivative(model: ModelSpec, trajectory: Trajectory,
                          config: SolverConfig) -> SensitivityResult:
    """Flow derivative at the trajectory's terminal time.

    The terminal time must not coincide with an event (the classical
    derivative is undefined there).
    """
    word = trajectory.word
    T = word.times[-1]
    if word.events and abs(T - word.events[-1].t) <= config.tol_event:
        raise TerminalAtEvent(f"horizon {T} coincides with the event at {word.events[-1].t}")
    starts = _segment_starts(trajectory)
    n2 = 2 * model.d
    D = np.eye(n2)
    per_mode = []
    per_event = []
    for k, mode in enumerate(word.modes):
        duration = word.times[k + 1] - word.times[k]
        X = mode_jacobian(model, starts[k], mode, duration, config)
        per_mode.append(X)
        D = X @ D
        if k < len(word.events):
            sm = saltation_event(model, word.events[k], config)
            per_event.append(sm)
            D = sm.Xi @ D
    return SensitivityResult(D, tuple(per_mode), tuple(per_event), word)


def finite_difference_derivative(model: ModelSpec, initial: State, horizon: float,
                                 config: SolverConfig, step: float = 1e-5
                                 ) -> FiniteDifferenceResult:
    """Independent oracle: central differences of the simulated terminal state.

    Runs 4d perturbed simulations (two per coordinate of (q, v)) and reports
    the distinct words encountered, in first-seen order.
    """
    d = model.d
    n2 = 2 * d
    words: list[tuple] = []

    def terminal(z0):
        st = State(initial.t, z0[:d], z0[d:])
        traj = simulate(model, st, horizon, config, sample_dt=horizon)
        key = traj.word.key()
        if key not in words:
            words.append(key)
        return traj.terminal.z

    cols = []
    base = initial.z
    for i in range(n2):
        e = np.zeros(n2)
        e[i] = step
        cols.append((terminal(base + e) - terminal(base - e)) / (2.0 * step))
    return FiniteDifferenceResult(np.stack(cols, axis=-1), step, tuple(words))


def _orderings(constraints: Sequence[int]):
    if len(constraints) <= 6:
        return list(itertools.permutations(constraints))
    # sampled orderings: all cyclic shifts plus the reversal
    base = list(constraints)
    shifts = [tuple(base[k:] + base[:k]) for k in range(len(base))]
    return shifts + [tuple(reversed(base))]


def word_independence_check(model: ModelSpec, initial: State, horizon: float,
                            config: SolverConfig) -> WordIndependenceReport:
    """Compare the flow derivative across orderings of simultaneous activations.

    Report-only: PASS iff the maximum pairwise difference of the assembled
    derivatives stays below 1e-6 over every realizable ordering of every
    simultaneous activation set of the nominal trajectory.
    """
    traj = simulate(model, initial, horizon, config, sample_dt=horizon)
    word = traj.word
    starts = _segment_starts(traj)
    Xs = [
        mode_jacobian(model, starts[k], mode, word.times[k + 1] - word.times[k], config)
        for k, mode in enumerate(word.modes)
    ]

    def chain(Xis):
        D = np.eye(2 * model.d)
        for k, X in enumerate(Xs):
            D = X @ D
            if k < len(Xis):
                D = Xis[k] @ D
        return D

    try:
        canonical = [saltation_for_ordering(
            model, e, [s.constraint for s in e.subs if s.kind in ("stick", "bounce")], config
        ).Xi for e in word.events]
    except GrazingDenominator as exc:
        return WordIndependenceReport(False, np.inf, 0, 0, f"saltation undefined: {exc}")

    simultaneous = [
        (k, sorted({s.constraint for s in e.subs if s.kind in ("stick", "bounce")}))
        for k, e in enumerate(word.events)
        if len({s.constraint for s in e.subs if s.kind in ("stick", "bounce")}) >= 2
    ]
    if not simultaneous:
        return WordIndependenceReport(True, 0.0, 1, 0, "no simultaneous activations")

    max_diff = 0.0
    n_ord = 0
    for k, constraints in simultaneous:
        variants = []
        for perm in _orderings(constraints):
            Xis = list(canonical)
            Xis[k] = saltation_for_ordering(model, word.events[k], perm, config).Xi
            variants.append(chain(Xis))
            n_ord += 1
        for A, B in itertools.combinations(variants, 2):
            max_diff = max(max_diff, float(np.max(np.abs(A - B))))
    return WordIndependenceReport(max_diff < 1e-6, max_diff, n_ord, len(simultaneous))
