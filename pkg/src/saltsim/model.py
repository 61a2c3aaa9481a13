"""Data model for mechanical systems subject to unilateral constraints.

A model supplies the mass matrix M(q), the effort map f(q, q_dot), one scalar
constraint a_j(q) >= 0 per contact, and a restitution coefficient per
constraint.  Inside a fixed contact mode J the dynamics are

    M(q) q_ddot = f(q, q_dot) + c(q, q_dot) q_dot + Da_J(q)^T lam_J(q, q_dot),

where c is the Coriolis matrix induced by M and lam_J is the reaction force
holding a_J identically zero.  On constraint activation the velocity resets
through the restitution law.  Contact forces, resets and the event-driven
integration live in the sibling modules; this one owns the model data,
configuration, and the three basic maps (Coriolis matrix, guard functions,
active set).

Constraint indices are 0-based throughout the package; a contact mode is the
set of active constraint indices stored as a bitmask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from . import numdiff
from .errors import DegenerateMass, Infeasible

DEFAULT_FD_STEP = 1e-6

MASS_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class ContactMode:
    """Subset of active constraints, encoded as a bitmask (bit j = constraint j)."""

    mask: int = 0

    def __post_init__(self):
        if self.mask < 0:
            raise ValueError("contact mode mask must be non-negative")

    @staticmethod
    def from_indices(indices: Sequence[int]) -> "ContactMode":
        mask = 0
        for j in indices:
            if j < 0 or j > 62:
                raise ValueError("constraint index out of the supported range 0..62")
            mask |= 1 << j
        return ContactMode(mask)

    @staticmethod
    def full(n: int) -> "ContactMode":
        return ContactMode((1 << n) - 1)

    def indices(self) -> tuple[int, ...]:
        out = []
        m, j = self.mask, 0
        while m:
            if m & 1:
                out.append(j)
            m >>= 1
            j += 1
        return tuple(out)

    def contains(self, j: int) -> bool:
        return bool(self.mask >> j & 1)

    def add(self, j: int) -> "ContactMode":
        return ContactMode(self.mask | (1 << j))

    def remove(self, j: int) -> "ContactMode":
        return ContactMode(self.mask & ~(1 << j))

    def union(self, other: "ContactMode") -> "ContactMode":
        return ContactMode(self.mask | other.mask)

    def issubset(self, other: "ContactMode") -> bool:
        return self.mask & ~other.mask == 0

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __iter__(self):
        return iter(self.indices())

    def __repr__(self) -> str:
        return f"ContactMode({{{','.join(map(str, self.indices()))}}})"


EMPTY_MODE = ContactMode(0)


@dataclass(frozen=True)
class Constraint:
    """Scalar unilateral constraint a(q) >= 0 with optional analytic gradient."""

    value: Callable[[np.ndarray], float]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True)
class Decoupling:
    """Partition of the configuration indices into a body block and one limb block per constraint."""

    body: tuple[int, ...]
    limbs: tuple[tuple[int, ...], ...]

    def blocks(self) -> tuple[tuple[int, ...], ...]:
        return (tuple(self.body),) + tuple(tuple(b) for b in self.limbs)


@dataclass(frozen=True)
class DerivativeHints:
    """Optional analytic derivatives; anything left None falls back to central differences.

    mass_grad(q) returns the (d, d, d) array with entry [k] = dM/dq_k.
    constraint_hess[j](q) returns the (d, d) Hessian of a_j.
    """

    mass_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    constraint_hess: Optional[tuple[Optional[Callable[[np.ndarray], np.ndarray]], ...]] = None


@dataclass(frozen=True)
class ModelSpec:
    """A mechanical system with d coordinates and n unilateral constraints."""

    d: int
    n: int
    mass: Callable[[np.ndarray], np.ndarray]
    effort: Callable[[np.ndarray, np.ndarray], np.ndarray]
    constraints: tuple[Constraint, ...]
    restitution: tuple[Callable[[np.ndarray, np.ndarray], float], ...]
    decoupling: Optional[Decoupling] = None
    hints: Optional[DerivativeHints] = None
    name: str = ""

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("configuration dimension d must be positive")
        if self.n < 0:
            raise ValueError("number of constraints n must be non-negative")
        if self.n > 63:
            raise ValueError("bitmask contact modes support at most 63 constraints")
        if len(self.constraints) != self.n:
            raise ValueError("need exactly one Constraint per unilateral constraint")
        if len(self.restitution) != self.n:
            raise ValueError("need exactly one restitution coefficient per constraint")
        # Scalars are accepted for restitution and wrapped into callables.
        wrapped = tuple(
            g if callable(g) else (lambda q, v, _g=float(g): _g) for g in self.restitution
        )
        object.__setattr__(self, "restitution", wrapped)
        if self.decoupling is not None:
            dec = self.decoupling
            if len(dec.limbs) != self.n:
                raise ValueError("decoupling must declare one limb block per constraint")
            flat = list(dec.body) + [i for b in dec.limbs for i in b]
            if sorted(flat) != list(range(self.d)):
                raise ValueError("decoupling blocks must be disjoint and cover all coordinates")

    # -- basic evaluations ------------------------------------------------

    def mass_at(self, q: np.ndarray) -> np.ndarray:
        M = np.asarray(self.mass(np.asarray(q, dtype=float)), dtype=float)
        if M.shape != (self.d, self.d):
            raise ValueError(f"mass matrix has shape {M.shape}, expected {(self.d, self.d)}")
        return M

    def effort_at(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        f = np.asarray(self.effort(np.asarray(q, float), np.asarray(v, float)), dtype=float)
        return f.reshape(self.d)

    def constraint_value(self, j: int, q: np.ndarray) -> float:
        return float(self.constraints[j].value(np.asarray(q, dtype=float)))

    def constraint_grad(self, j: int, q: np.ndarray, h_fd: float = DEFAULT_FD_STEP) -> np.ndarray:
        c = self.constraints[j]
        if c.grad is not None:
            return np.asarray(c.grad(np.asarray(q, float)), dtype=float).reshape(self.d)
        return numdiff.gradient(c.value, q, h_fd)

    def constraint_values(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return np.array([c.value(q) for c in self.constraints], dtype=float)

    def restitution_at(self, j: int, q: np.ndarray, v: np.ndarray) -> float:
        return float(self.restitution[j](np.asarray(q, float), np.asarray(v, float)))


@dataclass(frozen=True)
class State:
    """Point (q, q_dot) of the tangent bundle at time t, tagged with its contact mode."""

    t: float
    q: np.ndarray
    v: np.ndarray
    mode: Optional[ContactMode] = None

    def __post_init__(self):
        object.__setattr__(self, "q", np.array(self.q, dtype=float).reshape(-1))
        object.__setattr__(self, "v", np.array(self.v, dtype=float).reshape(-1))
        if self.q.shape != self.v.shape:
            raise ValueError("q and v must have the same dimension")

    @property
    def z(self) -> np.ndarray:
        """Stacked state vector (q, v)."""
        return np.concatenate([self.q, self.v])


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and integrator controls shared across the pipeline.

    tol_a        activation tolerance on constraint values
    tol_event    event-time refinement tolerance, in seconds
    tol_cluster  window (s) within which crossings count as simultaneous
    tol_graze    strictness margin for the admissibility sign checks
    h_fd         base step for internal central differences
    max_events   cap on the number of events (Zeno guard)
    rtol, atol   adaptive Runge-Kutta error controls
    max_step     optional cap on the integrator step
    subsamples   dense-output sign checks per accepted step
    """

    tol_a: float = 1e-8
    tol_event: float = 1e-11
    tol_cluster: float = 1e-9
    tol_graze: float = 1e-8
    h_fd: float = DEFAULT_FD_STEP
    max_events: int = 10_000
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = np.inf
    subsamples: int = 16

    def __post_init__(self):
        for name in ("tol_a", "tol_event", "tol_cluster", "tol_graze", "h_fd", "rtol", "atol"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_events < 1:
            raise ValueError("max_events must be at least 1")
        if self.subsamples < 2:
            raise ValueError("subsamples must be at least 2")


# -- core operations -------------------------------------------------------

# Factorizations are memoized on the matrix content (not on q), so constant
# mass matrices hit the cache at every evaluation point.  Purity is preserved.
_CHO_CACHE: dict[bytes, tuple] = {}
_CHO_CACHE_MAX = 256


def mass_cholesky(model: ModelSpec, q: np.ndarray):
    """Checked Cholesky factor of M(q); raises DegenerateMass on failure."""
    M = model.mass_at(q)
    key = M.tobytes()
    hit = _CHO_CACHE.get(key)
    if hit is not None:
        return hit
    scale = 1.0 + np.max(np.abs(M))
    if np.max(np.abs(M - M.T)) > MASS_SYMMETRY_TOL * scale:
        raise DegenerateMass(f"mass matrix not symmetric at q={np.asarray(q)}")
    try:
        factor = scipy.linalg.cho_factor(M, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise DegenerateMass(f"mass matrix not positive definite at q={np.asarray(q)}") from exc
    if len(_CHO_CACHE) >= _CHO_CACHE_MAX:
        _CHO_CACHE.pop(next(iter(_CHO_CACHE)))
    _CHO_CACHE[key] = factor
    return factor


def mass_solve(model: ModelSpec, q: np.ndarray, B: np.ndarray) -> np.ndarray:
    """M(q)^-1 B via Cholesky."""
    return scipy.linalg.cho_solve(mass_cholesky(model, q), np.asarray(B, dtype=float))


def mass_grad(model: ModelSpec, q: np.ndarray, h_fd: float = DEFAULT_FD_STEP) -> np.ndarray:
    """(d, d, d) array of mass-matrix partials, [k] = dM/dq_k."""
    if model.hints is not None and model.hints.mass_grad is not None:
        dM = np.asarray(model.hints.mass_grad(np.asarray(q, float)), dtype=float)
        return dM.reshape(model.d, model.d, model.d)
    q = np.asarray(q, dtype=float)
    steps = numdiff.coordinate_steps(q, h_fd)
    dM = np.empty((model.d, model.d, model.d))
    for k in range(model.d):
        e = np.zeros(model.d)
        e[k] = steps[k]
        dM[k] = (model.mass_at(q + e) - model.mass_at(q - e)) / (2.0 * steps[k])
    return dM


def coriolis(model: ModelSpec, q: np.ndarray, v: np.ndarray,
             h_fd: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Coriolis matrix c(q, v) induced by the mass matrix.

    Entries follow the Christoffel contraction

        c_lm = -1/2 sum_k (d_k M_lm + d_m M_lk - d_l M_km) v_k,

    so that c(q, v) v enters the dynamics on the force side,
    M q_ddot = f + c q_dot + ... .  Equivalently Mdot + 2c is
    skew-symmetric.
    """
    mass_cholesky(model, q)  # validates symmetry / positive definiteness
    v = np.asarray(v, dtype=float)
    dM = mass_grad(model, q, h_fd)
    if not dM.any():  # constant mass matrix
        return np.zeros((model.d, model.d))
    term1 = np.einsum("klm,k->lm", dM, v)   # sum_k d_k M_lm v_k  (= Mdot)
    term2 = np.einsum("mlk,k->lm", dM, v)   # sum_k d_m M_lk v_k
    term3 = np.einsum("lkm,k->lm", dM, v)   # sum_k d_l M_km v_k
    return -0.5 * (term1 + term2 - term3)


def guard(model: ModelSpec, j: int, state: State) -> tuple[float, np.ndarray]:
    """Guard value h_j = a_j(q) and its gradient row [Da_j, 0] on the stacked state.

    Constraints depend on configuration only, so the velocity block of the
    gradient is identically zero.
    """
    if not 0 <= j < model.n:
        raise IndexError(f"constraint index {j} out of range 0..{model.n - 1}")
    value = model.constraint_value(j, state.q)
    row = np.zeros(2 * model.d)
    row[: model.d] = model.constraint_grad(j, state.q)
    return value, row


def active_set(model: ModelSpec, q: np.ndarray, tol_a: float) -> ContactMode:
    """Constraints with |a_j(q)| <= tol_a; penetration beyond tol_a is a hard error."""
    a = model.constraint_values(q)
    if np.any(a < -tol_a):
        bad = [int(j) for j in np.flatnonzero(a < -tol_a)]
        raise Infeasible(f"constraints {bad} penetrated beyond tolerance: a={a}")
    return ContactMode.from_indices([int(j) for j in np.flatnonzero(np.abs(a) <= tol_a)])
