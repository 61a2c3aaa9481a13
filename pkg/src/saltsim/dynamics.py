"""Per-mode continuous dynamics and the impact reset map.

Everything here is a pure function of (model, state, mode).  The contact
force is the unique force that keeps the active constraints at zero to
second order,

    lam_J = -(Da_J M^-1 Da_J^T)^-1 (Da_J M^-1 (f + c v) + (d/dt Da_J) v),

the projection is the mass-metric projector onto the constrained directions,

    P_J = M^-1 Da_J^T (Da_J M^-1 Da_J^T)^-1 Da_J,

and the restitution law resets velocities at impact,

    v+ = v - M^-1 Da_J^T W^-1 (I + diag(gamma_j)) Da_J v,   W = Da_J M^-1 Da_J^T,

which reduces to (I - (1 + gamma) P_J) v when all coefficients coincide and
gives Da_j v+ = -gamma_j Da_j v componentwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import numdiff
from .errors import RankDeficient
from .model import DEFAULT_FD_STEP, ContactMode, ModelSpec, State, coriolis, mass_cholesky

DELASSUS_COND_LIMIT = 1e12


@dataclass(frozen=True)
class ModeDynamics:
    """Contact forces, acceleration and stacked vector field of one contact mode."""

    J: ContactMode
    lam: np.ndarray
    accel: np.ndarray
    field: np.ndarray


def constraint_jacobian(model: ModelSpec, q: np.ndarray, J: ContactMode,
                        h_fd: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Rows Da_j(q) for j in J, stacked into a (|J|, d) matrix."""
    idx = J.indices()
    if not idx:
        return np.zeros((0, model.d))
    return np.vstack([model.constraint_grad(j, q, h_fd) for j in idx])


_COND_CACHE: dict[bytes, float] = {}
_COND_CACHE_MAX = 256


def _delassus(model: ModelSpec, q: np.ndarray, Da: np.ndarray):
    """W = Da M^-1 Da^T together with M^-1 Da^T."""
    cho = mass_cholesky(model, q)
    MinvDaT = scipy.linalg.cho_solve(cho, Da.T)
    W = Da @ MinvDaT
    if W.size:
        key = W.tobytes()
        cond = _COND_CACHE.get(key)
        if cond is None:
            cond = float(np.linalg.cond(W))
            if len(_COND_CACHE) >= _COND_CACHE_MAX:
                _COND_CACHE.pop(next(iter(_COND_CACHE)))
            _COND_CACHE[key] = cond
        if cond > DELASSUS_COND_LIMIT:
            raise RankDeficient(
                f"Delassus matrix of constraints {list(range(W.shape[0]))} is "
                f"numerically singular (cond={cond:.3e})"
            )
    return W, MinvDaT, cho


def _curvature(model: ModelSpec, q: np.ndarray, v: np.ndarray, J: ContactMode,
               h_fd: float) -> np.ndarray:
    """Constraint curvature terms (d/dt Da_j) v = v^T Hess(a_j) v, one per j in J."""
    idx = J.indices()
    out = np.zeros(len(idx))
    hess = model.hints.constraint_hess if model.hints is not None else None
    for k, j in enumerate(idx):
        if hess is not None and hess[j] is not None:
            H = np.asarray(hess[j](q), dtype=float)
            out[k] = v @ H @ v
        else:
            dDa = numdiff.directional(lambda x, _j=j: model.constraint_grad(_j, x, h_fd), q, v, h_fd)
            out[k] = dDa @ v
    return out


def contact_force(model: ModelSpec, state: State, J: ContactMode,
                  h_fd: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Reaction forces lam_J holding a_J = 0 along the mode-J flow."""
    if len(J) == 0:
        return np.zeros(0)
    q, v = state.q, state.v
    Da = constraint_jacobian(model, q, J, h_fd)
    W, _, cho = _delassus(model, q, Da)
    f = model.effort_at(q, v) + coriolis(model, q, v, h_fd) @ v
    rhs = Da @ scipy.linalg.cho_solve(cho, f) + _curvature(model, q, v, J, h_fd)
    return -np.linalg.solve(W, rhs)


def projection(model: ModelSpec, q: np.ndarray, J: ContactMode,
               h_fd: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Mass-metric projection P_J onto the constrained directions; P_empty = 0."""
    if len(J) == 0:
        return np.zeros((model.d, model.d))
    Da = constraint_jacobian(model, q, J, h_fd)
    W, MinvDaT, _ = _delassus(model, q, Da)
    return MinvDaT @ np.linalg.solve(W, Da)


def reset_velocity(model: ModelSpec, state: State, J: ContactMode,
                   h_fd: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Post-impact velocity for activation of the set J at the pre-impact state."""
    if len(J) == 0:
        return state.v.copy()
    q, v = state.q, state.v
    Da = constraint_jacobian(model, q, J, h_fd)
    W, MinvDaT, _ = _delassus(model, q, Da)
    gam = np.array([model.restitution_at(j, q, v) for j in J.indices()])
    impulse = np.linalg.solve(W, (1.0 + gam) * (Da @ v))
    return v - MinvDaT @ impulse


def plastic_project(model: ModelSpec, q: np.ndarray, v: np.ndarray, J: ContactMode,
                    h_fd: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Remove the constraint-normal velocity components (a zero-restitution reset)."""
    if len(J) == 0:
        return np.asarray(v, dtype=float).copy()
    Da = constraint_jacobian(model, q, J, h_fd)
    W, MinvDaT, _ = _delassus(model, q, Da)
    return v - MinvDaT @ np.linalg.solve(W, Da @ v)


def constraint_acceleration(model: ModelSpec, q: np.ndarray, v: np.ndarray, j: int,
                            J: ContactMode, h_fd: float = DEFAULT_FD_STEP) -> float:
    """Second time derivative of a_j along the mode-J flow: Da_j.accel + v.H_j.v."""
    dyn = mode_dynamics(model, State(0.0, q, v, J), J, h_fd)
    Da = model.constraint_grad(j, q, h_fd)
    curv = _curvature(model, q, v, ContactMode.from_indices([j]), h_fd)[0]
    return float(Da @ dyn.accel + curv)


def mode_dynamics(model: ModelSpec, state: State, J: ContactMode,
                  h_fd: float = DEFAULT_FD_STEP) -> ModeDynamics:
    """Forces, acceleration and stacked field (q_dot, q_ddot) in contact mode J."""
    q, v = state.q, state.v
    lam = contact_force(model, state, J, h_fd)
    f = model.effort_at(q, v) + coriolis(model, q, v, h_fd) @ v
    if len(J):
        f = f + constraint_jacobian(model, q, J, h_fd).T @ lam
    accel = scipy.linalg.cho_solve(mass_cholesky(model, q), f)
    return ModeDynamics(J=J, lam=lam, accel=accel, field=np.concatenate([v, accel]))


def field(model: ModelSpec, q: np.ndarray, v: np.ndarray, J: ContactMode,
          h_fd: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Stacked vector field F_J(q, v) = (v, accel_J(q, v))."""
    return mode_dynamics(model, State(0.0, q, v, J), J, h_fd).field


def kinetic_energy(model: ModelSpec, q: np.ndarray, v: np.ndarray) -> float:
    return 0.5 * float(np.asarray(v) @ model.mass_at(q) @ np.asarray(v))


def decoupled_block_accel(model: ModelSpec, state: State, J: ContactMode,
                          h_fd: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Acceleration assembled block by block from a declared decoupling.

    Each limb's acceleration is computed from its own mass block, its own
    effort components and, when active, its own scalar contact force; the body
    block sees only the body effort.  Used to cross-check mode_dynamics on
    models whose declared decoupling genuinely holds.
    """
    if model.decoupling is None:
        raise ValueError("model declares no decoupling")
    q, v = state.q, state.v
    M = model.mass_at(q)
    f = model.effort_at(q, v) + coriolis(model, q, v, h_fd) @ v
    accel = np.zeros(model.d)
    dec = model.decoupling
    body = list(dec.body)
    if body:
        Mb = M[np.ix_(body, body)]
        accel[body] = np.linalg.solve(Mb, f[body])
    for j, limb in enumerate(dec.limbs):
        limb = list(limb)
        Ml = M[np.ix_(limb, limb)]
        fl = f[limb].copy()
        if J.contains(j):
            Da_l = model.constraint_grad(j, q, h_fd)[limb]
            W = Da_l @ np.linalg.solve(Ml, Da_l)
            rhs = Da_l @ np.linalg.solve(Ml, f[limb]) + _curvature(
                model, q, v, ContactMode.from_indices([j]), h_fd
            )[0]
            lam_j = -rhs / W
            fl += Da_l * lam_j
        accel[limb] = np.linalg.solve(Ml, fl)
    return accel
