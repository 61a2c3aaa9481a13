"""Reference models with known closed-form behaviour.

All parameters are order-1 dimensionless values fixed here for
reproducibility.  Every entry carries a canonical initial state and a short
facts block recording the closed-form expectations the tests lean on.  The
two trot models are deliberately minimal planar mechanisms: they share the
same geometry (two feet at horizontal offsets +-L, vertical drop h below the
body origin) and differ only in whether the feet couple to the body through
the mass matrix (rigid-trot) or through spring-damper efforts on separate toe
masses (soft-trot).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Constraint,
    Decoupling,
    DerivativeHints,
    ModelSpec,
    State,
)


@dataclass(frozen=True)
class ZooEntry:
    name: str
    model: ModelSpec
    initial: State
    horizon: float
    facts: str


def _const_mass_hints(n_hess: int) -> DerivativeHints:
    """Hints for a configuration-independent mass matrix and linear constraints."""
    return DerivativeHints(
        mass_grad=lambda q, _d=None: np.zeros((q.size, q.size, q.size)),
        constraint_hess=tuple(lambda q: np.zeros((q.size, q.size)) for _ in range(n_hess)),
    )


def bouncing_ball(gamma: float = 0.0, g: float = 1.0, m: float = 1.0) -> ModelSpec:
    """Point mass falling on a floor at q = 0; restitution gamma."""
    M = np.array([[m]])
    return ModelSpec(
        d=1,
        n=1,
        mass=lambda q: M,
        effort=lambda q, v: np.array([-m * g]),
        constraints=(Constraint(lambda q: q[0], lambda q: np.array([1.0])),),
        restitution=(gamma,),
        decoupling=Decoupling(body=(), limbs=((0,),)),
        hints=_const_mass_hints(1),
        name="bouncing-ball",
    )


def ceiling_mass(q_max: float = 1.0, g: float = 1.0, m: float = 1.0) -> ModelSpec:
    """Point mass moving vertically under gravity below a ceiling at q = q_max."""
    M = np.array([[m]])
    return ModelSpec(
        d=1,
        n=1,
        mass=lambda q: M,
        effort=lambda q, v: np.array([-m * g]),
        constraints=(Constraint(lambda q, _c=q_max: _c - q[0], lambda q: np.array([-1.0])),),
        restitution=(0.0,),
        decoupling=Decoupling(body=(), limbs=((0,),)),
        hints=_const_mass_hints(1),
        name="ceiling-mass",
    )


def decoupled_pair(gammas=(0.0, 0.0), g=(1.0, 1.0), masses=(1.0, 1.0)) -> ModelSpec:
    """Two independent point masses, each above its own floor a_j(q) = q_j."""
    M = np.diag(masses).astype(float)
    grav = np.array([-masses[0] * g[0], -masses[1] * g[1]])
    return ModelSpec(
        d=2,
        n=2,
        mass=lambda q: M,
        effort=lambda q, v: grav,
        constraints=(
            Constraint(lambda q: q[0], lambda q: np.array([1.0, 0.0])),
            Constraint(lambda q: q[1], lambda q: np.array([0.0, 1.0])),
        ),
        restitution=tuple(gammas),
        decoupling=Decoupling(body=(), limbs=((0,), (1,))),
        hints=_const_mass_hints(2),
        name="decoupled-pair",
    )


# shared trot geometry: feet at body-frame offsets (s_i L, -h), s = (-1, +1)
_TROT_L = 0.5
_TROT_H = 0.2
_TROT_G = 1.0


def soft_trot(mb: float = 1.0, inertia: float = 0.25, mtoe: float = 0.1,
              k: float = 40.0, damping: float = 0.6, l0: float = 0.5,
              L: float = _TROT_L, h: float = _TROT_H, g: float = _TROT_G) -> ModelSpec:
    """Planar body (x, z, theta) with two 1-DOF toe masses on vertical spring-dampers.

    Coordinates q = (x, z, theta, p1, p2) with p_i the toe heights and
    constraints a_i = p_i >= 0.  Each toe couples to the body only through
    the spring-damper effort at its attachment height

        zatt_i = z + s_i L sin(theta) - h cos(theta),

    so the limbs are decoupled through the body: the mass matrix is diagonal
    and the body effort is additive over the limbs.
    """
    M = np.diag([mb, mb, inertia, mtoe, mtoe]).astype(float)
    s = (-1.0, 1.0)

    def effort(q, v):
        x, z, th, p1, p2 = q
        vx, vz, vth, vp1, vp2 = v
        f = np.zeros(5)
        f[1] = -mb * g
        for i, (si, p, vp) in enumerate(zip(s, (p1, p2), (vp1, vp2))):
            w = si * L * np.cos(th) + h * np.sin(th)
            e = (z + si * L * np.sin(th) - h * np.cos(th)) - p - l0
            edot = vz + w * vth - vp
            fs = k * e + damping * edot
            f[1] -= fs
            f[2] -= fs * w
            f[3 + i] = -mtoe * g + fs
        return f

    return ModelSpec(
        d=5,
        n=2,
        mass=lambda q: M,
        effort=effort,
        constraints=(
            Constraint(lambda q: q[3], lambda q: np.array([0.0, 0.0, 0.0, 1.0, 0.0])),
            Constraint(lambda q: q[4], lambda q: np.array([0.0, 0.0, 0.0, 0.0, 1.0])),
        ),
        restitution=(0.0, 0.0),
        decoupling=Decoupling(body=(0, 1, 2), limbs=((3,), (4,))),
        hints=_const_mass_hints(2),
        name="soft-trot",
    )


def rigid_trot(mb: float = 1.0, mf: float = 0.2, inertia_body: float = 1.0,
               L: float = _TROT_L, h: float = _TROT_H, g: float = _TROT_G) -> ModelSpec:
    """Planar body (x, z, theta) with two point-mass feet rigidly attached.

    Foot heights a_i = z + s_i L sin(theta) - h cos(theta) couple z and theta
    in both constraints, and the foot masses couple x and theta in the (frozen
    at theta = 0, hence constant) mass matrix

        M = [[mt, 0, c0], [0, mt, 0], [c0, 0, It]],
        mt = mb + 2 mf,  c0 = 2 mf h,  It = Ib + 2 mf (L^2 + h^2).

    The declared body/limb partition ((x), (z), (theta)) intentionally fails
    the decoupling validation: a single-foot impact exchanges momentum with
    x and theta, which is what makes simultaneous versus sequential touchdown
    outcomes differ discontinuously.
    """
    mt = mb + 2.0 * mf
    c0 = 2.0 * mf * h
    it = inertia_body + 2.0 * mf * (L * L + h * h)
    M = np.array([[mt, 0.0, c0], [0.0, mt, 0.0], [c0, 0.0, it]])
    s = (-1.0, 1.0)

    def foot_constraint(i):
        si = s[i]

        def value(q):
            return q[1] + si * L * np.sin(q[2]) - h * np.cos(q[2])

        def grad(q):
            return np.array([0.0, 1.0, si * L * np.cos(q[2]) + h * np.sin(q[2])])

        def hess(q):
            H = np.zeros((3, 3))
            H[2, 2] = -si * L * np.sin(q[2]) + h * np.cos(q[2])
            return H

        return value, grad, hess

    (a1, da1, h1), (a2, da2, h2) = foot_constraint(0), foot_constraint(1)

    return ModelSpec(
        d=3,
        n=2,
        mass=lambda q: M,
        effort=lambda q, v: np.array([0.0, -mt * g, -2.0 * mf * g * h * np.sin(q[2])]),
        constraints=(Constraint(a1, da1), Constraint(a2, da2)),
        restitution=(0.0, 0.0),
        decoupling=Decoupling(body=(0,), limbs=((1,), (2,))),
        hints=DerivativeHints(
            mass_grad=lambda q: np.zeros((3, 3, 3)),
            constraint_hess=(h1, h2),
        ),
        name="rigid-trot",
    )


def zoo() -> list[ZooEntry]:
    """The five reference models with canonical initial states."""
    return [
        ZooEntry(
            name="bouncing-ball",
            model=bouncing_ball(),
            initial=State(0.0, [1.0], [0.0]),
            horizon=2.0,
            facts=(
                "Drop from height q0 with v0=0 under g=1 impacts at t = sqrt(2 q0) "
                "with v- = -sqrt(2 q0).  Plastic (gamma=0) rest follows; elastic "
                "(gamma=1) bounces are periodic with period 2 sqrt(2 q0) and "
                "conserve energy E = v^2/2 + q."
            ),
        ),
        ZooEntry(
            name="ceiling-mass",
            model=ceiling_mass(),
            initial=State(0.0, [0.0], [1.0]),
            horizon=2.0,
            facts=(
                "Launch from q0 with velocity v0 reaches apex q0 + v0^2/2 under g=1. "
                "Apex exactly at q_max grazes the ceiling; apex overshooting by "
                "delta hits it at speed sqrt(2 delta), so the time-to-activation "
                "sensitivity scales as delta^(-1/2)."
            ),
        ),
        ZooEntry(
            name="decoupled-pair",
            model=decoupled_pair(),
            initial=State(0.0, [1.0, 1.0], [0.0, 0.0]),
            horizon=2.5,
            facts=(
                "Equal drop heights give a simultaneous two-constraint activation at "
                "t = sqrt(2); unequal heights split it into two single activations "
                "whose order follows the height offset."
            ),
        ),
        ZooEntry(
            name="soft-trot",
            model=soft_trot(),
            initial=State(0.0, [0.0, 1.0, 0.0, 0.3, 0.3], [0.0, -0.5, 0.0, -0.5, -0.5]),
            horizon=1.4,
            facts=(
                "Toes start 0.3 above ground with springs at rest length for "
                "theta(0)=0.  Pitch theta(0) biases the spring forces, splitting the "
                "touchdown order at theta(0)=0 while terminal outcomes stay "
                "continuous and differentiable; spring rebound unloads the toes and "
                "lifts off through a contact-force zero crossing."
            ),
        ),
        ZooEntry(
            name="rigid-trot",
            model=rigid_trot(),
            initial=State(0.0, [0.0, 0.45, 0.0], [0.0, -0.8, 0.0]),
            horizon=1.0,
            facts=(
                "Feet start about 0.25 above ground.  Simultaneous touchdown "
                "(theta(0)=0) zeroes the rotational and horizontal velocity by "
                "symmetry; any touchdown order (theta(0) = +-eps) exchanges momentum "
                "through the x-theta mass coupling, leaving a horizontal velocity "
                "bounded away from zero whose sign follows the order.  Terminal "
                "outcomes therefore jump at theta(0)=0."
            ),
        ),
    ]


def zoo_model(name: str, **params) -> ModelSpec:
    """Build a zoo model by name, with optional parameter overrides."""
    builders = {
        "bouncing-ball": bouncing_ball,
        "ceiling-mass": ceiling_mass,
        "decoupled-pair": decoupled_pair,
        "soft-trot": soft_trot,
        "rigid-trot": rigid_trot,
    }
    if name not in builders:
        raise KeyError(f"unknown zoo model {name!r}; known: {sorted(builders)}")
    return builders[name](**params)


def zoo_entry(name: str) -> ZooEntry:
    for entry in zoo():
        if entry.name == name:
            return entry
    raise KeyError(f"unknown zoo entry {name!r}")
