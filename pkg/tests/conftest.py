import numpy as np
import pytest

import saltsim as ss


@pytest.fixture(scope="session")
def cfg():
    return ss.SolverConfig()


@pytest.fixture(scope="session")
def sweep_cfg():
    """Lighter integrator settings for batch sweeps of the trot models."""
    return ss.SolverConfig(rtol=1e-7, atol=1e-9, subsamples=8)


def make_hopper(k=30.0, c=0.5, l0=0.5, mb=1.0, mt=0.1, g=1.0):
    """Body over one plastic toe on a vertical spring-damper.

    Touchdown sticks the toe; the rebound unloads the spring until the
    contact force crosses zero, which exercises the deactivation path.
    """
    M = np.diag([mb, mt])

    def effort(q, v):
        e = (q[0] - q[1]) - l0
        edot = v[0] - v[1]
        fs = k * e + c * edot
        return np.array([-mb * g - fs, -mt * g + fs])

    return ss.ModelSpec(
        d=2, n=1, mass=lambda q: M, effort=effort,
        constraints=(ss.Constraint(lambda q: q[1], lambda q: np.array([0.0, 1.0])),),
        restitution=(0.0,),
        decoupling=ss.Decoupling(body=(0,), limbs=((1,),)),
        hints=ss.DerivativeHints(
            mass_grad=lambda q: np.zeros((2, 2, 2)),
            constraint_hess=(lambda q: np.zeros((2, 2)),),
        ),
        name="hopper",
    )


def make_coupled_pair(eps=0.1, gammas=(0.5, 0.5), declare=False):
    """Two falling masses with an off-diagonal mass coupling eps (not decoupled)."""
    M = np.array([[1.0, eps], [eps, 1.0]])
    return ss.ModelSpec(
        d=2, n=2, mass=lambda q: M,
        effort=lambda q, v: np.array([-1.0, -1.0]),
        constraints=(
            ss.Constraint(lambda q: q[0], lambda q: np.array([1.0, 0.0])),
            ss.Constraint(lambda q: q[1], lambda q: np.array([0.0, 1.0])),
        ),
        restitution=tuple(gammas),
        decoupling=ss.Decoupling(body=(), limbs=((0,), (1,))) if declare else None,
        hints=ss.DerivativeHints(mass_grad=lambda q: np.zeros((2, 2, 2))),
        name="coupled-pair",
    )


def make_triple(gammas=(0.0, 0.5, 0.3)):
    """Three independent falling masses for order-free saltation checks."""
    M = np.eye(3)
    basis = np.eye(3)
    return ss.ModelSpec(
        d=3, n=3, mass=lambda q: M,
        effort=lambda q, v: np.array([-1.0, -1.0, -1.0]),
        constraints=tuple(
            ss.Constraint((lambda q, _j=j: q[_j]), (lambda q, _j=j: basis[_j]))
            for j in range(3)
        ),
        restitution=tuple(gammas),
        decoupling=ss.Decoupling(body=(), limbs=((0,), (1,), (2,))),
        hints=ss.DerivativeHints(
            mass_grad=lambda q: np.zeros((3, 3, 3)),
            constraint_hess=tuple(lambda q: np.zeros((3, 3)) for _ in range(3)),
        ),
        name="decoupled-triple",
    )


def make_curved_mass():
    """d=2 model with configuration-dependent mass, for Coriolis checks."""
    def mass(q):
        return np.array([[1.0 + q[0] ** 2, 0.3 * q[0] * q[1]],
                         [0.3 * q[0] * q[1], 2.0 + q[1] ** 2]])

    return ss.ModelSpec(
        d=2, n=1, mass=mass,
        effort=lambda q, v: np.array([0.0, -1.0]),
        constraints=(ss.Constraint(lambda q: q[1], lambda q: np.array([0.0, 1.0])),),
        restitution=(0.0,),
        name="curved-mass",
    )


@pytest.fixture(scope="session")
def hopper():
    return make_hopper()


@pytest.fixture(scope="session")
def hopper_initial():
    return ss.State(0.0, [0.55, 0.05], [-0.2, -0.2])
