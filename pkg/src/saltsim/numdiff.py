"""Central finite differences with magnitude-scaled steps."""

from __future__ import annotations

import numpy as np


def coordinate_steps(x, h):
    """Per-coordinate step h*(1+|x_i|)."""
    return h * (1.0 + np.abs(np.asarray(x, dtype=float)))


def jacobian(f, x, h):
    """Central-difference Jacobian of a vector-valued map at x."""
    x = np.asarray(x, dtype=float)
    steps = coordinate_steps(x, h)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = steps[i]
        fp = np.asarray(f(x + e), dtype=float)
        fm = np.asarray(f(x - e), dtype=float)
        cols.append((fp - fm) / (2.0 * steps[i]))
    return np.stack(cols, axis=-1)


def gradient(f, x, h):
    """Central-difference gradient of a scalar map at x."""
    x = np.asarray(x, dtype=float)
    steps = coordinate_steps(x, h)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = steps[i]
        g[i] = (f(x + e) - f(x - e)) / (2.0 * steps[i])
    return g


def directional(f, x, u, h):
    """Central difference of f along the (unnormalized) direction u.

    Approximates Df(x) @ u, including the magnitude of u.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    scale = np.linalg.norm(u)
    if scale == 0.0:
        f0 = np.asarray(f(x), dtype=float)
        return np.zeros_like(f0)
    eps = h * (1.0 + np.linalg.norm(x)) / scale
    fp = np.asarray(f(x + eps * u), dtype=float)
    fm = np.asarray(f(x - eps * u), dtype=float)
    return (fp - fm) / (2.0 * eps)
