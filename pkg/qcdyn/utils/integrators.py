"""Generic fixed-step integrators shared by the solvers."""
from typing import Callable, Tuple

import numpy as np

# Yoshida triple-jump weights turning a symmetric 2nd-order step into a 4th-order one
_CBRT2 = 2.0 ** (1.0 / 3.0)
YOSHIDA4_WEIGHTS = (
    1.0 / (2.0 - _CBRT2),
    -_CBRT2 / (2.0 - _CBRT2),
    1.0 / (2.0 - _CBRT2),
)


def rk4_step(rhs: Callable, y, dt: float):
    """Classical RK4 on an array or on a tuple of arrays."""
    if isinstance(y, tuple):
        def axpy(a, xs, ys):
            return tuple(x + a * v for x, v in zip(xs, ys))

        k1 = rhs(y)
        k2 = rhs(axpy(0.5 * dt, y, k1))
        k3 = rhs(axpy(0.5 * dt, y, k2))
        k4 = rhs(axpy(dt, y, k3))
        return tuple(
            yi + (dt / 6.0) * (a + 2.0 * b + 2.0 * c + d)
            for yi, a, b, c, d in zip(y, k1, k2, k3, k4)
        )

    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def velocity_verlet_step(force: Callable, q: np.ndarray, p: np.ndarray, dt: float,
                         f: np.ndarray = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Kick-drift-kick step for unit masses; returns (q, p, force at new q)."""
    if f is None:
        f = force(q)
    p_half = p + 0.5 * dt * f
    q_new = q + dt * p_half
    f_new = force(q_new)
    p_new = p_half + 0.5 * dt * f_new
    return q_new, p_new, f_new


def composition_weights(composition: str) -> Tuple[float, ...]:
    if composition == "strang":
        return (1.0,)
    if composition == "yoshida4":
        return YOSHIDA4_WEIGHTS
    raise ValueError(f"unknown composition '{composition}'")


def step_plan(t_final: float, dt: float) -> Tuple[int, float]:
    """Number of steps and the (never larger) step that lands exactly on t_final."""
    if t_final <= 0.0:
        return 0, dt
    steps = int(np.ceil(t_final / dt - 1e-9))
    return steps, t_final / steps
