"""Exact zero-order-hold propagation of the friction-damped double integrator.

Per axis the model is ``dp/dt = v``, ``dv/dt = u - kappa * v``; with ``u``
held constant over a step the solution is closed form, so the only error
left in a simulation is the sampling of the controller.
"""
from __future__ import annotations

import numpy as np

from .model import RobotState


def clamp_input(u, u_max: float) -> np.ndarray:
    return np.clip(np.asarray(u, dtype=float), -u_max, u_max)


def propagate(p, v, u, kappa, dt: float):
    """Vectorized step on arrays; ``kappa`` broadcasts against the last axis."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    if kappa.ndim == 1 and p.ndim == 2:
        kappa = kappa[:, None]
    decay = np.exp(-kappa * dt)
    # 1 - exp(-x) without cancellation for small kappa*dt
    gain = -np.expm1(-kappa * dt)
    terminal = u / kappa
    v_next = decay * v + gain * terminal
    p_next = p + terminal * dt + (v - terminal) * gain / kappa
    return p_next, v_next


def step(state: RobotState, u, kappa: float, dt: float) -> RobotState:
    """Advance a live robot by ``dt`` under constant input ``u``.

    Robots that have left the game are returned unchanged.
    """
    if not state.live:
        return state
    if not (dt > 0 and kappa > 0):
        raise ValueError(f"step needs dt > 0 and kappa > 0 (got dt={dt}, kappa={kappa})")
    p, v = propagate(state.p, state.v, u, kappa, dt)
    return RobotState(p=p, v=v, status=state.status, status_time=state.status_time)

