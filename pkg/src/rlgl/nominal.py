"""Two-mode nominal controller: advance at full thrust while green, then brake
hard early enough to be motionless when red is called."""
from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import GameSchedule, RobotParams, RobotState


class Mode(enum.Enum):
    ADVANCE = "advance"
    BRAKE = "brake"


@dataclass(frozen=True)
class ControllerMode:
    mode: Mode = Mode.ADVANCE
    trigger_time: float | None = None
    interval: int = 0


def estimated_braking_time_axis(v_axis: float, u_max: float, kappa_low: float) -> float:
    """Upper bound on the time to stop one axis under full braking.

    Friction helps braking, so evaluating the closed-form stopping time with
    the smallest admissible friction gives the slowest (safest) estimate.
    """
    terminal = u_max / kappa_low
    return math.log1p(abs(v_axis) / terminal) / kappa_low


def estimated_braking_time(v, u_max: float, kappa_low: float) -> float:
    return max(estimated_braking_time_axis(v[0], u_max, kappa_low),
               estimated_braking_time_axis(v[1], u_max, kappa_low))


# Absorbs float error in step-grid times such as 700 * 0.01.
_TIME_EPS = 1e-9


def interval_index(t: float, schedule: GameSchedule) -> int:
    """Index k (0-based) of the green/red cycle containing ``t``."""
    return max(bisect.bisect_right(schedule.green_times, t + _TIME_EPS) - 1, 0)


def red_time(k: int, schedule: GameSchedule) -> float:
    return schedule.red_times[k] if k < len(schedule.red_times) else math.inf


def update_mode(t: float, state: RobotState, params: RobotParams,
                schedule: GameSchedule, current: ControllerMode) -> ControllerMode:
    """Advance the mode latch to time ``t``.

    The mode resets to ADVANCE at every green call and switches to BRAKE at
    the first sample where the remaining green time no longer covers
    ``eta`` times the estimated braking time. Once braking, it stays so
    until the next green call.
    """
    k = interval_index(t, schedule)
    if k != current.interval:
        current = ControllerMode(Mode.ADVANCE, None, k)
    if current.mode is Mode.BRAKE:
        return current
    slack_time = red_time(k, schedule) - t
    t_brake = estimated_braking_time(state.v, params.u_max, params.kappa_low)
    if slack_time <= params.eta * t_brake + _TIME_EPS:
        return ControllerMode(Mode.BRAKE, t, k)
    return current


def nominal_input(t: float, state: RobotState, params: RobotParams,
                  mode: ControllerMode, hard_sign: bool = False) -> np.ndarray:
    vx, vy = state.v
    U = params.u_max
    if mode.mode is Mode.ADVANCE:
        return np.array([-params.gain * vx, U])
    if hard_sign:
        return np.array([-U * np.sign(vx), -U * np.sign(vy)])
    eps = params.smoothing_eps
    return np.array([-U * math.tanh(eps * vx), -U * math.tanh(eps * vy)])
