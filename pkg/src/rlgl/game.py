"""Simulation loop, referee and run certification."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .barriers import BatchRows, DegenerateGeometryError, ParamArrays, build_rows
from .dynamics import propagate
from .model import (ConfigurationError, GameSchedule, Playground, RobotState,
                    ScenarioConfig, Status, initial_grid, validate_scenario)
from .nominal import ControllerMode, Mode, _TIME_EPS, nominal_input, update_mode
from .qp import solve_arrays

LIVE, ELIMINATED, FINISHED = 0, 1, 2
_CODE = {Status.LIVE: LIVE, Status.ELIMINATED: ELIMINATED, Status.FINISHED: FINISHED}
_STATUS = {v: k for k, v in _CODE.items()}


class PhaseKind(enum.Enum):
    GREEN = "green"
    RED = "red"


@dataclass(frozen=True)
class Phase:
    kind: PhaseKind
    k: int  # 1-based cycle index

    @property
    def red(self) -> bool:
        return self.kind is PhaseKind.RED


def phase_of(t: float, schedule: GameSchedule) -> Phase:
    """Green on ``[t_g_k, t_r_k)``, red on ``[t_r_k, t_g_{k+1})``."""
    te = t + _TIME_EPS
    k = 0
    for idx, tg in enumerate(schedule.green_times):
        if tg <= te:
            k = idx
    tr = schedule.red_times[k] if k < len(schedule.red_times) else math.inf
    return Phase(PhaseKind.RED if te >= tr else PhaseKind.GREEN, k + 1)


def detect_violation(state: RobotState, phase: Phase, move_eps: float) -> bool:
    return phase.red and float(np.hypot(*state.v)) > move_eps


@dataclass(frozen=True)
class RefereeEvent:
    time: float
    robot: int
    kind: str  # "eliminated" or "finished"
    position: tuple[float, float]


@dataclass(frozen=True)
class SlackEvent:
    time: float
    robot: int
    total: float
    sources: tuple[str, ...]


def _referee(t, P, V, status, red: bool, g_y: float, move_eps: float):
    """Vectorized referee on arrays; mutates ``V`` and ``status`` in place."""
    events = []
    live = status == LIVE
    speed = np.hypot(V[:, 0], V[:, 1])
    out = live & (speed > move_eps) if red else np.zeros_like(live)
    done = live & ~out & (P[:, 1] >= g_y)
    for i in np.flatnonzero(out):
        status[i] = ELIMINATED
        V[i] = 0.0
        events.append(RefereeEvent(t, int(i), "eliminated", (float(P[i, 0]), float(P[i, 1]))))
    for i in np.flatnonzero(done):
        status[i] = FINISHED
        events.append(RefereeEvent(t, int(i), "finished", (float(P[i, 0]), float(P[i, 1]))))
    return events


def referee_step(t: float, states: list[RobotState], schedule: GameSchedule,
                 playground: Playground, move_eps: float):
    """Eliminate robots caught moving on red and retire those past the line.

    Returns ``(new_states, events)``. Eliminated robots keep their position
    and lose their velocity; robots already out of the game are untouched.
    """
    P = np.array([s.p for s in states]).reshape(-1, 2)
    V = np.array([s.v for s in states]).reshape(-1, 2)
    status = np.array([_CODE[s.status] for s in states], dtype=np.int8)
    events = _referee(t, P, V, status, phase_of(t, schedule).red, playground.g_y, move_eps)
    new = []
    for i, s in enumerate(states):
        if status[i] == _CODE[s.status]:
            new.append(s)
        else:
            new.append(RobotState(P[i], V[i], _STATUS[int(status[i])], t))
    return new, events


@dataclass
class SimulationLog:
    """Everything recorded on the uniform time grid ``times``.

    Arrays are indexed ``[step, robot, ...]``. ``h2`` and ``h4`` are
    ``[step, i, j]`` and NaN where the barrier is not in force (robot out of
    the game, or no such pair). Inputs are the ones computed from the state
    at that step.
    """
    times: np.ndarray
    p: np.ndarray
    v: np.ndarray
    status: np.ndarray
    brake: np.ndarray
    u_nominal: np.ndarray
    u: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    h4: np.ndarray
    d0: float
    events: list[RefereeEvent] = field(default_factory=list)
    slack_events: list[SlackEvent] = field(default_factory=list)

    @property
    def n_robots(self) -> int:
        return self.p.shape[1]

    def truncated(self, n: int) -> "SimulationLog":
        keep = ("times", "p", "v", "status", "brake", "u_nominal", "u", "h1", "h2", "h3", "h4")
        kw = {k: getattr(self, k)[:n] for k in keep}
        return SimulationLog(**kw, d0=self.d0, events=self.events,
                             slack_events=self.slack_events)


def _allocate(n_rec, n, d0):
    nan = np.nan
    return SimulationLog(
        times=np.zeros(n_rec),
        p=np.full((n_rec, n, 2), nan),
        v=np.full((n_rec, n, 2), nan),
        status=np.zeros((n_rec, n), dtype=np.int8),
        brake=np.zeros((n_rec, n), dtype=bool),
        u_nominal=np.full((n_rec, n, 2), nan),
        u=np.full((n_rec, n, 2), nan),
        h1=np.full((n_rec, n, 2), nan),
        h2=np.full((n_rec, n, n), nan),
        h3=np.full((n_rec, n, 2), nan),
        h4=np.full((n_rec, n, n), nan),
        d0=d0,
    )


def run(config: ScenarioConfig, initial: list[RobotState] | None = None) -> SimulationLog:
    """Simulate the game for ``duration / dt`` steps.

    Each step: control from the snapshot at ``t`` (mode latch, nominal
    input, safety-filter QP), exact dynamics with every robot's true
    friction, then the referee at ``t + dt``. Raises
    :class:`DegenerateGeometryError` with the partial log attached if two
    robots ever coincide.
    """
    problems = validate_scenario(config) if config.robots else []
    if problems:
        raise ConfigurationError("; ".join(problems))
    n = len(config.robots)
    T = config.n_steps
    dt = config.dt
    pg, sched = config.playground, config.schedule
    log = _allocate(T + 1, n, pg.d0)
    log.times[:] = np.arange(T + 1) * dt
    if n == 0:
        return log

    states = initial if initial is not None else initial_grid(config)
    params = config.robots
    par = ParamArrays.from_params(params)
    P = np.array([s.p for s in states], dtype=float)
    V = np.array([s.v for s in states], dtype=float)
    status = np.array([_CODE[s.status] for s in states], dtype=np.int8)
    modes = [ControllerMode() for _ in range(n)]
    U_in = np.zeros((n, 2))

    for k in range(T + 1):
        t = log.times[k]
        live = status == LIVE
        try:
            batch = build_rows(P, V, live, status == ELIMINATED, par, pg)
        except DegenerateGeometryError as err:
            err.log = log.truncated(k)
            raise
        _record(log, k, P, V, status, batch)

        U_in[:] = 0.0
        for i in batch.rows:
            st = RobotState(P[i], V[i])
            modes[i] = update_mode(t, st, params[i], sched, modes[i])
            un = nominal_input(t, st, params[i], modes[i], config.hard_sign)
            A, b = batch.rows[i]
            u, slack = solve_arrays(un, A, b, params[i].u_max, config.slack_weight)
            u = np.clip(u, -params[i].u_max, params[i].u_max)
            if slack.any():
                labels = batch.labels(i)
                srcs = tuple(_label(labels[r]) for r in np.flatnonzero(slack > 0))
                log.slack_events.append(SlackEvent(float(t), i, float(slack.sum()), srcs))
            log.u_nominal[k, i] = un
            log.u[k, i] = u
            log.brake[k, i] = modes[i].mode is Mode.BRAKE
            U_in[i] = u
        if k == T:
            break

        if live.any():
            P[live], V[live] = propagate(P[live], V[live], U_in[live],
                                         par.kappa_true[live], dt)
        t_next = log.times[k + 1]
        log.events.extend(_referee(t_next, P, V, status, phase_of(t_next, sched).red,
                                   pg.g_y, config.move_eps))
    return log


def _label(lab):
    src, j = lab
    return src.value if j is None else f"{src.value}[{j}]"


def _record(log, k, P, V, status, batch: BatchRows):
    log.p[k] = P
    log.v[k] = V
    log.status[k] = status
    log.h1[k] = batch.h1
    log.h2[k] = batch.h2
    log.h3[k] = batch.h3
    log.h4[k] = batch.h4


@dataclass(frozen=True)
class CertFailure:
    barrier: str
    robot: int
    other: int | None
    time: float
    value: float


@dataclass
class SafetyReport:
    minima: dict[str, float]
    slack_count: int
    slack_total: float
    failures: list[CertFailure]
    cert_tol: float

    @property
    def certified(self) -> bool:
        return not self.failures


_FAMILIES = {"playground": "h1", "pairwise": "h2", "velocity": "h3", "obstacle": "h4"}


def certify(log: SimulationLog, cert_tol: float = 1e-6) -> SafetyReport:
    """Scan every logged barrier of every live robot for values below ``-cert_tol``."""
    minima, failures = {}, []
    for family, attr in _FAMILIES.items():
        arr = getattr(log, attr)
        finite = arr[np.isfinite(arr)]
        minima[family] = float(finite.min()) if finite.size else math.inf
        with np.errstate(invalid="ignore"):
            bad = np.argwhere(arr < -cert_tol)
        for k, i, m in bad:
            if attr in ("h1", "h3"):
                name, other = f"{attr}{'xy'[m]}", None
            else:
                if attr == "h2" and m < i:
                    continue  # symmetric pair, reported once
                name, other = f"{attr}[{i},{m}]", int(m)
            failures.append(CertFailure(name, int(i), other, float(log.times[k]),
                                        float(arr[k, i, m])))
    total = float(sum(e.total for e in log.slack_events))
    return SafetyReport(minima, len(log.slack_events), total, failures, cert_tol)
