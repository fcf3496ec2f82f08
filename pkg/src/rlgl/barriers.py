"""Robust ECBF constraint rows on a robot's acceleration input.

Every barrier ``h`` here has relative degree two except the velocity limit.
The exponential condition ``h'' + 2*g*h' + g**2*h >= 0`` is affine in the
input, and the unknown friction enters only through terms that are replaced
by their worst case over ``[kappa_low, kappa_up]``. Each builder returns the
resulting rows ``a . u <= b`` together with the barrier values.

The scalar builders are the readable reference; :func:`build_rows` computes
the same rows for every robot at once and is what the simulator calls.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .model import Playground, RobotParams, RobotState, Status


class DegenerateGeometryError(RuntimeError):
    """Two robot centers coincide; the distance barrier is undefined."""

    def __init__(self, i: int, j: int, log=None):
        super().__init__(f"robots {i} and {j} are coincident")
        self.pair = (i, j)
        self.log = log


class Source(enum.Enum):
    PLAYGROUND_X = "h1x"
    PLAYGROUND_Y = "h1y"
    PAIR = "h2"
    VEL_X = "h3x"
    VEL_Y = "h3y"
    OBSTACLE = "h4"


@dataclass(frozen=True)
class ConstraintRow:
    a: np.ndarray
    b: float
    source: Source
    other: int | None = None
    softenable: bool = True

    @property
    def label(self) -> str:
        if self.other is None:
            return self.source.value
        return f"{self.source.value}[{self.other}]"


@dataclass
class BarrierSnapshot:
    time: float
    h1: np.ndarray
    h3: np.ndarray
    h2: dict[int, float] = field(default_factory=dict)
    h4: dict[int, float] = field(default_factory=dict)

    def values(self) -> dict[str, float]:
        out = {"h1x": self.h1[0], "h1y": self.h1[1],
               "h3x": self.h3[0], "h3y": self.h3[1]}
        out.update({f"h2[{j}]": h for j, h in self.h2.items()})
        out.update({f"h4[{j}]": h for j, h in self.h4.items()})
        return out

    def failures(self, cert_tol: float) -> list[tuple[str, float]]:
        return [(k, h) for k, h in self.values().items() if h < -cert_tol]


def playground_rows(state: RobotState, params: RobotParams, playground: Playground):
    """Rows keeping the robot ``1.1 r0`` inside the walls.

    Returns ``(rows, h, h_dot)`` with one entry per axis.
    """
    centre = np.array([playground.l_x, playground.l_y]) / 2
    half = centre - playground.margin
    g = params.gamma1
    rows, h, hd = [], np.empty(2), np.empty(2)
    for m, src in enumerate((Source.PLAYGROUND_X, Source.PLAYGROUND_Y)):
        off = state.p[m] - centre[m]
        v = state.v[m]
        h[m] = half[m] ** 2 - off ** 2
        hd[m] = -2 * off * v
        a = np.zeros(2)
        a[m] = 2 * off
        b = -2 * params.kappa_up * abs(off * v) - 2 * v ** 2 + g ** 2 * h[m] + 2 * g * hd[m]
        rows.append(ConstraintRow(a, float(b), src))
    return rows, h, hd


def pairwise_bound(p_i, v_i, p_j, v_j, kappa_low: float, kappa_up: float,
                   gamma: float, d0: float):
    """Robust right-hand side of the coupled constraint ``-p_ij . (u_i - u_j) <= b``.

    Returns ``(b, h, h_dot)``; the condition is multiplied through by the
    distance so the row normal is ``-p_ij`` itself.
    """
    p_ij = np.asarray(p_i, float) - np.asarray(p_j, float)
    v_ij = np.asarray(v_i, float) - np.asarray(v_j, float)
    d = float(np.hypot(*p_ij))
    if d == 0.0:
        raise DegenerateGeometryError(-1, -1)
    pv = float(p_ij @ v_ij)
    h = d - d0
    hd = pv / d
    b = (-kappa_up * abs(pv)
         - (kappa_up - kappa_low) * abs(float(p_ij @ np.asarray(v_j, float)))
         + float(v_ij @ v_ij) - pv ** 2 / d ** 2
         + gamma ** 2 * d * h + 2 * gamma * d * hd)
    return b, h, hd


def pairwise_row(state_i: RobotState, state_j: RobotState, params_i: RobotParams,
                 params_j: RobotParams, d0: float):
    """Robot i's share of the collision constraint with robot j.

    The coupled bound is split in proportion to the actuation limits, so the
    robot with more thrust takes the larger share of the avoidance effort.
    """
    try:
        b, h, hd = pairwise_bound(state_i.p, state_i.v, state_j.p, state_j.v,
                                  params_i.kappa_low, params_i.kappa_up,
                                  params_i.gamma2, d0)
    except DegenerateGeometryError:
        raise DegenerateGeometryError(params_i.id, params_j.id) from None
    share = params_i.u_max / (params_i.u_max + params_j.u_max)
    row = ConstraintRow(-(state_i.p - state_j.p), share * b, Source.PAIR, params_j.id)
    return row, h, hd


def obstacle_row(state_i: RobotState, obstacle_position, params_i: RobotParams,
                 d0: float, obstacle_id: int | None = None):
    """Collision row against a motionless obstacle; robot i carries all of it."""
    try:
        b, h, _ = pairwise_bound(state_i.p, state_i.v, obstacle_position, (0.0, 0.0),
                                 params_i.kappa_low, params_i.kappa_up,
                                 params_i.gamma4, d0)
    except DegenerateGeometryError:
        raise DegenerateGeometryError(params_i.id, -1 if obstacle_id is None
                                      else obstacle_id) from None
    a = -(state_i.p - np.asarray(obstacle_position, float))
    return ConstraintRow(a, b, Source.OBSTACLE, obstacle_id), h


def velocity_rows(state: RobotState, params: RobotParams):
    """First-order barrier rows on ``V**2 - v_m**2`` for each axis."""
    rows, h = [], np.empty(2)
    for m, src in enumerate((Source.VEL_X, Source.VEL_Y)):
        v = state.v[m]
        h[m] = params.v_max ** 2 - v ** 2
        a = np.zeros(2)
        a[m] = 2 * v
        rows.append(ConstraintRow(a, float(2 * params.kappa_low * v ** 2 + params.gamma3 * h[m]), src))
    return rows, h


def assemble(i: int, states: list[RobotState], params: list[RobotParams],
             playground: Playground, time: float = 0.0):
    """Stack every row for live robot ``i``.

    Order: playground (x, y), one row per other live robot, velocity (x, y),
    one row per eliminated robot. Finished robots contribute nothing.
    """
    me, pi = states[i], params[i]
    rows, h1, _ = playground_rows(me, pi, playground)
    snap = BarrierSnapshot(time, h1, np.empty(2))
    for j, other in enumerate(states):
        if j != i and other.live:
            row, h, _ = pairwise_row(me, other, pi, params[j], playground.d0)
            rows.append(row)
            snap.h2[j] = h
    vrows, snap.h3 = velocity_rows(me, pi)
    rows.extend(vrows)
    for j, other in enumerate(states):
        if other.status is Status.ELIMINATED:
            row, h = obstacle_row(me, other.p, pi, playground.d0, j)
            rows.append(row)
            snap.h4[j] = h
    return rows, snap


@dataclass
class ParamArrays:
    """Per-robot parameters as column arrays for the batched builder."""
    v_max: np.ndarray
    u_max: np.ndarray
    kappa_true: np.ndarray
    kappa_low: np.ndarray
    kappa_up: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    gamma3: np.ndarray
    gamma4: np.ndarray

    @classmethod
    def from_params(cls, params: list[RobotParams]) -> "ParamArrays":
        def col(name):
            return np.array([getattr(p, name) for p in params], dtype=float)
        return cls(**{name: col(name) for name in cls.__dataclass_fields__})


@dataclass
class BatchRows:
    """Rows and barrier values for every robot at one instant.

    ``h2`` and ``h4`` are N x N with NaN where no barrier applies. ``rows[i]``
    is ``(A, b)`` for each live robot ``i``, ordered as in :func:`assemble`.
    """
    h1: np.ndarray
    h3: np.ndarray
    h2: np.ndarray
    h4: np.ndarray
    rows: dict[int, tuple[np.ndarray, np.ndarray]]
    live_idx: np.ndarray
    dead_idx: np.ndarray

    def labels(self, i: int) -> list[tuple[Source, int | None]]:
        others = self.live_idx[self.live_idx != i]
        return ([(Source.PLAYGROUND_X, None), (Source.PLAYGROUND_Y, None)]
                + [(Source.PAIR, int(j)) for j in others]
                + [(Source.VEL_X, None), (Source.VEL_Y, None)]
                + [(Source.OBSTACLE, int(j)) for j in self.dead_idx])


def build_rows(P: np.ndarray, V: np.ndarray, live: np.ndarray, dead: np.ndarray,
               par: ParamArrays, playground: Playground) -> BatchRows:
    n = len(P)
    centre = np.array([playground.l_x, playground.l_y]) / 2
    half = centre - playground.margin
    d0 = playground.d0

    off = P - centre
    h1 = half ** 2 - off ** 2
    h1d = -2 * off * V
    g1 = par.gamma1[:, None]
    a1 = 2 * off
    b1 = (-2 * par.kappa_up[:, None] * np.abs(off * V) - 2 * V ** 2
          + g1 ** 2 * h1 + 2 * g1 * h1d)

    h3 = par.v_max[:, None] ** 2 - V ** 2
    a3 = 2 * V
    b3 = 2 * par.kappa_low[:, None] * V ** 2 + par.gamma3[:, None] * h3

    p_ij = P[:, None, :] - P[None, :, :]
    v_ij = V[:, None, :] - V[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", p_ij, p_ij))
    pv = np.einsum("ijk,ijk->ij", p_ij, v_ij)
    pvj = np.einsum("ijk,jk->ij", p_ij, V)
    vv = np.einsum("ijk,ijk->ij", v_ij, v_ij)

    live_pair = live[:, None] & live[None, :] & ~np.eye(n, dtype=bool)
    obst_pair = live[:, None] & dead[None, :]
    bad = (live_pair | obst_pair) & (d == 0)
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        raise DegenerateGeometryError(i, j)

    with np.errstate(divide="ignore", invalid="ignore"):
        h = d - d0
        hd = pv / d
        ku = par.kappa_up[:, None]
        kl = par.kappa_low[:, None]
        common = -ku * np.abs(pv) - (ku - kl) * np.abs(pvj) + vv - pv ** 2 / d ** 2
        g2 = par.gamma2[:, None]
        g4 = par.gamma4[:, None]
        b2 = (common + g2 ** 2 * d * h + 2 * g2 * d * hd)
        b2 *= par.u_max[:, None] / (par.u_max[:, None] + par.u_max[None, :])
        # dead robots have v_j = 0, so the same terms give the obstacle bound
        b4 = common + g4 ** 2 * d * h + 2 * g4 * d * hd

    h2 = np.where(live_pair, h, np.nan)
    h4 = np.where(obst_pair, h, np.nan)
    h1 = np.where(live[:, None], h1, np.nan)
    h3 = np.where(live[:, None], h3, np.nan)

    live_idx = np.flatnonzero(live)
    dead_idx = np.flatnonzero(dead)
    eye = np.eye(2)
    rows = {}
    for i in live_idx:
        others = live_idx[live_idx != i]
        A = np.concatenate([eye * a1[i], -p_ij[i, others], eye * a3[i], -p_ij[i, dead_idx]])
        b = np.concatenate([b1[i], b2[i, others], b3[i], b4[i, dead_idx]])
        rows[int(i)] = (A, b)
    return BatchRows(h1=h1, h3=h3, h2=h2, h4=h4, rows=rows,
                     live_idx=live_idx, dead_idx=dead_idx)
