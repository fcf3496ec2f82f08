"""Domain types, scenario validation and the initial start-zone grid."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

# Playground walls are kept this many robot radii away from the robot centers.
WALL_MARGIN = 1.1
# Upper edge of the start band as a fraction of the playground length.
START_BAND_FRACTION = 0.1
# Obstacle barrier rate. Slower than the pairwise rate: a frozen obstacle
# shares none of the avoidance effort, and at higher rates a robot running
# up from far away can outpace its own braking authority.
OBSTACLE_GAMMA = 0.5


class ConfigurationError(ValueError):
    """Raised when a scenario cannot be simulated as configured."""


class Status(enum.Enum):
    LIVE = "live"
    ELIMINATED = "eliminated"
    FINISHED = "finished"


@dataclass
class RobotParams:
    id: int
    v_max: float
    u_max: float
    kappa_true: float
    kappa_low: float
    kappa_up: float
    eta: float
    gain: float = 1.0
    gamma1: float = 5.0
    gamma2: float = 5.0
    gamma3: float = 5.0
    gamma4: float = OBSTACLE_GAMMA
    smoothing_eps: float = 100.0

    def violations(self) -> list[str]:
        out = []
        tag = f"robot {self.id}"
        for name in ("v_max", "u_max", "kappa_true", "kappa_low", "kappa_up",
                     "eta", "gain", "gamma1", "gamma2", "gamma3", "gamma4",
                     "smoothing_eps"):
            if not math.isfinite(getattr(self, name)):
                out.append(f"{tag}: {name} must be finite")
        if not self.v_max > 0:
            out.append(f"{tag}: v_max > 0 required (got {self.v_max})")
        if not self.u_max > 0:
            out.append(f"{tag}: u_max > 0 required (got {self.u_max})")
        if not self.kappa_low > 0:
            out.append(f"{tag}: kappa_low > 0 required (got {self.kappa_low})")
        if not self.kappa_low <= self.kappa_up:
            out.append(f"{tag}: friction bounds must satisfy kappa_low <= kappa_up "
                       f"(got {self.kappa_low} > {self.kappa_up})")
        elif not self.kappa_low <= self.kappa_true <= self.kappa_up:
            out.append(f"{tag}: kappa_true must lie in [kappa_low, kappa_up] "
                       f"(got {self.kappa_true})")
        if not self.eta >= 1:
            out.append(f"{tag}: eta >= 1 required (got {self.eta})")
        if not self.gain > 0:
            out.append(f"{tag}: gain > 0 required (got {self.gain})")
        for name in ("gamma1", "gamma2", "gamma3", "gamma4"):
            if not getattr(self, name) > 0:
                out.append(f"{tag}: {name} > 0 required (got {getattr(self, name)})")
        if not self.smoothing_eps > 0:
            out.append(f"{tag}: smoothing_eps > 0 required (got {self.smoothing_eps})")
        return out


@dataclass
class RobotState:
    """Position and velocity of one robot plus its place in the game.

    ``status_time`` is the time the robot left the game (None while live).
    Eliminated robots keep their last position and have zero velocity.
    """
    p: np.ndarray
    v: np.ndarray
    status: Status = Status.LIVE
    status_time: float | None = None

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float).reshape(2)
        self.v = np.asarray(self.v, dtype=float).reshape(2)

    @property
    def live(self) -> bool:
        return self.status is Status.LIVE


@dataclass
class Playground:
    l_x: float = 5.0
    l_y: float = 35.0
    g_y: float = 25.0
    r0: float = 0.3
    d0: float = 0.4

    @property
    def margin(self) -> float:
        return WALL_MARGIN * self.r0

    @property
    def start_band(self) -> tuple[float, float]:
        return self.margin, START_BAND_FRACTION * self.l_y

    def violations(self) -> list[str]:
        out = []
        if not (self.l_x > 0 and self.l_y > 0):
            out.append(f"playground: l_x, l_y > 0 required (got {self.l_x}, {self.l_y})")
        if not 0 < self.g_y < self.l_y:
            out.append(f"playground: 0 < g_y < l_y required (got g_y = {self.g_y})")
        if not self.r0 > 0:
            out.append(f"playground: r0 > 0 required (got {self.r0})")
        if not self.d0 > self.r0:
            out.append(f"playground: d0 > r0 required (got d0 = {self.d0}, r0 = {self.r0})")
        if not self.margin < min(self.l_x, self.l_y) / 2:
            out.append("playground: 1.1*r0 < min(l_x, l_y)/2 required for a nonempty interior")
        return out


@dataclass
class GameSchedule:
    """Green/red announcement times. A trailing red time of ``inf`` means
    the last green phase never ends."""
    green_times: list[float]
    red_times: list[float]
    duration: float

    def violations(self) -> list[str]:
        out = []
        g, r = list(self.green_times), list(self.red_times)
        if not g:
            return ["schedule: at least one green time required"]
        if g[0] != 0:
            out.append(f"schedule: first green time must be 0 (got {g[0]})")
        if len(r) not in (len(g), len(g) - 1):
            out.append("schedule: need one red time per green time "
                       f"(got {len(g)} green, {len(r)} red)")
            return out
        events = []
        for k, tg in enumerate(g):
            events.append(tg)
            if k < len(r):
                events.append(r[k])
        if any(not b > a for a, b in zip(events, events[1:])):
            out.append("schedule: times must interleave strictly as g1 < r1 < g2 < ...")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            out.append(f"schedule: duration must be positive and finite (got {self.duration})")
        return out


@dataclass
class ScenarioConfig:
    robots: list[RobotParams]
    playground: Playground = field(default_factory=Playground)
    schedule: GameSchedule = field(
        default_factory=lambda: GameSchedule([0.0], [math.inf], 80.0))
    dt: float = 0.01
    rng_seed: int = 0
    move_eps: float = 0.01
    slack_weight: float = 1e6
    cert_tol: float = 1e-6
    start_rows: int = 1
    start_cols: int = 1
    hard_sign: bool = False

    @property
    def n_steps(self) -> int:
        return int(round(self.schedule.duration / self.dt))


def validate_scenario(config: ScenarioConfig) -> list[str]:
    """Return a description of every violated invariant; empty means simulable."""
    out = []
    if not config.robots:
        out.append("scenario: at least one robot required")
    ids = [r.id for r in config.robots]
    if ids != list(range(len(ids))):
        out.append("scenario: robot ids must be 0..N-1 in order")
    for r in config.robots:
        out.extend(r.violations())
    out.extend(config.playground.violations())
    out.extend(config.schedule.violations())
    if not config.dt > 0:
        out.append(f"scenario: dt > 0 required (got {config.dt})")
    if not config.move_eps > 0:
        out.append(f"scenario: move_eps > 0 required (got {config.move_eps})")
    if not config.slack_weight >= 1e3:
        out.append(f"scenario: slack_weight must be >> 1 (got {config.slack_weight})")
    if not config.cert_tol >= 0:
        out.append(f"scenario: cert_tol >= 0 required (got {config.cert_tol})")
    if config.start_rows < 1 or config.start_cols < 1:
        out.append("scenario: start_rows and start_cols must be positive")
    elif config.start_rows * config.start_cols < len(config.robots):
        out.append(f"scenario: start grid {config.start_rows}x{config.start_cols} "
                   f"cannot hold {len(config.robots)} robots")
    return out


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    if n == 1:
        return np.array([(lo + hi) / 2])
    return np.linspace(lo, hi, n)


def initial_grid(config: ScenarioConfig) -> list[RobotState]:
    """Place robots on an evenly spaced grid in the start band, at rest.

    Robot ``i`` occupies column ``i % cols`` and row ``i // cols``; rows are
    filled from the bottom of the band upward.
    """
    pg = config.playground
    rows, cols = config.start_rows, config.start_cols
    if rows * cols < len(config.robots):
        raise ConfigurationError(
            f"start grid {rows}x{cols} cannot hold {len(config.robots)} robots")
    xs = _axis(pg.margin, pg.l_x - pg.margin, cols)
    y_lo, y_hi = pg.start_band
    ys = _axis(y_lo, y_hi, rows)

    used_rows = -(-len(config.robots) // cols) if config.robots else 0
    spacing = []
    if cols > 1 and used_rows >= 1 and len(config.robots) > 1:
        spacing.append(xs[1] - xs[0])
    if rows > 1 and used_rows > 1:
        spacing.append(ys[1] - ys[0])
    if spacing and min(spacing) < pg.d0:
        need_x = (pg.l_x - 2 * pg.margin) / pg.d0 + 1
        need_y = (y_hi - y_lo) / pg.d0 + 1
        raise ConfigurationError(
            f"start grid too dense: spacing {min(spacing):.4g} m < d0 = {pg.d0} m "
            f"(at most {int(need_x)} columns x {int(need_y)} rows fit at spacing d0)")

    states = []
    for i, _ in enumerate(config.robots):
        p = (xs[i % cols], ys[i // cols])
        states.append(RobotState(p=p, v=(0.0, 0.0)))
    return states
