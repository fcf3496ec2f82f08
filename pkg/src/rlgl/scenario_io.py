"""Scenario files and the seeded reference scenario.

A scenario file is flat ``key = value`` text split into sections::

    # comments start with '#'
    [scenario]
    robots = 22
    seed = 42

    [playground]
    l_x = 5.0

    [schedule]
    green_times = 0, 8, 16
    red_times = 7, 15, inf

    [robot 3]
    eta = 1.25

Anything not given falls back to the reference game: per-robot limits,
sensitivity and friction are drawn from ``seed``, everything else takes the
defaults in :data:`SCENARIO_DEFAULTS`.
"""
from __future__ import annotations

import dataclasses
import math
import re
from pathlib import Path

import numpy as np

from .model import (ConfigurationError, GameSchedule, Playground, RobotParams,
                    ScenarioConfig, validate_scenario)

KAPPA_LOW = 0.0141
KAPPA_UP = 0.2368
V_RANGE = (1.5, 2.0)
U_RANGE = (0.2, 0.5)
ETA_RANGE = (1.0, 1.5)
N_ROBOTS = 22
GRID_COLS = 11

SCENARIO_DEFAULTS = {
    "dt": 0.01,
    "move_eps": 0.01,
    "slack_weight": 1e6,
    "cert_tol": 1e-6,
    "hard_sign": False,
}


class ScenarioParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key


def paper_schedule() -> GameSchedule:
    """Eight 7 s green phases each followed by a 1 s red, then green forever."""
    green = [8.0 * k for k in range(9)]
    red = [8.0 * k - 1 for k in range(1, 9)] + [math.inf]
    return GameSchedule(green, red, 80.0)


def draw_robots(seed: int, n: int, kappa_low: float = KAPPA_LOW,
                kappa_up: float = KAPPA_UP) -> list[RobotParams]:
    rng = np.random.default_rng(seed)
    v_max = rng.uniform(*V_RANGE, size=n)
    u_max = rng.uniform(*U_RANGE, size=n)
    eta = rng.uniform(*ETA_RANGE, size=n)
    kappa = rng.uniform(kappa_low, kappa_up, size=n)
    return [RobotParams(id=i, v_max=float(v_max[i]), u_max=float(u_max[i]),
                        kappa_true=float(kappa[i]), kappa_low=kappa_low,
                        kappa_up=kappa_up, eta=float(eta[i]))
            for i in range(n)]


def _grid_shape(n: int) -> tuple[int, int]:
    cols = max(min(n, GRID_COLS), 1)
    return max(-(-n // cols), 1), cols


def generate_scenario(seed: int, n_robots: int = N_ROBOTS) -> ScenarioConfig:
    rows, cols = _grid_shape(n_robots)
    return ScenarioConfig(
        robots=draw_robots(seed, n_robots),
        playground=Playground(),
        schedule=paper_schedule(),
        rng_seed=seed,
        start_rows=rows,
        start_cols=cols,
        **SCENARIO_DEFAULTS,
    )


def generate_paper_scenario(seed: int) -> ScenarioConfig:
    """The 22-robot, 80 s reference game with parameters drawn from ``seed``."""
    return generate_scenario(seed, N_ROBOTS)


_SECTION = re.compile(r"^\[\s*(scenario|playground|schedule|robot\s+(\d+))\s*\]$")
_ROBOT_KEYS = [f.name for f in dataclasses.fields(RobotParams) if f.name != "id"]
_PLAYGROUND_KEYS = [f.name for f in dataclasses.fields(Playground)]
_SCENARIO_KEYS = ["robots", "seed", "start_rows", "start_cols", "kappa_low",
                  "kappa_up", "duration", *SCENARIO_DEFAULTS]


def _number(value: str, key: str, line: int, integer: bool = False):
    try:
        if integer:
            return int(value)
        return float(value)
    except ValueError:
        kind = "integer" if integer else "number"
        raise ScenarioParseError(f"{key}: expected a {kind}, got {value!r}", line, key) from None


def _bool(value: str, key: str, line: int) -> bool:
    low = value.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ScenarioParseError(f"{key}: expected true/false, got {value!r}", line, key)


def parse_text(text: str) -> ScenarioConfig:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            m = _SECTION.match(line)
            if not m:
                raise ScenarioParseError(f"unknown section {line!r}", lineno)
            current = f"robot {int(m.group(2))}" if m.group(2) else m.group(1)
            if current in sections:
                raise ScenarioParseError(f"duplicate section [{current}]", lineno)
            sections[current] = {}
            continue
        if "=" not in line:
            raise ScenarioParseError(f"expected 'key = value', got {line!r}", lineno)
        if current is None:
            raise ScenarioParseError("key outside of any section", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if current.startswith("robot"):
            allowed = _ROBOT_KEYS
        else:
            allowed = {"scenario": _SCENARIO_KEYS, "playground": _PLAYGROUND_KEYS,
                       "schedule": ["green_times", "red_times", "duration"]}[current]
        if key not in allowed:
            raise ScenarioParseError(f"unknown key {key!r} in [{current}]", lineno, key)
        if key in sections[current]:
            raise ScenarioParseError(f"duplicate key {key!r}", lineno, key)
        sections[current][key] = (value, lineno)

    sc = sections.get("scenario", {})

    def get(sec, key, conv="float", default=None):
        if key not in sec:
            return default
        value, lineno = sec[key]
        if conv == "int":
            return _number(value, key, lineno, integer=True)
        if conv == "bool":
            return _bool(value, key, lineno)
        if conv == "list":
            return [_number(x.strip(), key, lineno) for x in value.split(",") if x.strip()]
        return _number(value, key, lineno)

    robot_ids = sorted(int(s.split()[1]) for s in sections if s.startswith("robot"))
    n = get(sc, "robots", "int", default=len(robot_ids))
    if robot_ids and robot_ids[-1] >= n:
        raise ScenarioParseError(f"robot {robot_ids[-1]} section but only {n} robots declared")
    seed = get(sc, "seed", "int", default=0)
    kl = get(sc, "kappa_low", default=KAPPA_LOW)
    ku = get(sc, "kappa_up", default=KAPPA_UP)
    robots = draw_robots(seed, n, kl, ku)
    for i in robot_ids:
        sec = sections[f"robot {i}"]
        for key in sec:
            setattr(robots[i], key, get(sec, key))

    pg_sec = sections.get("playground", {})
    playground = Playground(**{k: get(pg_sec, k) for k in pg_sec})

    sch_sec = sections.get("schedule", {})
    ref = paper_schedule()
    duration = get(sch_sec, "duration", default=get(sc, "duration", default=ref.duration))
    schedule = GameSchedule(get(sch_sec, "green_times", "list", ref.green_times),
                            get(sch_sec, "red_times", "list", ref.red_times),
                            duration)

    rows, cols = _grid_shape(n)
    config = ScenarioConfig(
        robots=robots,
        playground=playground,
        schedule=schedule,
        dt=get(sc, "dt", default=SCENARIO_DEFAULTS["dt"]),
        rng_seed=seed,
        move_eps=get(sc, "move_eps", default=SCENARIO_DEFAULTS["move_eps"]),
        slack_weight=get(sc, "slack_weight", default=SCENARIO_DEFAULTS["slack_weight"]),
        cert_tol=get(sc, "cert_tol", default=SCENARIO_DEFAULTS["cert_tol"]),
        start_rows=get(sc, "start_rows", "int", default=rows),
        start_cols=get(sc, "start_cols", "int", default=cols),
        hard_sign=get(sc, "hard_sign", "bool", default=False),
    )
    return config


def parse_scenario(path) -> ScenarioConfig:
    """Read and validate a scenario file."""
    config = parse_text(Path(path).read_text())
    problems = validate_scenario(config)
    if problems:
        raise ConfigurationError("; ".join(problems))
    return config


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def dump_scenario(config: ScenarioConfig) -> str:
    """Serialize every field; :func:`parse_text` inverts this exactly."""
    out = ["[scenario]", f"robots = {len(config.robots)}", f"seed = {config.rng_seed}"]
    for key in ("dt", "move_eps", "slack_weight", "cert_tol"):
        out.append(f"{key} = {_fmt(getattr(config, key))}")
    out.append(f"hard_sign = {_fmt(config.hard_sign)}")
    out.append(f"start_rows = {config.start_rows}")
    out.append(f"start_cols = {config.start_cols}")
    out += ["", "[playground]"]
    for key in _PLAYGROUND_KEYS:
        out.append(f"{key} = {_fmt(getattr(config.playground, key))}")
    s = config.schedule
    out += ["", "[schedule]",
            "green_times = " + ", ".join(_fmt(t) for t in s.green_times),
            "red_times = " + ", ".join(_fmt(t) for t in s.red_times),
            f"duration = {_fmt(s.duration)}"]
    for r in config.robots:
        out += ["", f"[robot {r.id}]"]
        for key in _ROBOT_KEYS:
            out.append(f"{key} = {_fmt(getattr(r, key))}")
    return "\n".join(out) + "\n"
