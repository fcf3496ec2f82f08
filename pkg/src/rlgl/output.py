"""Write a finished run to disk: CSV tables, a JSON safety report and
optional SVG snapshots of the playground."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .game import ELIMINATED, FINISHED, LIVE, SafetyReport, SimulationLog, phase_of
from .model import GameSchedule, Playground

_STATUS_NAME = {LIVE: "live", ELIMINATED: "eliminated", FINISHED: "finished"}


@dataclass
class OutputBundle:
    trajectory: Path
    events: Path
    barriers: Path | None
    report: Path
    frames: list[Path] = field(default_factory=list)


def write_atomic(path: Path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _f(x: float) -> str:
    return repr(float(x))


def trajectory_table(log: SimulationLog) -> str:
    """One row per (step, robot) for robots live at that step."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "robot", "p_x", "p_y", "v_x", "v_y", "u_x", "u_y", "status"])
    for k, t in enumerate(log.times):
        tk = _f(t)
        for i in np.flatnonzero(log.status[k] == LIVE):
            p, v, u = log.p[k, i], log.v[k, i], log.u[k, i]
            w.writerow([tk, i, _f(p[0]), _f(p[1]), _f(v[0]), _f(v[1]),
                        _f(u[0]), _f(u[1]), "live"])
    return buf.getvalue()


def barrier_table(log: SimulationLog) -> str:
    """Every barrier value in force: t, robot, barrier name, value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "robot", "barrier", "value"])
    n = log.n_robots
    for k, t in enumerate(log.times):
        tk = _f(t)
        for i in np.flatnonzero(log.status[k] == LIVE):
            w.writerow([tk, i, "h1x", _f(log.h1[k, i, 0])])
            w.writerow([tk, i, "h1y", _f(log.h1[k, i, 1])])
            for j in range(n):
                if not math.isnan(log.h2[k, i, j]):
                    w.writerow([tk, i, f"h2[{j}]", _f(log.h2[k, i, j])])
            w.writerow([tk, i, "h3x", _f(log.h3[k, i, 0])])
            w.writerow([tk, i, "h3y", _f(log.h3[k, i, 1])])
            for j in range(n):
                if not math.isnan(log.h4[k, i, j]):
                    w.writerow([tk, i, f"h4[{j}]", _f(log.h4[k, i, j])])
    return buf.getvalue()


def events_table(log: SimulationLog) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "robot", "event", "detail"])
    rows = [(e.time, e.robot, e.kind, f"{_f(e.position[0])} {_f(e.position[1])}")
            for e in log.events]
    rows += [(e.time, e.robot, "slack", f"{_f(e.total)} {' '.join(e.sources)}")
             for e in log.slack_events]
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    for t, i, kind, detail in rows:
        w.writerow([_f(t), i, kind, detail])
    return buf.getvalue()


def report_json(report: SafetyReport) -> str:
    data = {
        "certified": report.certified,
        "cert_tol": report.cert_tol,
        "minima": {k: (None if math.isinf(v) else v) for k, v in report.minima.items()},
        "slack_events": report.slack_count,
        "slack_total": report.slack_total,
        "failures": [asdict(f) for f in report.failures],
    }
    return json.dumps(data, indent=2) + "\n"


def frame_svg(log: SimulationLog, k: int, playground: Playground,
              schedule: GameSchedule, scale: float = 20.0) -> str:
    """Snapshot of step ``k``: walls colored by phase, live robots as
    circles, eliminated robots as gray squares, finish line dashed."""
    pg = playground
    pad = 10
    W = pg.l_x * scale + 2 * pad
    H = pg.l_y * scale + 2 * pad

    def sx(x):
        return pad + x * scale

    def sy(y):
        return pad + (pg.l_y - y) * scale

    t = float(log.times[k])
    wall = "#d62728" if phase_of(t, schedule).red else "#2ca02c"
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" '
           f'viewBox="0 0 {W:.1f} {H:.1f}">',
           f'<rect x="{sx(0):.2f}" y="{sy(pg.l_y):.2f}" width="{pg.l_x * scale:.2f}" '
           f'height="{pg.l_y * scale:.2f}" fill="white" stroke="{wall}" stroke-width="4"/>',
           f'<line x1="{sx(0):.2f}" y1="{sy(pg.g_y):.2f}" x2="{sx(pg.l_x):.2f}" '
           f'y2="{sy(pg.g_y):.2f}" stroke="black" stroke-dasharray="6,4"/>',
           f'<text x="{pad + 4}" y="{pad + 14}" font-size="12">t = {t:.2f} s</text>']
    r = pg.r0 * scale
    for i in range(log.n_robots):
        st = log.status[k, i]
        x, y = log.p[k, i]
        if st == LIVE:
            out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="{r:.2f}" '
                       f'fill="#1f77b4" fill-opacity="0.6" stroke="#1f77b4"/>')
        elif st == ELIMINATED:
            out.append(f'<rect x="{sx(x) - r:.2f}" y="{sy(y) - r:.2f}" width="{2 * r:.2f}" '
                       f'height="{2 * r:.2f}" fill="gray"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit(log: SimulationLog, report: SafetyReport, out_dir, playground: Playground,
         schedule: GameSchedule, frame_every: int | None = None,
         barriers: bool = True) -> OutputBundle:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create output directory {out}: {err}") from err
    bundle = OutputBundle(out / "trajectory.csv", out / "events.csv",
                          out / "barriers.csv" if barriers else None,
                          out / "safety_report.json")
    write_atomic(bundle.trajectory, trajectory_table(log))
    write_atomic(bundle.events, events_table(log))
    if barriers:
        write_atomic(bundle.barriers, barrier_table(log))
    write_atomic(bundle.report, report_json(report))
    if frame_every:
        frames = out / "frames"
        frames.mkdir(exist_ok=True)
        for k in range(0, len(log.times), frame_every):
            path = frames / f"frame_{k:06d}.svg"
            write_atomic(path, frame_svg(log, k, playground, schedule))
            bundle.frames.append(path)
    return bundle
