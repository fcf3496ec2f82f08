"""Play the 22-robot reference game and look at who survived.

Run:  python3 demos/reference_game.py [seed] [out_dir]

Robots start at rest in two rows of eleven. Every 8 s the doll calls green
for 7 s, then red for 1 s; anyone still moving on red is frozen in place and
becomes an obstacle for the rest. After the last red the light stays green.
"""
import sys
import time

import numpy as np

from rlgl.game import ELIMINATED, FINISHED, certify, run
from rlgl.output import emit
from rlgl.scenario_io import generate_paper_scenario

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 42
out = sys.argv[2] if len(sys.argv) > 2 else "reference_game_out"

config = generate_paper_scenario(seed)
print(f"seed {seed}: {len(config.robots)} robots, {config.schedule.duration:.0f} s game")
for r in config.robots[:3]:
    print(f"  robot {r.id}: V={r.v_max:.2f} U={r.u_max:.2f} eta={r.eta:.2f} kappa={r.kappa_true:.4f}")
print("  ...")

t0 = time.perf_counter()
log = run(config)
print(f"simulated in {time.perf_counter() - t0:.1f} s")

# Referee decisions, in order.
for e in log.events:
    if e.kind == "eliminated":
        print(f"  t={e.time:5.2f}  robot {e.robot:2d} caught moving, frozen at "
              f"({e.position[0]:.2f}, {e.position[1]:.2f})")
final = log.status[-1]
print(f"finished {int((final == FINISHED).sum())}, eliminated {int((final == ELIMINATED).sum())}")

# Did the safety filter keep every barrier nonnegative?
report = certify(log, config.cert_tol)
for family, value in report.minima.items():
    print(f"  min {family:10s} barrier {value: .3e}")
print("certified" if report.certified else f"{len(report.failures)} failures",
      f"| {report.slack_count} softened QPs")
if report.slack_count:
    first = log.slack_events[0]
    print(f"  first softened QP: robot {first.robot} at t={first.time:.2f}, rows {first.sources}")

# Closest approach between two live robots over the whole game.
print(f"closest approach {np.nanmin(log.h2) + log.d0:.4f} m (d0 = {log.d0} m)")

bundle = emit(log, report, out, config.playground, config.schedule, frame_every=100)
print(f"tables and {len(bundle.frames)} SVG frames in {out}/")
