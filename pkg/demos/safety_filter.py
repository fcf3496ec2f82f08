"""What the safety filter does to a single command.

Run:  python3 demos/safety_filter.py

The filter returns the input closest to the nominal one that satisfies every
barrier row a.u <= b and the actuator box |u_m| <= U. When the rows cannot all
hold inside the box, they are softened with a heavy quadratic penalty.
"""
import numpy as np

from rlgl.barriers import assemble
from rlgl.model import Playground, RobotParams, RobotState
from rlgl.qp import QpProblem, feasible_polygon, solve, verify_kkt

U = 0.5

# 1. Nothing in the way: the nominal input passes through untouched.
sol = solve(QpProblem((0.0, 0.3), np.zeros((0, 2)), np.zeros(0), U))
print("no rows           ->", sol.u_star)

# 2. One half-plane u_y <= 0.1: projection, with multiplier 2 * (0.3 - 0.1).
pr = QpProblem((0.0, 0.3), [[0.0, 1.0]], [0.1], U)
sol = solve(pr)
print("u_y <= 0.1        ->", sol.u_star, "multiplier", sol.multipliers[0],
      "KKT worst", verify_kkt(pr, sol).worst)

# 3. A row the box cannot satisfy: u_y <= -10. The box stays hard, the row gives.
pr = QpProblem((0.0, 0.0), [[0.0, 1.0]], [-10.0], U)
sol = solve(pr)
print("u_y <= -10        ->", sol.u_star, "slack", sol.slack,
      "feasible region vertices", len(feasible_polygon(pr.A, pr.b, U)))

# 4. A real situation: robot 0 drives up the field toward robot 1, which
#    stands still 0.8 m ahead. The pairwise row caps its forward thrust.
params = [RobotParams(i, 2.0, 0.4, 0.1, 0.0141, 0.2368, 1.2) for i in range(2)]
states = [RobotState((2.5, 10.0), (0.0, 1.0)), RobotState((2.5, 10.8), (0.0, 0.0))]
rows, snap = assemble(0, states, params, Playground())
pr = QpProblem.from_rows((0.0, 0.4), rows, 0.4)
sol = solve(pr)
print("approaching robot ->", sol.u_star, "active rows",
      [rows[k].label for k in sol.active_set], "h2 =", snap.h2[1])
