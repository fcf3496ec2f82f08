import copy
import math

import numpy as np
import pytest

from rlgl.barriers import DegenerateGeometryError, ParamArrays, build_rows
from rlgl.game import (ELIMINATED, FINISHED, LIVE, PhaseKind, certify, detect_violation,
                       phase_of, referee_step, run)
from rlgl.model import (GameSchedule, Playground, RobotParams, RobotState, ScenarioConfig,
                        Status)
from rlgl.scenario_io import paper_schedule

KL, KU = 0.0141, 0.2368


def params(i=0, **kw):
    base = dict(id=i, v_max=2.0, u_max=0.4, kappa_true=0.1, kappa_low=KL,
                kappa_up=KU, eta=1.2)
    base.update(kw)
    return RobotParams(**base)


def single(duration=80.0, **kw):
    return ScenarioConfig([params(**kw)], schedule=GameSchedule(
        paper_schedule().green_times, paper_schedule().red_times, duration))


@pytest.mark.parametrize("t,kind,k", [(0.0, PhaseKind.GREEN, 1), (7.0, PhaseKind.RED, 1),
                                      (8.0, PhaseKind.GREEN, 2), (6.99, PhaseKind.GREEN, 1),
                                      (7.99, PhaseKind.RED, 1), (70.0, PhaseKind.GREEN, 9),
                                      (700 * 0.01, PhaseKind.RED, 1)])
def test_phase_of(t, kind, k):
    ph = phase_of(t, paper_schedule())
    assert ph.kind is kind and ph.k == k


def test_detect_violation():
    red, green = phase_of(7.0, paper_schedule()), phase_of(0.0, paper_schedule())
    assert not detect_violation(RobotState((0, 0), (0, 0)), red, 0.01)
    assert not detect_violation(RobotState((0, 0), (0, 2)), green, 0.01)
    assert detect_violation(RobotState((0, 0), (0, 0.1)), red, 0.01)
    assert not detect_violation(RobotState((0, 0), (0.006, 0.008)), red, 0.01)


def test_referee_quiet_when_compliant():
    states = [RobotState((1, 1), (0, 0.5)), RobotState((2, 1), (0, 0))]
    new, events = referee_step(3.0, states, paper_schedule(), Playground(), 0.01)
    assert events == [] and all(a is b for a, b in zip(new, states))


def test_referee_freezes_violator():
    states = [RobotState((1, 3), (0.05, 0.2)), RobotState((2, 1), (0, 0))]
    new, events = referee_step(7.0, states, paper_schedule(), Playground(), 0.01)
    assert [(e.robot, e.kind) for e in events] == [(0, "eliminated")]
    assert new[0].status is Status.ELIMINATED and new[0].status_time == 7.0
    assert np.array_equal(new[0].p, [1, 3]) and np.array_equal(new[0].v, [0, 0])
    assert new[1] is states[1]


def test_referee_finish_line():
    states = [RobotState((1, 25.0), (0, 1.0))]
    new, events = referee_step(3.0, states, paper_schedule(), Playground(g_y=25), 0.01)
    assert new[0].status is Status.FINISHED and events[0].kind == "finished"


def test_referee_ignores_robots_out_of_game():
    states = [RobotState((1, 3), (0, 0), Status.ELIMINATED, 7.0),
              RobotState((1, 30), (0, 1), Status.FINISHED, 5.0)]
    new, events = referee_step(7.5, states, paper_schedule(), Playground(), 0.01)
    assert events == [] and new == states


def test_too_fast_at_first_red_is_eliminated_at_that_step():
    """Red comes before the robot can possibly stop."""
    cfg = single(duration=3.0)
    cfg.schedule = GameSchedule([0.0, 2.0], [0.5, math.inf], 3.0)
    log = run(cfg, initial=[RobotState((2.5, 2.0), (0.0, 1.5))])
    (ev,) = log.events
    assert ev.kind == "eliminated" and ev.time == pytest.approx(0.5)
    k = int(round(0.5 / cfg.dt))
    assert log.status[k - 1, 0] == LIVE and log.status[k, 0] == ELIMINATED
    assert np.all(log.p[k:, 0] == log.p[k, 0])
    assert np.all(log.v[k:, 0] == 0)
    assert np.array_equal(ev.position, log.p[k, 0])


def test_single_robot_finishes_safely():
    cfg = single()
    log = run(cfg)
    assert len(log.times) == cfg.n_steps + 1
    assert np.allclose(np.diff(log.times), cfg.dt)
    kinds = [e.kind for e in log.events]
    assert kinds == ["finished"]
    report = certify(log, 1e-6)
    assert report.certified and report.slack_count == 0
    assert report.minima["playground"] >= 0 and report.minima["velocity"] >= 0
    live = log.status[:, 0] == LIVE
    assert np.all(log.h1[live] >= 0)


def test_no_robots_gives_empty_certified_log():
    cfg = ScenarioConfig([], schedule=paper_schedule())
    log = run(cfg)
    assert log.p.shape == (cfg.n_steps + 1, 0, 2)
    report = certify(log)
    assert report.certified and report.slack_count == 0


def test_reference_run_shape(paper_run):
    cfg, log, report, _ = paper_run
    assert log.p.shape == (8001, 22, 2)
    assert log.times[-1] == pytest.approx(80.0)
    assert np.all(np.isfinite(log.p)) and np.all(np.isfinite(log.v))


def test_run_is_deterministic():
    cfg = single(duration=20.0)
    a, b = run(cfg), run(copy.deepcopy(cfg))
    for name in ("p", "v", "u", "u_nominal", "status"):
        assert np.array_equal(getattr(a, name), getattr(b, name), equal_nan=name != "status")


def test_status_never_reverts(paper_run):
    _, log, _, _ = paper_run
    s = log.status.astype(int)
    changed = s[1:] != s[:-1]
    assert np.all(s[:-1][changed] == LIVE)
    assert set(np.unique(s[1:][changed])) <= {ELIMINATED, FINISHED}


def test_obstacles_enter_every_live_assembly_from_the_next_step(paper_run):
    _, log, _, _ = paper_run
    elim = [e for e in log.events if e.kind == "eliminated"]
    assert elim
    for e in elim:
        k = int(round(e.time / 0.01))
        live_after = log.status[k:] == LIVE
        col = log.h4[k:, :, e.robot]
        assert np.all(np.isfinite(col[live_after]))
        assert np.all(np.isnan(col[~live_after]))
        assert np.all(np.isnan(log.h4[:k, :, e.robot]))


def test_brake_latch_in_log(paper_run):
    _, log, _, _ = paper_run
    sched = paper_schedule()
    for i in range(22):
        for k, tg in enumerate(sched.green_times[:-1]):
            lo = int(round(tg / 0.01))
            hi = int(round(sched.green_times[k + 1] / 0.01))
            live = log.status[lo:hi, i] == LIVE
            b = log.brake[lo:hi, i][live]
            assert not np.any(b[:-1] & ~b[1:])


def test_certify_flags_corrupted_pair():
    log = run(ScenarioConfig([params(0), params(1)], schedule=GameSchedule([0.0], [math.inf], 1.0),
                             start_cols=2))
    assert certify(log).certified
    bad = copy.deepcopy(log)
    bad.h2[40, 0, 1] = bad.h2[40, 1, 0] = -0.01
    report = certify(bad, 1e-6)
    assert len(report.failures) == 1
    f = report.failures[0]
    assert (f.robot, f.other) == (0, 1) and "h2" in f.barrier
    assert f.time == pytest.approx(0.4) and f.value == -0.01
    assert report.minima["pairwise"] == -0.01


def test_minima_match_recomputation(paper_run):
    cfg, log, report, _ = paper_run
    par = ParamArrays.from_params(cfg.robots)
    mins = {"playground": np.inf, "pairwise": np.inf, "velocity": np.inf, "obstacle": np.inf}
    for k in range(0, len(log.times)):
        live = log.status[k] == LIVE
        dead = log.status[k] == ELIMINATED
        if not live.any():
            continue
        P = log.p[k]
        V = log.v[k]
        # independent evaluation straight from the raw states
        c = np.array([cfg.playground.l_x, cfg.playground.l_y]) / 2
        half = c - cfg.playground.margin
        mins["playground"] = min(mins["playground"], (half ** 2 - (P[live] - c) ** 2).min())
        mins["velocity"] = min(mins["velocity"], (par.v_max[live, None] ** 2 - V[live] ** 2).min())
        L = P[live]
        if len(L) > 1:
            d = np.hypot(*(L[:, None] - L[None]).transpose(2, 0, 1))
            d[np.diag_indices(len(L))] = np.inf
            mins["pairwise"] = min(mins["pairwise"], d.min() - cfg.playground.d0)
        if dead.any():
            d = np.hypot(*(L[:, None] - P[dead][None]).transpose(2, 0, 1))
            mins["obstacle"] = min(mins["obstacle"], d.min() - cfg.playground.d0)
    for fam, val in mins.items():
        assert abs(report.minima[fam] - val) <= 1e-12 * max(1, abs(val)), fam


def test_coincident_start_aborts_with_partial_log():
    cfg = ScenarioConfig([params(0), params(1)], schedule=GameSchedule([0.0], [math.inf], 1.0),
                         start_cols=2)
    with pytest.raises(DegenerateGeometryError) as err:
        run(cfg, initial=[RobotState((1, 1), (0, 0)), RobotState((1, 1), (0, 0))])
    assert err.value.log is not None and len(err.value.log.times) == 0
