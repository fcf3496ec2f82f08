"""Command-line runner.

Exit status: 0 when the run certifies, 2 when a barrier is violated beyond
the certification tolerance, 1 on configuration or runtime errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time

from .barriers import DegenerateGeometryError
from .game import certify, run
from .model import ConfigurationError, validate_scenario
from .output import emit
from .scenario_io import ScenarioParseError, generate_paper_scenario, parse_scenario

log = logging.getLogger("rlgl")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rlgl", description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", metavar="PATH", help="scenario file")
    src.add_argument("--paper-scenario", action="store_true",
                     help="22-robot reference game drawn from --seed")
    ap.add_argument("--seed", type=int, default=None,
                    help="parameter seed (overrides the scenario file)")
    ap.add_argument("--dt", type=float, default=None, help="integration step in s")
    ap.add_argument("--duration", type=float, default=None, help="simulated time in s")
    ap.add_argument("--out", default="rlgl_out", help="output directory")
    frames = ap.add_mutually_exclusive_group()
    frames.add_argument("--frames", type=int, metavar="N", default=None,
                        help="write an SVG frame every N steps")
    frames.add_argument("--no-frames", action="store_true", help="write no frames")
    ap.add_argument("--no-barrier-table", action="store_true",
                    help="skip the (large) per-barrier table")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        if args.paper_scenario:
            config = generate_paper_scenario(0 if args.seed is None else args.seed)
        else:
            config = parse_scenario(args.scenario)
            if args.seed is not None and args.seed != config.rng_seed:
                log.warning("--seed only affects generated scenarios; "
                            "parameters in the file are kept")
        if args.dt is not None:
            config.dt = args.dt
        if args.duration is not None:
            config.schedule.duration = args.duration
        problems = validate_scenario(config)
        if problems:
            raise ConfigurationError("; ".join(problems))

        t0 = time.perf_counter()
        sim = run(config)
        log.info("simulated %.1f s in %.1f s wall", config.schedule.duration,
                 time.perf_counter() - t0)
        report = certify(sim, config.cert_tol)
        frame_every = None if args.no_frames else args.frames
        bundle = emit(sim, report, args.out, config.playground, config.schedule,
                      frame_every=frame_every, barriers=not args.no_barrier_table)
    except (ConfigurationError, ScenarioParseError, DegenerateGeometryError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1

    status = "certified" if report.certified else f"{len(report.failures)} certification failures"
    print(f"{status}; {report.slack_count} slack events; output in {bundle.report.parent}")
    return 0 if report.certified else 2


if __name__ == "__main__":
    sys.exit(main())
