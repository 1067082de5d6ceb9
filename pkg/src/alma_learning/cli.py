"""Command line entry point: ``alma-learning {gen,run,oracle,report,meetings}``."""

import argparse
import json
import sys

import numpy as np

from .baselines import brute_force, hungarian
from .core import AssignmentInstance, RunConfig, save_instance
from .generators import FAMILIES, GeneratorSpec, generate
from .harness import (ExperimentSpec, aggregate, read_csv_rows, report_csv,
                      report_json, rows_to_csv, run_experiment, stable_seed)
from .meetings import (brute_force_schedule, generate_meeting_instance, greedy_meetings, msrac,
                       save_meeting_instance, schedule_with_alma, validate_schedule)


def _write_or_print(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_gen(args):
    if args.family == "meetings":
        inst = generate_meeting_instance(args.n, args.participants, args.days, args.slots,
                                         seed=args.seed)
        if args.out:
            save_meeting_instance(inst, args.out)
        else:
            print(json.dumps(inst.to_dict()))
        return 0
    inst = generate(GeneratorSpec(args.family, args.n, sigma=args.sigma, p_one=args.p_one,
                                  seed=args.seed))
    if args.out:
        save_instance(inst, args.out)
    else:
        print(json.dumps(inst.to_dict()))
    return 0


def cmd_run(args):
    spec = ExperimentSpec.from_json(args.config)
    if args.seed is not None:
        spec.seed = args.seed
    report = run_experiment(spec, threads=args.threads)
    out = args.out or spec.output
    if out:
        report_csv(report, out)
    else:
        sys.stdout.write(rows_to_csv(report.rows))
    if args.json:
        report_json(report, args.json)
    if report.n_anomalies:
        print(f"warning: {report.n_anomalies} stage games hit the round cap", file=sys.stderr)
        if args.strict:
            return 2
    return 0


def cmd_oracle(args):
    """Compare the exact matching with exhaustive search on random instances."""
    mismatches = 0
    for i in range(args.count):
        seed = stable_seed(args.seed, "oracle", args.n, i)
        rng = np.random.default_rng(seed)
        inst = AssignmentInstance(rng.random((args.n, args.n)))
        a, b = hungarian(inst).social_welfare, brute_force(inst).social_welfare
        if abs(a - b) > 1e-9:
            mismatches += 1
            print(f"instance {i}: hungarian {a!r} != brute force {b!r}")
    print(f"n={args.n}: {args.count - mismatches}/{args.count} instances agree")
    return 1 if mismatches else 0


def cmd_report(args):
    rows = read_csv_rows(args.input)
    text = json.dumps(aggregate(rows), indent=1, sort_keys=True) + "\n"
    _write_or_print(text, args.out)
    return 0


def cmd_meetings(args):
    inst = generate_meeting_instance(args.events, args.participants, args.days, args.slots,
                                     seed=args.seed)
    cfg = RunConfig(seed=args.seed, training_steps=args.training_steps)
    results = {
        "greedy": greedy_meetings(inst, args.seed),
        "msrac": msrac(inst),
        "alma": schedule_with_alma(inst, False, cfg).schedule,
    }
    learned = schedule_with_alma(inst, True, cfg)
    results["alma_learning"] = learned.schedules[0]
    if args.oracle:
        results["brute_force"] = brute_force_schedule(inst)
    lines = ["algorithm,sw,scheduled,valid"]
    bad = 0
    for name, sched in results.items():
        problem = validate_schedule(inst, sched)
        bad += problem is not None or sched.anomaly
        lines.append(f"{name},{sched.social_welfare!r},{sched.n_scheduled},{problem is None}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 2 if (bad and args.strict) else 0


def build_parser():
    p = argparse.ArgumentParser(prog="alma-learning", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a generated instance as JSON")
    g.add_argument("--family", choices=FAMILIES + ("meetings",), default="map")
    g.add_argument("--n", type=int, default=8, help="agents = resources, or events for meetings")
    g.add_argument("--sigma", type=float, default=0.1)
    g.add_argument("--p-one", type=float, default=0.5)
    g.add_argument("--participants", type=int, default=20)
    g.add_argument("--days", type=int, default=7)
    g.add_argument("--slots", type=int, default=24)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run an experiment described by a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int, help="override the master seed")
    r.add_argument("--out", help="CSV output path (default: stdout)")
    r.add_argument("--json", help="also write rows and aggregates as JSON")
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--strict", action="store_true", help="exit nonzero on any stage-game anomaly")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", help="check the exact solver against exhaustive search")
    o.add_argument("--n", type=int, default=6)
    o.add_argument("--count", type=int, default=100)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=cmd_oracle)

    a = sub.add_parser("report", help="re-aggregate a CSV report to mean/SD JSON")
    a.add_argument("--in", dest="input", required=True)
    a.add_argument("--out")
    a.set_defaults(func=cmd_report)

    m = sub.add_parser("meetings", help="schedule one generated meeting instance with every method")
    m.add_argument("--events", type=int, default=10)
    m.add_argument("--participants", type=int, default=20)
    m.add_argument("--days", type=int, default=7)
    m.add_argument("--slots", type=int, default=24)
    m.add_argument("--training-steps", type=int, default=512)
    m.add_argument("--oracle", action="store_true", help="also run the exhaustive scheduler")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out")
    m.add_argument("--strict", action="store_true")
    m.set_defaults(func=cmd_meetings)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
