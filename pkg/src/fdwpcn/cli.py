"""Command line front end.

    fdwpcn generate --config cfg.json --seed 7 --out net.json
    fdwpcn solve net.json --algorithm mfsa --out sched.json
    fdwpcn solve net.json --algorithm ptap --order 3,1,2
    fdwpcn verify net.json sched.json
    fdwpcn sweep --config sweep.json --out results/pmax --jobs 4

Exit codes: 0 success (and feasible schedule), 1 invalid input or
configuration, 2 solver failure or infeasible schedule.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import exhaustive, ptap, verifier
from .channel import NetworkInstance, generate
from .config import ConfigError, load_experiment, read_json
from .harness import run_sweep, sweep_from_dict
from .model import (
    evaluate,
    harvest_rate,
    max_rate,
    schedule_from_dict,
    schedule_to_dict,
    snr_coefficient,
    user_map,
)
from .schedulers import eta, mfsa

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2
ALGORITHMS = ("mfsa", "eta", "opt", "ptap")


class InputError(ValueError):
    pass


def _load_instance(path) -> NetworkInstance:
    try:
        return NetworkInstance.load(path)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: cannot read network instance ({exc})") from None


def _parse_order(text: str, inst: NetworkInstance) -> list[int]:
    try:
        order = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--order: expected comma-separated user ids, got {text!r}") from None
    ids = sorted(u.id for u in inst.users)
    if sorted(order) != ids:
        raise InputError(f"--order: must be a permutation of the user ids {ids}")
    return order


def cmd_generate(args) -> int:
    cfg = load_experiment(args.config)
    seed = args.seed if args.seed is not None else 1
    inst = generate(cfg.topology, cfg.system, cfg.path_loss, seed)
    if args.out:
        inst.save(args.out)
    print(f"network: {len(inst.users)} users, seed {seed}")
    print(f"{'user':>4} {'C [W]':>12} {'k [1/W]':>12} {'r_max [bit/s]':>14}")
    for u in inst.users:
        print(f"{u.id:>4} {harvest_rate(u, inst.sys):12.4e} {snr_coefficient(u, inst.sys):12.4e} "
              f"{max_rate(u, inst.sys):14.6g}")
    if args.out:
        print(f"wrote {args.out}")
    return EXIT_OK


def _solve(inst: NetworkInstance, algorithm: str, order: list[int] | None, tol: float):
    users, sys_ = inst.users, inst.sys
    if algorithm == "mfsa":
        return mfsa(users, sys_)
    if algorithm == "eta":
        return eta(users, sys_)
    if algorithm == "opt":
        return exhaustive.solve_opt(users, sys_, tol)
    by_id = user_map(users)
    sol = ptap.solve(ptap.PtapInstance([by_id[i] for i in order], sys_), tol)
    schedule = ptap.to_schedule(sol)
    return schedule, evaluate(schedule, users, sys_)


def _print_schedule(schedule, report, inst: NetworkInstance):
    rates = dict(report.per_user_rate)
    print(f"{'user':>4} {'start':>10} {'tau':>10} {'power [W]':>12} {'bits':>14}")
    start = schedule.idle_prefix
    for s in schedule.slots:
        print(f"{s.user_id:>4} {start:10.6f} {s.tau:10.6f} {s.power:12.6e} {rates[s.user_id]:14.6g}")
        start += s.tau
    print(f"sum throughput: {report.sum_throughput:.9g} bits/frame")


def _print_findings(schedule, inst: NetworkInstance, tol: float, advisory: bool) -> bool:
    violations = verifier.check_feasible(schedule, inst.users, inst.sys, tol)
    if violations:
        for v in violations:
            who = "" if v.user_id is None else f" user {v.user_id}"
            print(f"VIOLATION {v.constraint}{who}: {v.magnitude:.6g}")
        return False
    print("feasible: yes")
    conds = verifier.check_optimality_conditions(schedule, inst.users, inst.sys)
    note = " (advisory for heuristics)" if advisory else ""
    for c in conds.conditions:
        mark = "ok" if c.passed else "FAIL"
        print(f"  {c.name}: {mark}{note if not c.passed else ''} {c.detail}".rstrip())
    return True


def cmd_solve(args) -> int:
    inst = _load_instance(args.instance)
    order = None
    if args.algorithm == "ptap":
        if not args.order:
            raise InputError("--order: required with --algorithm ptap")
        order = _parse_order(args.order, inst)
    elif args.order:
        raise InputError("--order: only valid with --algorithm ptap")
    if args.algorithm == "opt":
        exhaustive.order_count(len(inst.users), exhaustive.DEFAULT_CAP)
    schedule, report = _solve(inst, args.algorithm, order, args.tol)
    _print_schedule(schedule, report, inst)
    feasible = _print_findings(schedule, inst, verifier.FEASIBILITY_TOL, args.algorithm in ("mfsa", "eta"))
    if args.out:
        doc = {"algorithm": args.algorithm, **schedule_to_dict(schedule),
               "sum_throughput": report.sum_throughput, "feasible": feasible}
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
        print(f"wrote {args.out}")
    return EXIT_OK if feasible else EXIT_FAILED


def cmd_verify(args) -> int:
    inst = _load_instance(args.instance)
    try:
        schedule = schedule_from_dict(read_json(args.schedule))
    except OSError as exc:
        raise InputError(f"{args.schedule}: {exc}") from None
    try:
        report = evaluate(schedule, inst.users, inst.sys)
    except (KeyError, ValueError) as exc:
        raise InputError(f"{args.schedule}: {exc}") from None
    _print_schedule(schedule, report, inst)
    ok = _print_findings(schedule, inst, args.tol if args.tol is not None else verifier.FEASIBILITY_TOL,
                         advisory=True)
    return EXIT_OK if ok else EXIT_FAILED


def cmd_sweep(args) -> int:
    raw = read_json(args.config)
    if args.seed is not None or args.tol is not None:
        raw = dict(raw)
        sweep = dict(raw.get("sweep") or {})
        if args.seed is not None:
            sweep["seed"] = args.seed
        if args.tol is not None:
            sweep["tol"] = args.tol
        raw["sweep"] = sweep
    spec = sweep_from_dict(raw)

    def progress(gi, value, means):
        cells = ", ".join(f"{a} {m:.6g}" for a, m in means.items())
        print(f"[{gi + 1}/{len(spec.grid)}] {spec.parameter}={value}: {cells}", flush=True)

    result = run_sweep(spec, jobs=args.jobs, progress=progress)
    csv_path, json_path = result.write(args.out)
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fdwpcn", description="Throughput-maximizing schedules for "
                                "full-duplex wireless powered networks.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a random network instance")
    g.add_argument("--config", required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="schedule a network instance")
    s.add_argument("instance")
    s.add_argument("--algorithm", choices=ALGORITHMS, default="mfsa")
    s.add_argument("--order", help="comma-separated user ids (ptap only)")
    s.add_argument("--tol", type=float, default=ptap.DEFAULT_PTAP_TOL)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="audit a schedule file against an instance")
    v.add_argument("instance")
    v.add_argument("schedule")
    v.add_argument("--tol", type=float)
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("sweep", help="run a Monte Carlo parameter sweep")
    w.add_argument("--config", required=True)
    w.add_argument("--out", required=True, help="output prefix for .csv and .json")
    w.add_argument("--seed", type=int)
    w.add_argument("--tol", type=float)
    w.add_argument("--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputError, exhaustive.InstanceTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ptap.PtapError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
