"""Command-line front end: ``lp``, ``solve``, ``verify``, ``oracle``, ``gen``, ``bench``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from .activity_logger import log_run_action
from .app_info import APP_NAME, APP_VERSION, RELEASE_DATE
from .configlp import LpNumericsError, clp_feasible, opt_lp, opt_lp_search
from .core import (
    VARIANT_CHOICES,
    GuardExceeded,
    Instance,
    InstanceError,
    IterationCapExceeded,
    PartialSchedule,
    ScheduleError,
    VariantPreconditionError,
    job_classes,
    load_within_bound,
    resolve_variant,
)
from .instance_io import dump_instance, load_instance, load_schedule, read_json, save_schedule, write_json
from .localsearch import (
    GuaranteeViolation,
    InvariantViolation,
    SearchContractError,
    StuckAtFeasibleTarget,
    solve,
)
from .logging_utils import setup_logging
from .progress import Progress
from .run_report import RunReport
from .solver_config import SolverConfig, load_solver_config
from .toolkit import GENERATOR_KINDS, GenSpec, brute_force_opt, generate
from .trace import TraceRecorder

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_GUARD = 3
EXIT_INTERNAL = 4

BENCH_COLUMNS = [
    "seed",
    "n",
    "m",
    "T",
    "makespan",
    "ratio_num",
    "ratio_den",
    "events",
    "time_ms",
    "opt",
    "variant",
    "status",
]
BENCH_ORACLE_MAX_JOBS = 10


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_lp(args: argparse.Namespace, config: SolverConfig) -> int:
    instance = load_instance(args.instance)
    search = opt_lp_search(instance, config=config)
    print(f"OPT_LP {search.value}")
    print("T\tfeasible")
    for T, feasible in search.probes:
        print(f"{T}\t{'yes' if feasible else 'no'}")
    if args.columns and instance.job_count:
        verdict = clp_feasible(instance, search.value, config=config)
        print(json.dumps(verdict.to_mapping(include_columns=True), indent=2))
    log_run_action("LP bound computed", details={"instance": str(args.instance), "OPT_LP": search.value, "probes": search.probes})
    return EXIT_OK


def cmd_solve(args: argparse.Namespace, config: SolverConfig) -> int:
    instance = load_instance(args.instance)
    started = time.perf_counter()
    recorder = TraceRecorder(args.trace, keep=False) if args.trace else None
    try:
        result = solve(instance, args.variant, config=config, recorder=recorder)
    except StuckAtFeasibleTarget as exc:
        report = RunReport.from_stuck(instance, exc, (time.perf_counter() - started) * 1000)
        if args.report:
            write_json(report.to_mapping(), args.report)
        log_run_action("Solve stuck at feasible T", details={"instance": str(args.instance)}, snapshot=report.to_mapping(), level=logging.ERROR)
        raise
    finally:
        if recorder is not None:
            recorder.close()

    report = RunReport.from_result(instance, result, (time.perf_counter() - started) * 1000)
    if args.out:
        save_schedule(result.schedule, args.out)
    else:
        print(json.dumps(result.schedule.to_mapping()))
    if args.report:
        write_json(report.to_mapping(), args.report)
    print(
        f"makespan {result.makespan} T {result.T} ratio {result.ratio_num}/{result.ratio_den} "
        f"variant {result.variant.name} events {result.iterations}",
        file=sys.stderr,
    )
    log_run_action("Instance solved", details={"instance": str(args.instance)}, snapshot=report.to_mapping())
    return EXIT_OK


def verify_assignment(
    instance: Instance,
    assignment: Sequence[Optional[int]],
    T: int,
    variant: str = "auto",
) -> List[str]:
    """Return the reasons why *assignment* is not a valid schedule at *T* (empty if valid)."""

    if len(assignment) != instance.job_count:
        return [f"assignment lists {len(assignment)} jobs, instance has {instance.job_count}"]
    problems: List[str] = []
    for job, machine in enumerate(assignment):
        if machine is None:
            problems.append(f"job {job} is unassigned")
        elif not 0 <= machine < instance.machine_count:
            problems.append(f"job {job} assigned to unknown machine {machine}")
        elif machine not in instance.jobs[job].eligible:
            problems.append(f"job {job} is not eligible on machine {machine}")
    if problems:
        return problems

    resolved = resolve_variant(instance, T, variant)
    schedule = PartialSchedule.from_assignment(instance, assignment)
    classes = job_classes(instance, T, resolved)
    for machine in range(instance.machine_count):
        load = schedule.load(machine)
        if not load_within_bound(load, T, resolved):
            problems.append(f"machine {machine} load {load} exceeds the {resolved.name} bound at T={T}")
        big = [job for job in schedule.jobs_on(machine) if classes[job].is_big]
        if len(big) > 1:
            problems.append(f"machine {machine} carries {len(big)} big jobs {big}")
    return problems


def cmd_verify(args: argparse.Namespace, config: SolverConfig) -> int:
    instance = load_instance(args.instance)
    stored = load_schedule(args.schedule)
    problems = verify_assignment(instance, stored.assignment, args.T, args.variant)
    if problems:
        print("invalid")
        for problem in problems:
            print(f"  - {problem}")
        log_run_action("Schedule rejected", details={"schedule": str(args.schedule), "problems": problems}, level=logging.WARNING)
        return EXIT_INVALID
    print("valid")
    log_run_action("Schedule accepted", details={"schedule": str(args.schedule), "T": args.T})
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace, config: SolverConfig) -> int:
    instance = load_instance(args.instance)
    optimum = brute_force_opt(instance)
    bound = opt_lp(instance, config=config)
    gap = Fraction(optimum, bound) if bound else Fraction(1)
    print(f"OPT {optimum}")
    print(f"OPT_LP {bound}")
    print(f"gap {gap.numerator}/{gap.denominator}")
    log_run_action("Oracle", details={"instance": str(args.instance), "OPT": optimum, "OPT_LP": bound, "gap": str(gap)})
    return EXIT_OK


def _spec_from_args(args: argparse.Namespace) -> GenSpec:
    if getattr(args, "spec", None):
        return GenSpec.from_mapping(read_json(args.spec))
    return GenSpec(
        machines=args.machines,
        jobs=args.jobs,
        size_min=args.size_min,
        size_max=args.size_max,
        density=args.density,
        seed=args.seed,
        kind=args.kind,
        small_size=args.small_size,
        big_size=args.big_size,
        small_count=args.small_count,
        big_count=args.big_count,
    )


def cmd_gen(args: argparse.Namespace, config: SolverConfig) -> int:
    spec = _spec_from_args(args)
    instance = generate(spec)
    if args.out:
        dump_instance(instance, args.out)
    else:
        print(json.dumps(instance.to_mapping()))
    log_run_action("Instance generated", details={"out": str(args.out or "stdout")}, snapshot=spec.to_mapping())
    return EXIT_OK


def bench_row(spec_data: Dict[str, Any], config: SolverConfig) -> Dict[str, Any]:
    """Generate, solve and (when small) brute-force one corpus instance."""

    spec = GenSpec.from_mapping(spec_data)
    instance = generate(spec)
    row: Dict[str, Any] = {column: None for column in BENCH_COLUMNS}
    row.update(seed=spec.seed, n=instance.job_count, m=instance.machine_count)
    started = time.perf_counter()
    try:
        result = solve(instance, config=config)
    except (ValueError, RuntimeError) as exc:
        logger.error("Bench instance seed=%s failed: %s", spec.seed, exc)
        row.update(status=type(exc).__name__, time_ms=round((time.perf_counter() - started) * 1000, 3))
        return row
    row.update(
        T=result.T,
        makespan=result.makespan,
        ratio_num=result.ratio_num,
        ratio_den=result.ratio_den,
        events=result.iterations,
        time_ms=round((time.perf_counter() - started) * 1000, 3),
        variant=result.variant.name,
        status="ok",
    )
    if instance.job_count <= BENCH_ORACLE_MAX_JOBS:
        try:
            row["opt"] = brute_force_opt(instance)
        except GuardExceeded:
            pass
    return row


def run_bench(spec: GenSpec, count: int, config: SolverConfig, workers: int = 1) -> pd.DataFrame:
    """Run *count* instances with seeds ``spec.seed, spec.seed + 1, ...`` in seed order."""

    payloads = [replace(spec, seed=spec.seed + offset).to_mapping() for offset in range(count)]
    rows: List[Dict[str, Any]] = []
    with Progress("bench", total=count) as progress:
        if workers > 1 and count > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for row in pool.map(bench_row, payloads, [config] * count):
                    rows.append(row)
                    progress.advance(f"seed {row['seed']}")
        else:
            for payload in payloads:
                row = bench_row(payload, config)
                rows.append(row)
                progress.advance(f"seed {row['seed']}")
    # object dtype keeps integer columns with gaps as integers in the CSV
    return pd.DataFrame(rows, columns=BENCH_COLUMNS, dtype=object)


def max_ratio(frame: pd.DataFrame) -> Optional[Fraction]:
    solved = frame[frame["status"] == "ok"]
    ratios = [Fraction(int(num), int(den)) for num, den in zip(solved["ratio_num"], solved["ratio_den"])]
    return max(ratios) if ratios else None


def cmd_bench(args: argparse.Namespace, config: SolverConfig) -> int:
    spec = _spec_from_args(args)
    frame = run_bench(spec, args.count, config, workers=args.workers)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(args.out, index=False)
    else:
        frame.to_csv(sys.stdout, index=False)
    worst = max_ratio(frame)
    failures = int((frame["status"] != "ok").sum()) if len(frame) else 0
    worst_text = "n/a" if worst is None else f"{worst.numerator}/{worst.denominator}"
    print(f"bench: {len(frame)} instances, max ratio {worst_text}, failures {failures}", file=sys.stderr)
    log_run_action(
        "Benchmark finished",
        details={"count": args.count, "max_ratio": worst_text, "failures": failures},
        snapshot=spec.to_mapping(),
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_genspec_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--spec", help="GenSpec JSON file (overrides the flags below)")
    parser.add_argument("--kind", choices=GENERATOR_KINDS, default="random")
    parser.add_argument("--machines", type=int, default=3)
    parser.add_argument("--jobs", type=int, default=8)
    parser.add_argument("--size-min", type=int, default=1)
    parser.add_argument("--size-max", type=int, default=10)
    parser.add_argument("--density", type=float, default=1.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--small-size", type=int)
    parser.add_argument("--big-size", type=int)
    parser.add_argument("--small-count", type=int, default=0)
    parser.add_argument("--big-count", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=APP_NAME, description="Restricted assignment solver")
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION} ({RELEASE_DATE})")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG")
    parser.add_argument("--log-dir", help="directory for last_run.md and history.md")
    commands = parser.add_subparsers(dest="command", required=True)

    lp = commands.add_parser("lp", help="compute OPT_LP and the probe table")
    lp.add_argument("instance")
    lp.add_argument("--columns", action="store_true", help="dump the supporting columns at OPT_LP")
    lp.set_defaults(handler=cmd_lp)

    solve_parser = commands.add_parser("solve", help="schedule an instance at T = OPT_LP")
    solve_parser.add_argument("instance")
    solve_parser.add_argument("--variant", choices=VARIANT_CHOICES, default="auto")
    solve_parser.add_argument("--trace", help="write the event trace as JSONL")
    solve_parser.add_argument("--cap", type=int, help="trace-event cap per insertion")
    solve_parser.add_argument("--out", help="schedule JSON path (stdout if omitted)")
    solve_parser.add_argument("--report", help="run report JSON path")
    solve_parser.add_argument("--debug-checks", action="store_true", help="check invariants after every event")
    solve_parser.set_defaults(handler=cmd_solve)

    verify = commands.add_parser("verify", help="check a schedule against T")
    verify.add_argument("instance")
    verify.add_argument("schedule")
    verify.add_argument("--T", type=int, required=True)
    verify.add_argument("--variant", choices=VARIANT_CHOICES, default="auto")
    verify.set_defaults(handler=cmd_verify)

    oracle = commands.add_parser("oracle", help="exact OPT, OPT_LP and their ratio")
    oracle.add_argument("instance")
    oracle.set_defaults(handler=cmd_oracle)

    gen = commands.add_parser("gen", help="generate an instance")
    _add_genspec_arguments(gen)
    gen.add_argument("--out", help="instance JSON path (stdout if omitted)")
    gen.set_defaults(handler=cmd_gen)

    bench = commands.add_parser("bench", help="solve a seeded corpus and write CSV")
    _add_genspec_arguments(bench)
    bench.add_argument("--count", type=int, default=10)
    bench.add_argument("--out", help="CSV path (stdout if omitted)")
    bench.add_argument("--workers", type=int, default=1)
    bench.add_argument("--cap", type=int, help="trace-event cap per insertion")
    bench.set_defaults(handler=cmd_bench)
    return parser


def _console_level(verbosity: int) -> int:
    if verbosity >= 2:
        return logging.DEBUG
    if verbosity == 1:
        return logging.INFO
    return logging.WARNING


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config = load_solver_config().with_overrides(
            event_cap=getattr(args, "cap", None),
            debug_checks=True if getattr(args, "debug_checks", False) else None,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    setup_logging(args.log_dir or config.log_dir, console_level=_console_level(args.verbose))
    log_run_action(f"Command {args.command}", details={"argv": list(argv) if argv is not None else sys.argv[1:]})

    try:
        return args.handler(args, config)
    except (InstanceError, ScheduleError, VariantPreconditionError) as exc:
        logger.error("Invalid input: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (GuardExceeded, IterationCapExceeded) as exc:
        logger.error("Limit reached: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (StuckAtFeasibleTarget, InvariantViolation, GuaranteeViolation, SearchContractError, LpNumericsError) as exc:
        logger.exception("Internal inconsistency")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except ValueError as exc:
        logger.error("Invalid argument: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        logger.error("File error: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
