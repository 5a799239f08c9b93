"""Command-line interface.

Subcommands: generate (synthesize task sets), analyze (schedulability
tests; exit code 0 = certified schedulable, 1 = no decision, 2 = input
error), simulate (random job sequence -> trace and response times),
sweep / lambda-sweep (acceptance-ratio campaigns to CSV), verify
(randomized cross-validation campaigns), bench (analysis runtime).

Campaigns that evaluate independent cells honor the EL_SCHED_THREADS
environment variable for their worker count.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import experiments
from .analysis import (
    TestConfig,
    test_variable,
    test_fixed,
    result_csv_header,
    result_csv_row,
    baseline_susp_obl,
)
from .experiments import LambdaSweepConfig, PolicyChoice, SweepConfig
from .generator import BatchEntry, GenSpec, dump_batch, synthesize_counting
from .model import (
    PriorityPolicy,
    TaskSet,
    TasksetFormatError,
    deadline_monotonic_points,
    format_taskset_text,
    load_taskset,
    derive_priority_points,
)
from .simulator import (
    DEMAND_MODELS,
    RELEASE_MODELS,
    SUSPENSION_MODELS,
    export_trace,
    generate_job_sequence,
    check_feasibility,
    response_times,
    simulate_el,
)

POLICY_NAMES = ("edf", "fifo", "eqdf", "saedf", "dm", "explicit")


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _resolve_points(ts: TaskSet, args: argparse.Namespace) -> list[int]:
    name = args.policy
    if name in ("eqdf", "saedf"):
        weight = args.weight
        if weight is None:
            raise TasksetFormatError(f"policy {name} requires --lambda")
        policy = PriorityPolicy.eqdf(weight) if name == "eqdf" else PriorityPolicy.saedf(weight)
        return list(derive_priority_points(ts, policy))
    if name == "explicit":
        if not args.pp:
            raise TasksetFormatError("policy explicit requires --pp")
        try:
            pts = [int(p) for p in args.pp.split(",")]
        except ValueError as exc:
            raise TasksetFormatError(f"bad --pp list: {args.pp!r}") from exc
        if len(pts) != len(ts):
            raise TasksetFormatError(
                f"--pp lists {len(pts)} points for {len(ts)} tasks"
            )
        return pts
    if name == "dm":
        return list(deadline_monotonic_points(ts))
    if name == "edf":
        return list(derive_priority_points(ts, PriorityPolicy.edf()))
    if name == "fifo":
        return list(derive_priority_points(ts, PriorityPolicy.fifo()))
    raise TasksetFormatError(f"unknown policy {name!r}")


def _test_config(args: argparse.Namespace) -> TestConfig:
    return TestConfig(eta=args.eta, depth=args.depth, max_a=args.max_a)


def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", choices=POLICY_NAMES, default="edf",
                   help="priority-point policy (default: edf)")
    p.add_argument("--lambda", dest="weight", type=_fraction, default=None,
                   help="weight for eqdf/saedf priority points")
    p.add_argument("--pp", default=None,
                   help="comma-separated explicit relative priority points")


def _add_test_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=_fraction, default=Fraction(1, 100),
                   help="window grid resolution as a fraction of the deadline "
                        "(default: 0.01)")
    p.add_argument("--depth", type=int, default=5,
                   help="refinement passes (default: 5)")
    p.add_argument("--max-a", type=int, default=10,
                   help="extra periods the variable-window test may reach back "
                        "(default: 10)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="el-sched",
        description="Schedulability analysis and simulation of self-suspending "
                    "tasks under EDF-like (priority-point) scheduling.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize random task sets")
    g.add_argument("--n", type=int, default=10, help="tasks per set (default: 10)")
    g.add_argument("--u", type=_fraction, required=True, help="total utilization")
    g.add_argument("--x", type=_fraction, default=Fraction(1),
                   help="deadline = x * period (default: 1)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1,
                   help="sets to generate; one writes a task-set file, more "
                        "write JSON lines (default: 1)")
    g.add_argument("-o", "--output", default=None, help="output path (default: stdout)")

    a = sub.add_parser("analyze", help="run a schedulability test")
    a.add_argument("taskset", help="task-set file")
    _add_policy_flags(a)
    a.add_argument("--test", choices=("fixed", "variable", "baseline"),
                   default="fixed",
                   help="fixed/variable window test or the suspension-oblivious "
                        "baseline (default: fixed)")
    _add_test_flags(a)
    a.add_argument("--id", default=None, help="task-set id for CSV output")
    a.add_argument("--csv", action="store_true",
                   help="emit the result as one CSV row")

    s = sub.add_parser("simulate", help="simulate one random job sequence")
    s.add_argument("taskset", help="task-set file")
    _add_policy_flags(s)
    s.add_argument("--horizon", type=int, default=None,
                   help="ticks to simulate (default: 20 * max period)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--release-model", choices=RELEASE_MODELS,
                   default="sporadic-jittered")
    s.add_argument("--suspension-model", choices=SUSPENSION_MODELS,
                   default="random-phases")
    s.add_argument("--demand-model", choices=DEMAND_MODELS, default="wcet")
    s.add_argument("--trace-out", default=None, help="write the trace text here")

    w = sub.add_parser("sweep", help="acceptance-ratio sweep from a JSON config")
    w.add_argument("--config", required=True, help="JSON sweep configuration")
    w.add_argument("-o", "--outdir", default=".", help="CSV output directory")

    lw = sub.add_parser("lambda-sweep",
                        help="weighted-policy sweep from a JSON config")
    lw.add_argument("--config", required=True, help="JSON sweep configuration")
    lw.add_argument("-o", "--outdir", default=".", help="CSV output directory")

    v = sub.add_parser("verify", help="randomized cross-validation campaigns")
    v.add_argument("campaign", choices=("soundness", "tfp-equivalence",
                                        "fixed-vs-variable", "non-dominance"))
    v.add_argument("--budget", type=int, default=100,
                   help="sets to examine (default: 100)")
    v.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bench", help="analysis runtime benchmark")
    b.add_argument("--n-list", default="10,50",
                   help="comma-separated set sizes (default: 10,50)")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("-o", "--output", default=None, help="CSV path (default: stdout)")

    return ap


def _cmd_generate(args: argparse.Namespace) -> int:
    if args.count < 1:
        print("error: --count must be at least 1", file=sys.stderr)
        return 2
    total_discards = 0
    if args.count == 1:
        ts, discards = synthesize_counting(GenSpec(
            n=args.n, u_total=args.u, seed=args.seed, deadline_factor=args.x,
        ))
        total_discards = discards
        text = format_taskset_text(ts)
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
    else:
        entries = []
        for i in range(args.count):
            seed = experiments.cell_seed(args.seed, "generate", i)
            ts, discards = synthesize_counting(GenSpec(
                n=args.n, u_total=args.u, seed=seed, deadline_factor=args.x,
            ))
            total_discards += discards
            entries.append(BatchEntry(id=f"set{i}", seed=seed,
                                      u_target=args.u, taskset=ts))
        if not args.output:
            print("error: --count > 1 requires -o", file=sys.stderr)
            return 2
        dump_batch(entries, args.output)
    if total_discards:
        print(f"discarded {total_discards} utilization draws "
              f"(single-task utilization above 1)", file=sys.stderr)
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    ts = load_taskset(args.taskset)
    pts = _resolve_points(ts, args)
    cfg = _test_config(args)
    if args.test == "variable":
        result = test_variable(ts, pts, cfg)
    elif args.test == "baseline":
        result = baseline_susp_obl(ts, pts, cfg)
    else:
        result = test_fixed(ts, pts, cfg)
    taskset_id = args.id or Path(args.taskset).stem
    label = args.policy if args.policy != "explicit" else f"explicit[{args.pp}]"
    if args.weight is not None and args.policy in ("eqdf", "saedf"):
        label = f"{args.policy}[{args.weight}]"
    if args.csv:
        print(",".join(result_csv_header(len(ts))))
        print(",".join(result_csv_row(taskset_id, label, result)))
    else:
        verdict = "schedulable" if result.verdict else "no decision"
        print(f"{taskset_id}: {verdict} ({label}, {args.test} window, "
              f"passes: {result.iterations})")
        for i, (task, bound) in enumerate(zip(ts, result.bounds)):
            print(f"  task {i}: response bound {bound} / deadline {task.deadline}")
    return 0 if result.verdict else 1


def _cmd_simulate(args: argparse.Namespace) -> int:
    ts = load_taskset(args.taskset)
    if len(ts) == 0:
        print("error: empty task set", file=sys.stderr)
        return 2
    pts = _resolve_points(ts, args)
    horizon = args.horizon
    if horizon is None:
        horizon = 20 * max(t.period for t in ts)
    seq = generate_job_sequence(
        ts, horizon, args.seed,
        release_model=args.release_model,
        suspension_model=args.suspension_model,
        demand_model=args.demand_model,
    )
    trace = simulate_el(ts, pts, seq)
    if args.trace_out:
        Path(args.trace_out).write_text(export_trace(trace))
    per_job, per_task, unfinished = response_times(trace)
    feasible = check_feasibility(trace, ts)
    print(f"horizon {horizon}, {len(seq.jobs)} jobs, "
          f"feasible: {'yes' if feasible else 'NO'}")
    for tid in range(len(ts)):
        worst = per_task.get(tid)
        shown = "-" if worst is None else str(worst)
        print(f"  task {tid}: worst observed response {shown} "
              f"/ deadline {ts[tid].deadline}")
    if unfinished:
        print(f"  unfinished at horizon: {len(unfinished)} jobs")
    return 0


def _policy_from_json(obj: dict) -> PolicyChoice:
    name = obj.get("policy", "edf")
    weight = _fraction(obj["lambda"]) if "lambda" in obj else Fraction(0)
    if name == "edf":
        pol = PriorityPolicy.edf()
    elif name == "fifo":
        pol = PriorityPolicy.fifo()
    elif name == "eqdf":
        pol = PriorityPolicy.eqdf(weight)
    elif name == "saedf":
        pol = PriorityPolicy.saedf(weight)
    elif name in ("tfp", "dm"):
        # synthesized sets are deadline-sorted, so list order is the
        # deadline-monotonic order
        pol = PriorityPolicy.tfp()
    else:
        raise ValueError(f"unknown policy {name!r} in sweep config")
    label = obj.get("label", name)
    return PolicyChoice(label, pol, obj.get("test", "fixed"))


def _utilizations_from_json(obj: dict) -> tuple[Fraction, ...]:
    if "utilizations" in obj:
        return tuple(_fraction(u) for u in obj["utilizations"])
    grid = obj.get("utilization_pct", {"lo": 5, "hi": 100, "step": 5})
    return experiments.utilization_grid(grid["lo"], grid["hi"], grid["step"])


def _test_config_from_json(obj: dict) -> TestConfig:
    return TestConfig(
        eta=_fraction(obj.get("eta", "1/100")),
        depth=int(obj.get("depth", 5)),
        max_a=int(obj.get("max_a", 10)),
    )


def _cmd_sweep(args: argparse.Namespace) -> int:
    obj = json.loads(Path(args.config).read_text())
    cfg = SweepConfig(
        name=obj.get("name", "acceptance"),
        master_seed=int(obj.get("master_seed", 0)),
        utilizations=_utilizations_from_json(obj),
        sets_per_point=int(obj.get("sets_per_point", 100)),
        n=int(obj.get("n", 10)),
        deadline_factors=tuple(
            _fraction(x) for x in obj.get("deadline_factors", ["1"])
        ),
        period_range=tuple(obj.get("period_range", (1, 100))),
        policies=tuple(_policy_from_json(p) for p in obj.get(
            "policies", [{"policy": "edf"}]
        )),
        test_config=_test_config_from_json(obj),
    )
    rows = experiments.acceptance_sweep(cfg)
    path = experiments.sweep_csv_path(args.outdir, cfg.name, cfg.master_seed)
    experiments.write_rows_csv(path, rows)
    print(path)
    return 0


def _cmd_lambda_sweep(args: argparse.Namespace) -> int:
    obj = json.loads(Path(args.config).read_text())
    weights = obj.get("weights")
    cfg = LambdaSweepConfig(
        family=obj.get("family", "eqdf"),
        name=obj.get("name", "lambda"),
        master_seed=int(obj.get("master_seed", 0)),
        utilizations=_utilizations_from_json(obj),
        weights=tuple(int(w) for w in weights) if weights else tuple(range(-10, 11)),
        sets_per_point=int(obj.get("sets_per_point", 100)),
        n=int(obj.get("n", 10)),
        deadline_factors=tuple(
            _fraction(x) for x in obj.get("deadline_factors", ["1"])
        ),
        period_range=tuple(obj.get("period_range", (1, 100))),
        test=obj.get("test", "fixed"),
        test_config=_test_config_from_json(obj),
    )
    rows = experiments.lambda_sweep(cfg)
    path = experiments.sweep_csv_path(args.outdir, cfg.name, cfg.master_seed)
    experiments.write_rows_csv(path, rows)
    print(path)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    if args.campaign == "soundness":
        rep = experiments.verify_soundness(sets=args.budget, master_seed=args.seed)
        print(f"{len(rep.outcomes)} sets, {rep.accepted} accepted, "
              f"{rep.sims_run} simulations, {len(rep.violations)} deadline misses")
        for v in rep.violations[:10]:
            print(f"  MISS: {v}")
        return 1 if rep.violations else 0
    if args.campaign == "tfp-equivalence":
        rep = experiments.verify_fp_equivalence(
            target_accepted=max(1, args.budget // 10), master_seed=args.seed
        )
        print(f"{rep.accepted} certified sets of {rep.attempts} tried, "
              f"{rep.sequences} traces compared, {len(rep.mismatches)} mismatches")
        return 1 if rep.mismatches else 0
    if args.campaign == "fixed-vs-variable":
        rep = experiments.verify_fixed_vs_extended(
            sets=args.budget, master_seed=args.seed
        )
        print(f"{rep.sets} deadline-equals-period sets, "
              f"{len(rep.mismatches)} disagreements")
        return 1 if rep.mismatches else 0
    search = experiments.find_non_dominance_pair(
        budget=args.budget, master_seed=args.seed
    )
    print(f"checked {search.checked} sets")
    for name, wit in (("fixed-only", search.fixed_only),
                      ("variable-only", search.extended_only)):
        if wit is None:
            print(f"  {name}: not found")
        else:
            print(f"  {name}: seed {wit.seed}, u {wit.u_target}, "
                  f"x {wit.deadline_factor}")
    return 0 if search.complete else 1


def _cmd_bench(args: argparse.Namespace) -> int:
    ns = tuple(int(x) for x in args.n_list.split(","))
    rows = experiments.runtime_benchmark(ns=ns, master_seed=args.seed)
    if args.output:
        experiments.write_rows_csv(args.output, rows)
        print(args.output)
    else:
        print("n,sets,mean_s,max_s")
        for r in rows:
            print(f"{r['n']},{r['sets']},{r['mean_s']:.4f},{r['max_s']:.4f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "generate": _cmd_generate,
        "analyze": _cmd_analyze,
        "simulate": _cmd_simulate,
        "sweep": _cmd_sweep,
        "lambda-sweep": _cmd_lambda_sweep,
        "verify": _cmd_verify,
        "bench": _cmd_bench,
    }
    try:
        return handlers[args.command](args)
    except (TasksetFormatError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


run = main


if __name__ == "__main__":
    sys.exit(main())
