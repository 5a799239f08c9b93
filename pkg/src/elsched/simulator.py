"""Discrete-event simulation of self-suspending jobs on one processor.

Dispatching is preemptive and work-conserving: among all jobs that are
released, have no unfinished predecessor of the same task, and are in an
execution phase, the one with the smallest absolute priority point runs
(ties broken by task index, then job index).  A suspended job frees the
processor and re-enters the ready queue when its suspension timer ends,
keeping its original priority point.  Jobs of one task execute in release
order even if the processor would otherwise idle.

Time is integer ticks.  A trace covers [0, horizon) with half-open,
contiguous intervals in one of three states: a job executing, no job
executing while at least one is suspended, or neither (waiting idle).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Callable, Iterable, Sequence

from .model import TaskSet

RELEASE_MODELS = ("periodic", "sporadic-jittered")
SUSPENSION_MODELS = ("none", "max-single-block", "random-phases")
DEMAND_MODELS = ("wcet", "random")

TRACE_HEADER = "# el-sched trace v1"


def _normalize_phases(
    phases: Iterable[tuple[int, int]]
) -> tuple[tuple[int, int], ...]:
    """Canonical phase form: strictly positive alternating run/suspend
    amounts, ending on execution.  Suspensions with no execution after
    them cannot delay the finish (a job is finished once its demand is
    executed) and are dropped.
    """
    steps: list[list[int]] = []  # [kind, amount], kind 0 = execute, 1 = suspend
    for e, s in phases:
        for kind, amt in ((0, e), (1, s)):
            if amt < 0:
                raise ValueError(f"negative phase amount {amt}")
            if amt == 0:
                continue
            if steps and steps[-1][0] == kind:
                steps[-1][1] += amt
            else:
                steps.append([kind, amt])
    while steps and steps[-1][0] == 1:
        steps.pop()
    # pack back into (execute, suspend) pairs; only the first pair may
    # have a zero execute part (a leading suspension)
    pairs: list[tuple[int, int]] = []
    i = 0
    while i < len(steps):
        if steps[i][0] == 0:
            e = steps[i][1]
            i += 1
        else:
            e = 0
        if i < len(steps) and steps[i][0] == 1:
            s = steps[i][1]
            i += 1
        else:
            s = 0
        pairs.append((e, s))
    return tuple(pairs)


@dataclass(frozen=True)
class JobBehavior:
    """One concrete job: which task it belongs to, its position in that
    task's release order (0-based), its release time, and its fixed
    execute/suspend phase plan.  The plan is normalized on construction;
    demand and suspension totals are derived from the normalized plan.
    """

    task: int
    index: int
    release: int
    phases: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if self.task < 0 or self.index < 0 or self.release < 0:
            raise ValueError("task, index, and release must be non-negative")
        object.__setattr__(self, "phases", _normalize_phases(self.phases))

    @property
    def demand(self) -> int:
        return sum(e for e, _ in self.phases)

    @property
    def suspension_total(self) -> int:
        return sum(s for _, s in self.phases)

    def steps(self) -> tuple[tuple[int, int], ...]:
        """Flattened (kind, amount) list; kind 0 executes, 1 suspends."""
        out: list[tuple[int, int]] = []
        for e, s in self.phases:
            if e:
                out.append((0, e))
            if s:
                out.append((1, s))
        return tuple(out)


@dataclass(frozen=True)
class JobSequence:
    """All jobs to simulate, plus the observation horizon."""

    jobs: tuple[JobBehavior, ...]
    horizon: int

    def __post_init__(self) -> None:
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        object.__setattr__(
            self, "jobs",
            tuple(sorted(self.jobs, key=lambda j: (j.task, j.index))),
        )

    def for_task(self, task: int) -> list[JobBehavior]:
        return [j for j in self.jobs if j.task == task]


def validate_sequence(ts: TaskSet, seq: JobSequence) -> None:
    """Check a sequence against the task model; raises ValueError."""
    per_task: dict[int, list[JobBehavior]] = {}
    for j in seq.jobs:
        if j.task >= len(ts):
            raise ValueError(f"job references task {j.task} of {len(ts)}")
        if j.release >= seq.horizon:
            raise ValueError(f"release {j.release} at or past horizon {seq.horizon}")
        t = ts[j.task]
        if j.demand > t.wcet:
            raise ValueError(
                f"job ({j.task},{j.index}) demand {j.demand} exceeds wcet {t.wcet}"
            )
        if j.suspension_total > t.suspension:
            raise ValueError(
                f"job ({j.task},{j.index}) suspends {j.suspension_total}, "
                f"budget {t.suspension}"
            )
        per_task.setdefault(j.task, []).append(j)
    for tid, jobs in per_task.items():
        period = ts[tid].period
        for pos, j in enumerate(jobs):
            if j.index != pos:
                raise ValueError(
                    f"task {tid} job indices must be consecutive from 0"
                )
            if pos and j.release - jobs[pos - 1].release < period:
                raise ValueError(
                    f"task {tid} releases {jobs[pos - 1].release},{j.release} "
                    f"violate separation {period}"
                )


@dataclass(frozen=True)
class Interval:
    """Half-open processor interval.  kind is 'run', 'susp' (no job
    executing, at least one suspended) or 'wait' (neither); task/job are
    -1 unless kind is 'run'.
    """

    start: int
    end: int
    kind: str
    task: int = -1
    job: int = -1


@dataclass(frozen=True)
class JobRecord:
    """Per-job outcome: when it first executed and finished (None if not
    within the horizon), and its execution/suspension spans.
    """

    task: int
    index: int
    release: int
    start: int | None
    finish: int | None
    exec_spans: tuple[tuple[int, int], ...]
    susp_spans: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ScheduleTrace:
    horizon: int
    intervals: tuple[Interval, ...]
    jobs: tuple[JobRecord, ...]


def _run_engine(
    ts: TaskSet, seq: JobSequence, key_of: Callable[[JobBehavior], tuple]
) -> ScheduleTrace:
    horizon = seq.horizon
    jobs = seq.jobs
    nj = len(jobs)
    n_tasks = len(ts)

    job_task = [j.task for j in jobs]
    job_rel = [j.release for j in jobs]
    job_key = [key_of(j) for j in jobs]
    job_steps = [j.steps() for j in jobs]

    task_jobs: list[list[int]] = [[] for _ in range(n_tasks)]
    for g, j in enumerate(jobs):
        task_jobs[j.task].append(g)

    ptr = [0] * n_tasks            # finished jobs per task
    begun = [False] * nj
    sp = [0] * nj                  # next step to enter
    rem = [0] * nj                 # ticks left in the current execution step
    finish: list[int | None] = [None] * nj
    first_start: list[int | None] = [None] * nj
    exec_spans: list[list[tuple[int, int]]] = [[] for _ in range(nj)]
    susp_spans: list[list[tuple[int, int]]] = [[] for _ in range(nj)]

    ready: list[tuple[tuple, int]] = []
    susp_ev: list[tuple[int, int]] = []
    n_susp = 0

    def advance(g: int, t: int) -> None:
        # enter the job's next step; cascades through instant finishes
        nonlocal n_susp
        while True:
            steps = job_steps[g]
            s = sp[g]
            if s < len(steps):
                kind, amt = steps[s]
                if kind == 0:
                    rem[g] = amt
                    heappush(ready, (job_key[g], g))
                else:
                    heappush(susp_ev, (t + amt, g))
                    n_susp += 1
                    susp_spans[g].append((t, min(t + amt, horizon)))
                return
            finish[g] = t
            tid = job_task[g]
            ptr[tid] += 1
            tl = task_jobs[tid]
            if ptr[tid] < len(tl):
                nxt = tl[ptr[tid]]
                if not begun[nxt] and job_rel[nxt] <= t:
                    begun[nxt] = True
                    g = nxt
                    continue
            return

    rel_order = sorted(range(nj), key=lambda g: job_rel[g])
    rp = 0

    intervals: list[list] = []  # [start, end, kind, task, job], merged on append

    def record(start: int, end: int, kind: str, task: int, job: int) -> None:
        if intervals:
            last = intervals[-1]
            if last[1] == start and last[2] == kind and last[3] == task and last[4] == job:
                last[1] = end
                return
        intervals.append([start, end, kind, task, job])

    t = 0
    while t < horizon:
        while rp < nj and job_rel[rel_order[rp]] == t:
            g = rel_order[rp]
            rp += 1
            tid = job_task[g]
            tl = task_jobs[tid]
            if not begun[g] and ptr[tid] < len(tl) and tl[ptr[tid]] == g:
                begun[g] = True
                advance(g, t)
        while susp_ev and susp_ev[0][0] == t:
            _, g = heappop(susp_ev)
            n_susp -= 1
            sp[g] += 1
            advance(g, t)

        nxt = horizon
        if rp < nj:
            r = job_rel[rel_order[rp]]
            if r < nxt:
                nxt = r
        if susp_ev and susp_ev[0][0] < nxt:
            nxt = susp_ev[0][0]
        if ready:
            _, g = ready[0]
            run_end = t + rem[g]
            if run_end < nxt:
                nxt = run_end
            if first_start[g] is None:
                first_start[g] = t
            es = exec_spans[g]
            if es and es[-1][1] == t:
                es[-1] = (es[-1][0], nxt)
            else:
                es.append((t, nxt))
            record(t, nxt, "run", job_task[g], jobs[g].index)
            rem[g] -= nxt - t
            t = nxt
            if rem[g] == 0:
                heappop(ready)
                sp[g] += 1
                advance(g, t)
        else:
            record(t, nxt, "susp" if n_susp > 0 else "wait", -1, -1)
            t = nxt

    out_jobs = tuple(
        JobRecord(
            task=j.task,
            index=j.index,
            release=j.release,
            start=first_start[g],
            finish=finish[g],
            exec_spans=tuple(exec_spans[g]),
            susp_spans=tuple(susp_spans[g]),
        )
        for g, j in enumerate(jobs)
    )
    out_intervals = tuple(Interval(*iv) for iv in intervals)
    return ScheduleTrace(horizon=horizon, intervals=out_intervals, jobs=out_jobs)


def simulate_el(
    ts: TaskSet, rel_points: Sequence[int], seq: JobSequence
) -> ScheduleTrace:
    """Simulate dispatching by absolute priority points (release plus the
    task's relative point), smaller first, ties by (task, job index).
    """
    if len(rel_points) != len(ts):
        raise ValueError("one relative priority point per task required")
    validate_sequence(ts, seq)
    pts = list(rel_points)
    return _run_engine(
        ts, seq, lambda j: (j.release + pts[j.task], j.task, j.index)
    )


def simulate_tfp(ts: TaskSet, seq: JobSequence) -> ScheduleTrace:
    """Simulate strict task-level fixed priorities in task order (lower
    task index always wins); same engine, different comparison key.
    """
    validate_sequence(ts, seq)
    return _run_engine(ts, seq, lambda j: (j.task, j.index))


# --- workload generation ------------------------------------------------------


def generate_job_sequence(
    ts: TaskSet,
    horizon: int,
    seed: int,
    release_model: str = "sporadic-jittered",
    suspension_model: str = "random-phases",
    demand_model: str = "wcet",
) -> JobSequence:
    """Draw a concrete job sequence for a task set.

    Release models: 'periodic' releases at multiples of the period;
    'sporadic-jittered' starts at 0 and separates consecutive releases by
    the period plus exponentially distributed slack (mean one tenth of
    the period, truncated to ticks).  Suspension models: 'none';
    'max-single-block' suspends the whole budget after the first
    executed tick; 'random-phases' spreads a uniformly drawn total over
    up to three suspensions at random execution offsets.  Demand models:
    'wcet' or 'random' (uniform over [0, wcet]).
    """
    if release_model not in RELEASE_MODELS:
        raise ValueError(f"unknown release model {release_model!r}")
    if suspension_model not in SUSPENSION_MODELS:
        raise ValueError(f"unknown suspension model {suspension_model!r}")
    if demand_model not in DEMAND_MODELS:
        raise ValueError(f"unknown demand model {demand_model!r}")
    rng = random.Random(seed)
    jobs: list[JobBehavior] = []
    for tid, task in enumerate(ts):
        releases: list[int] = []
        r = 0
        while r < horizon:
            releases.append(r)
            gap = task.period
            if release_model == "sporadic-jittered":
                gap += int(rng.expovariate(10.0 / task.period))
            r += gap
        for pos, rel in enumerate(releases):
            c = task.wcet if demand_model == "wcet" else rng.randint(0, task.wcet)
            phases = _draw_phases(rng, c, task.suspension, suspension_model)
            jobs.append(JobBehavior(task=tid, index=pos, release=rel, phases=phases))
    return JobSequence(jobs=tuple(jobs), horizon=horizon)


def _draw_phases(
    rng: random.Random, demand: int, susp_budget: int, model: str
) -> tuple[tuple[int, int], ...]:
    if model == "none" or susp_budget == 0 or demand == 0:
        return ((demand, 0),)
    if model == "max-single-block":
        return ((1, susp_budget), (demand - 1, 0))
    n_seg = rng.randint(0, 3)
    if n_seg == 0:
        return ((demand, 0),)
    total = rng.randint(0, susp_budget)
    cuts = sorted(rng.randint(0, total) for _ in range(n_seg - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
    offsets = sorted(rng.randint(0, demand - 1) for _ in range(n_seg))
    phases: list[tuple[int, int]] = []
    prev = 0
    for off, part in zip(offsets, parts):
        phases.append((off - prev, part))
        prev = off
    phases.append((demand - prev, 0))
    return tuple(phases)


# --- trace inspection ---------------------------------------------------------


def response_times(
    trace: ScheduleTrace,
) -> tuple[dict[tuple[int, int], int], dict[int, int], list[tuple[int, int]]]:
    """Per-job response times (finish - release) for finished jobs, the
    per-task maximum, and the jobs unfinished at the horizon.
    """
    per_job: dict[tuple[int, int], int] = {}
    per_task: dict[int, int] = {}
    unfinished: list[tuple[int, int]] = []
    for j in trace.jobs:
        if j.finish is None:
            unfinished.append((j.task, j.index))
            continue
        resp = j.finish - j.release
        per_job[(j.task, j.index)] = resp
        if resp > per_task.get(j.task, -1):
            per_task[j.task] = resp
    return per_job, per_task, unfinished


def check_feasibility(trace: ScheduleTrace, ts: TaskSet) -> bool:
    """True iff every finished job met its absolute deadline and no job
    whose deadline lies before the horizon is still unfinished.  Jobs
    with deadlines at or past the horizon cannot be judged and are not
    counted against feasibility.
    """
    for j in trace.jobs:
        dl = j.release + ts[j.task].deadline
        if j.finish is not None:
            if j.finish > dl:
                return False
        elif dl < trace.horizon:
            return False
    return True


# --- trace export -------------------------------------------------------------


def export_trace(trace: ScheduleTrace) -> str:
    """Line-oriented text form: a header, one '# job' comment per job
    (task index release start finish, '-' when absent), then one line
    per interval: start end state task job (task/job -1 unless running).
    """
    lines = [TRACE_HEADER, f"# horizon {trace.horizon}"]
    for j in trace.jobs:
        s = "-" if j.start is None else str(j.start)
        f = "-" if j.finish is None else str(j.finish)
        lines.append(f"# job {j.task} {j.index} {j.release} {s} {f}")
    for iv in trace.intervals:
        lines.append(f"{iv.start} {iv.end} {iv.kind} {iv.task} {iv.job}")
    return "\n".join(lines) + "\n"


# --- processor-state accounting ----------------------------------------------


@dataclass(frozen=True)
class StateTimes:
    """Time accounting for one task over a window [start, end).

    At every instant the window charges exactly one bucket: `inactive`
    (the task has no released-but-unfinished job), `interference[i]`
    (a job of task i with higher dispatch order than the task's current
    job is executing), or `progress` (everything else: the current job
    executes, suspends, or waits while nothing beats it).  The current
    job is the earliest released unfinished one.

    `per_job_progress[j]` refines `progress` per job: time the processor
    works on job j or job j suspends while nothing with higher dispatch
    order than job j executes.  `ref_interference[i]` counts execution
    of task-i jobs with higher dispatch order than one fixed reference
    job, active or not.
    """

    inactive: int
    progress: int
    interference: dict[int, int]
    per_job_progress: dict[int, int]
    ref_interference: dict[int, int]


def measure_state_times(
    trace: ScheduleTrace,
    ts: TaskSet,
    rel_points: Sequence[int],
    task: int,
    start: int,
    end: int,
    ref_index: int | None = None,
) -> StateTimes:
    """Measure the state buckets of `task` over [start, end) of a trace.

    Dispatch order is (release + relative point, task, job index),
    matching the simulator.  A window with start >= end yields all
    zeros.  Requires 0 <= start and end <= horizon.
    """
    n = len(ts)
    interference = {i: 0 for i in range(n) if i != task}
    ref_interference = (
        {i: 0 for i in range(n) if i != task} if ref_index is not None else {}
    )
    k_jobs = [j for j in trace.jobs if j.task == task]
    per_job = {j.index: 0 for j in k_jobs}
    if start >= end:
        return StateTimes(0, 0, interference, per_job, ref_interference)
    if start < 0 or end > trace.horizon:
        raise ValueError("window must lie within [0, horizon]")

    pts = list(rel_points)

    def key(j: JobRecord) -> tuple[int, int, int]:
        return (j.release + pts[j.task], j.task, j.index)

    ref_key = None
    if ref_index is not None:
        matches = [j for j in k_jobs if j.index == ref_index]
        if not matches:
            raise ValueError(f"task {task} has no job {ref_index} in the trace")
        ref_key = key(matches[0])

    cuts = {start, end}
    for iv in trace.intervals:
        for bound in (iv.start, iv.end):
            if start < bound < end:
                cuts.add(bound)
    for j in k_jobs:
        for bound in (j.release, j.finish):
            if bound is not None and start < bound < end:
                cuts.add(bound)
        for a, b in j.susp_spans:
            for bound in (a, b):
                if start < bound < end:
                    cuts.add(bound)
    points = sorted(cuts)

    by_key = {(j.task, j.index): j for j in trace.jobs}
    inactive = 0
    progress = 0
    iv_pos = 0
    intervals = trace.intervals
    for t0, t1 in zip(points, points[1:]):
        width = t1 - t0
        while intervals[iv_pos].end <= t0:
            iv_pos += 1
        iv = intervals[iv_pos]
        running = by_key[(iv.task, iv.job)] if iv.kind == "run" else None

        if ref_key is not None and running is not None:
            if running.task != task and key(running) < ref_key:
                ref_interference[running.task] += width

        active = [
            j for j in k_jobs
            if j.release <= t0 and (j.finish is None or j.finish > t0)
        ]
        if active:
            current = min(active, key=lambda j: j.index)
            if (
                running is not None
                and running.task != task
                and key(running) < key(current)
            ):
                interference[running.task] += width
            else:
                progress += width
        else:
            inactive += width

        for j in k_jobs:
            if running is not None and running.task == task and running.index == j.index:
                per_job[j.index] += width
                continue
            suspended = any(a <= t0 < b for a, b in j.susp_spans)
            if suspended and not (
                running is not None and key(running) < key(j)
            ):
                per_job[j.index] += width

    return StateTimes(inactive, progress, interference, per_job, ref_interference)
