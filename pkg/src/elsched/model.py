"""Task model for self-suspending sporadic tasks on a uniprocessor.

All timing parameters are non-negative integers in ticks (1 tick = 1 us).
Arithmetic on ticks is exact; rational quantities (utilization, priority
weights) use fractions.Fraction.  A task is the 4-tuple (wcet, suspension,
deadline, period); scheduling policies are described by a per-task relative
priority point: a job released at r is dispatched with absolute priority
point r + rel_point, smaller values winning.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence

TASKSET_HEADER = "# el-sched taskset v1"


class TasksetFormatError(ValueError):
    """Raised when a task-set file or literal violates the model."""


def round_half_up(value: Fraction | int) -> int:
    """Round to the nearest integer, ties toward plus infinity."""
    return math.floor(Fraction(value) + Fraction(1, 2))


@dataclass(frozen=True)
class Task:
    """One sporadic task: worst-case execution, total self-suspension,
    relative deadline, and minimum inter-arrival separation, in ticks.

    Invariants: 0 <= wcet <= deadline, suspension >= 0, period > 0.
    """

    wcet: int
    suspension: int
    deadline: int
    period: int

    def __post_init__(self) -> None:
        for name in ("wcet", "suspension", "deadline", "period"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise TasksetFormatError(f"{name} must be an integer tick count, got {v!r}")
        if self.period <= 0:
            raise TasksetFormatError(f"period must be positive, got {self.period}")
        if self.wcet < 0 or self.suspension < 0 or self.deadline < 0:
            raise TasksetFormatError("task parameters must be non-negative")
        if self.wcet > self.deadline:
            raise TasksetFormatError(
                f"wcet {self.wcet} exceeds deadline {self.deadline}"
            )

    @property
    def utilization(self) -> Fraction:
        return Fraction(self.wcet, self.period)

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.wcet, self.suspension, self.deadline, self.period)


@dataclass(frozen=True)
class TaskSet:
    """An ordered collection of tasks.  Task ids are list positions."""

    tasks: tuple[Task, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tasks", tuple(self.tasks))
        for t in self.tasks:
            if not isinstance(t, Task):
                raise TasksetFormatError(f"task set elements must be Task, got {t!r}")

    @classmethod
    def from_tuples(cls, rows: Sequence[Sequence[int]]) -> TaskSet:
        return cls(tuple(Task(*row) for row in rows))

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self) -> Iterator[Task]:
        return iter(self.tasks)

    def __getitem__(self, i: int) -> Task:
        return self.tasks[i]

    @property
    def utilization(self) -> Fraction:
        return sum((t.utilization for t in self.tasks), Fraction(0))


# Relative priority-point policies.  Each policy maps a task set to one
# relative priority point per task; see derive_priority_points().

_POLICY_KINDS = ("edf", "fifo", "eqdf", "saedf", "tfp", "explicit")


@dataclass(frozen=True)
class PriorityPolicy:
    """How relative priority points are derived from task parameters.

    kind: one of 'edf' (deadline), 'fifo' (release order), 'eqdf'
    (deadline plus weight * wcet), 'saedf' (deadline plus weight *
    suspension), 'tfp' (fixed task priorities in list order, emulated by
    cumulative-deadline points), 'explicit' (caller-supplied points).
    """

    kind: str
    weight: Fraction = Fraction(0)
    points: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in _POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == "explicit" and self.points is None:
            raise ValueError("explicit policy requires points")

    @classmethod
    def edf(cls) -> PriorityPolicy:
        return cls("edf")

    @classmethod
    def fifo(cls) -> PriorityPolicy:
        return cls("fifo")

    @classmethod
    def eqdf(cls, weight: Fraction | int) -> PriorityPolicy:
        return cls("eqdf", weight=Fraction(weight))

    @classmethod
    def saedf(cls, weight: Fraction | int) -> PriorityPolicy:
        return cls("saedf", weight=Fraction(weight))

    @classmethod
    def tfp(cls) -> PriorityPolicy:
        return cls("tfp")

    @classmethod
    def explicit(cls, points: Sequence[int]) -> PriorityPolicy:
        return cls("explicit", points=tuple(int(p) for p in points))

    def label(self) -> str:
        if self.kind in ("eqdf", "saedf"):
            return f"{self.kind}[{self.weight}]"
        return self.kind


def derive_priority_points(ts: TaskSet, policy: PriorityPolicy) -> tuple[int, ...]:
    """Relative priority point per task (signed ticks, task order).

    Weighted policies round to the nearest tick with ties up.  The 'tfp'
    policy assigns cumulative deadlines (point of task i is the sum of
    the deadlines of tasks 0..i), which emulates fixed task priorities in
    list order once every response time is certified to stay within the
    deadline.
    """
    if len(ts) == 0:
        raise ValueError("cannot derive priority points for an empty task set")
    if policy.kind == "edf":
        return tuple(t.deadline for t in ts)
    if policy.kind == "fifo":
        return tuple(0 for _ in ts)
    if policy.kind == "eqdf":
        w = policy.weight
        return tuple(round_half_up(t.deadline + w * t.wcet) for t in ts)
    if policy.kind == "saedf":
        w = policy.weight
        return tuple(round_half_up(t.deadline + w * t.suspension) for t in ts)
    if policy.kind == "tfp":
        pts = []
        acc = 0
        for t in ts:
            acc += t.deadline
            pts.append(acc)
        return tuple(pts)
    assert policy.points is not None
    if len(policy.points) != len(ts):
        raise ValueError(
            f"explicit points for {len(policy.points)} tasks, task set has {len(ts)}"
        )
    return policy.points


def utilization(ts: TaskSet) -> Fraction:
    """Total utilization (sum of wcet/period) as an exact rational."""
    return ts.utilization


def deadline_monotonic_points(ts: TaskSet) -> tuple[int, ...]:
    """Relative priority points emulating deadline-monotonic fixed
    priorities: cumulative deadlines along the deadline-sorted order,
    mapped back to task positions (ties keep list order)."""
    order = sorted(range(len(ts)), key=lambda i: (ts[i].deadline, i))
    pts = [0] * len(ts)
    acc = 0
    for i in order:
        acc += ts[i].deadline
        pts[i] = acc
    return tuple(pts)


def job_priority_point(release: int, rel_point: int) -> int:
    """Absolute priority point of a job released at `release`."""
    return release + rel_point


# --- line-oriented task-set files -------------------------------------------
#
#   # el-sched taskset v1
#   <wcet> <suspension> <deadline> <period>     (one task per line)
#
# Blank lines and further '#' comments are ignored.


def parse_taskset_text(text: str) -> TaskSet:
    lines = text.splitlines()
    if not lines or lines[0].strip() != TASKSET_HEADER:
        raise TasksetFormatError(f"missing header line {TASKSET_HEADER!r}")
    rows: list[Task] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise TasksetFormatError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        try:
            vals = [int(p) for p in parts]
        except ValueError as exc:
            raise TasksetFormatError(f"line {lineno}: non-integer field") from exc
        try:
            rows.append(Task(*vals))
        except TasksetFormatError as exc:
            raise TasksetFormatError(f"line {lineno}: {exc}") from exc
    return TaskSet(tuple(rows))


def format_taskset_text(ts: TaskSet) -> str:
    lines = [TASKSET_HEADER]
    lines.extend(" ".join(str(v) for v in t.as_tuple()) for t in ts)
    return "\n".join(lines) + "\n"


def load_taskset(path: str | Path) -> TaskSet:
    return parse_taskset_text(Path(path).read_text())


def save_taskset(ts: TaskSet, path: str | Path) -> None:
    Path(path).write_text(format_taskset_text(ts))
