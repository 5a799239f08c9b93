"""Random task-set synthesis.

Utilizations come from the standard recursive uniform-sum split (sample
the remaining sum through powers of uniform draws), periods are
log-uniform over a millisecond range, deadlines scale the period by a
constant factor, and suspension budgets are uniform over a slice of the
per-task slack.  Everything is quantized to integer ticks
(1 ms = 1000 ticks); utilization targets are hit exactly in the rational
sense by a final rescale.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .model import Task, TaskSet, round_half_up

TICKS_PER_MS = 1000

_MAX_REDRAWS = 100_000


def uunifast(n: int, u_total: Fraction | float, rng: random.Random) -> list[Fraction]:
    """Split u_total into n positive utilizations, uniformly over the
    simplex.  Sampling uses floats; the result is rescaled exactly so
    the rational parts sum to u_total.
    """
    if n < 1:
        raise ValueError(f"need at least one task, got n={n}")
    target = Fraction(u_total)
    if target <= 0:
        raise ValueError(f"u_total must be positive, got {u_total}")
    while True:
        parts: list[float] = []
        remaining = float(target)
        for k in range(1, n):
            nxt = remaining * rng.random() ** (1.0 / (n - k))
            parts.append(remaining - nxt)
            remaining = nxt
        parts.append(remaining)
        if all(p > 0.0 for p in parts):
            break
    raw = [Fraction(p) for p in parts]
    scale = target / sum(raw)
    return [p * scale for p in raw]


@dataclass(frozen=True)
class GenSpec:
    """Parameters for one synthesized task set.

    n tasks; total utilization u_total in (0, n]; periods log-uniform
    over period_range (milliseconds); relative deadline = deadline_factor *
    period (>= 1, so wcet always fits); suspension budget uniform over
    [lo * slack, hi * slack] where slack = period - wcet and (lo, hi) =
    suspension_factor_range.
    """

    n: int
    u_total: Fraction
    seed: int
    period_range: tuple[float, float] = (1, 100)
    deadline_factor: Fraction = Fraction(1)
    suspension_factor_range: tuple[Fraction, Fraction] = (Fraction(0), Fraction(1, 2))

    def __post_init__(self) -> None:
        object.__setattr__(self, "u_total", Fraction(self.u_total))
        object.__setattr__(self, "deadline_factor", Fraction(self.deadline_factor))
        object.__setattr__(
            self, "suspension_factor_range",
            (Fraction(self.suspension_factor_range[0]), Fraction(self.suspension_factor_range[1])),
        )
        if self.n < 1:
            raise ValueError(f"need at least one task, got n={self.n}")
        if not 0 < self.u_total <= self.n:
            raise ValueError(f"u_total must be in (0, n], got {self.u_total}")
        lo, hi = self.period_range
        if lo <= 0 or hi < lo:
            raise ValueError(f"bad period range {self.period_range}")
        if round(lo * TICKS_PER_MS) < 1:
            raise ValueError("shortest period must be at least one tick")
        if self.deadline_factor < 1:
            raise ValueError(
                f"deadline_factor must be >= 1, got {self.deadline_factor}"
            )
        slo, shi = self.suspension_factor_range
        if slo < 0 or shi < slo:
            raise ValueError(f"bad suspension range {self.suspension_factor_range}")


def synthesize_counting(spec: GenSpec) -> tuple[TaskSet, int]:
    """Synthesize one task set; also report how many utilization vectors
    were discarded because a single task exceeded full utilization
    (possible when u_total > 1; such vectors are redrawn, never clamped).
    """
    rng = random.Random(spec.seed)
    discards = 0
    while True:
        us = uunifast(spec.n, spec.u_total, rng)
        if all(u <= 1 for u in us):
            break
        discards += 1
        if discards > _MAX_REDRAWS:
            raise RuntimeError(
                f"gave up after {discards} utilization redraws for {spec}"
            )
    lo_ln = math.log(spec.period_range[0] * TICKS_PER_MS)
    hi_ln = math.log(spec.period_range[1] * TICKS_PER_MS)
    slo, shi = spec.suspension_factor_range
    tasks = []
    for u in us:
        period = int(math.exp(rng.uniform(lo_ln, hi_ln)) + 0.5)
        wcet = round_half_up(u * period)
        deadline = round_half_up(spec.deadline_factor * period)
        slack = period - wcet
        if slack > 0:
            s_lo = round_half_up(slo * slack)
            s_hi = round_half_up(shi * slack)
            susp = rng.randint(s_lo, s_hi)
        else:
            susp = 0
        tasks.append(Task(wcet=wcet, suspension=susp, deadline=deadline, period=period))
    tasks.sort(key=lambda t: t.deadline)
    return TaskSet(tuple(tasks)), discards


def synthesize(spec: GenSpec) -> TaskSet:
    return synthesize_counting(spec)[0]


# --- batch files (JSON lines) -------------------------------------------------


@dataclass(frozen=True)
class BatchEntry:
    id: str
    seed: int
    u_target: Fraction
    taskset: TaskSet


def dump_batch(entries: Sequence[BatchEntry], path: str | Path) -> None:
    with open(path, "w") as fh:
        for e in entries:
            fh.write(json.dumps({
                "id": e.id,
                "seed": e.seed,
                "u_target": str(e.u_target),
                "tasks": [list(t.as_tuple()) for t in e.taskset],
            }) + "\n")


def load_batch(path: str | Path) -> list[BatchEntry]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out.append(BatchEntry(
                id=str(obj["id"]),
                seed=int(obj["seed"]),
                u_target=Fraction(obj["u_target"]),
                taskset=TaskSet.from_tuples(obj["tasks"]),
            ))
    return out
