"""Tests for task-set synthesis: utilization splitting, quantization,
deadline scaling, and batch files."""

from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest
import scipy.stats

from elsched import GenSpec, Task, TaskSet, synthesize, utilization, uunifast
from elsched.generator import (
    TICKS_PER_MS,
    BatchEntry,
    dump_batch,
    load_batch,
    synthesize_counting,
)


# --- utilization splitting -------------------------------------------------------


def test_uunifast_single_task_gets_everything():
    rng = random.Random(0)
    assert uunifast(1, Fraction(3, 5), rng) == [Fraction(3, 5)]


def test_uunifast_sums_exactly_to_target():
    rng = random.Random(42)
    for n in (2, 3, 10, 50):
        for u in (Fraction(1, 10), Fraction(7, 10), Fraction(99, 100), Fraction(3, 2)):
            parts = uunifast(n, u, rng)
            assert len(parts) == n
            assert sum(parts) == u  # exact rational equality
            assert all(p > 0 for p in parts)


def test_uunifast_is_deterministic():
    a = uunifast(10, Fraction(1, 2), random.Random(7))
    b = uunifast(10, Fraction(1, 2), random.Random(7))
    assert a == b


def test_uunifast_rejects_bad_arguments():
    with pytest.raises(ValueError):
        uunifast(0, Fraction(1, 2), random.Random(0))
    with pytest.raises(ValueError):
        uunifast(3, Fraction(0), random.Random(0))


def test_uunifast_spread_is_not_degenerate():
    # All mass on one task would indicate a broken recursion.
    rng = random.Random(11)
    parts = uunifast(20, Fraction(1), rng)
    assert max(parts) < Fraction(9, 10)


# --- synthesis --------------------------------------------------------------------


def test_synthesize_is_deterministic():
    spec = GenSpec(n=10, u_total=Fraction(1, 2), seed=123)
    assert synthesize(spec) == synthesize(spec)


def test_synthesize_respects_task_invariants():
    rng = random.Random(5)
    for _ in range(20):
        spec = GenSpec(
            n=rng.randint(1, 20),
            u_total=Fraction(rng.randint(1, 95), 100),
            seed=rng.randint(0, 2**32),
        )
        ts = synthesize(spec)
        assert len(ts) == spec.n
        for t in ts:
            assert 0 <= t.wcet <= t.deadline
            assert t.wcet <= t.period
            assert t.suspension >= 0
            assert t.period > 0


def test_synthesize_sorts_by_deadline():
    spec = GenSpec(n=15, u_total=Fraction(3, 5), seed=99)
    ts = synthesize(spec)
    deadlines = [t.deadline for t in ts]
    assert deadlines == sorted(deadlines)


def test_unit_deadline_factor_gives_implicit_deadlines():
    spec = GenSpec(n=10, u_total=Fraction(1, 2), seed=3, deadline_factor=Fraction(1))
    assert all(t.deadline == t.period for t in synthesize(spec))


def test_deadline_factor_scales_periods():
    spec = GenSpec(n=10, u_total=Fraction(1, 2), seed=3, deadline_factor=Fraction(3, 2))
    for t in synthesize(spec):
        # deadline = period scaled by 3/2, rounded half up
        assert t.deadline == math.floor(Fraction(3, 2) * t.period + Fraction(1, 2))
        assert t.deadline > t.period


def test_full_utilization_leaves_no_suspension_slack():
    spec = GenSpec(n=1, u_total=Fraction(1), seed=17)
    (task,) = synthesize(spec).tasks
    assert task.wcet == task.period
    assert task.suspension == 0


def test_zero_suspension_range():
    spec = GenSpec(
        n=8, u_total=Fraction(1, 2), seed=21,
        suspension_factor_range=(Fraction(0), Fraction(0)),
    )
    assert all(t.suspension == 0 for t in synthesize(spec))


def test_suspension_stays_within_slack_fraction():
    spec = GenSpec(
        n=25, u_total=Fraction(1, 2), seed=31,
        suspension_factor_range=(Fraction(0), Fraction(1, 2)),
    )
    for t in synthesize(spec):
        slack = t.period - t.wcet
        assert t.suspension <= math.floor(Fraction(1, 2) * slack + Fraction(1, 2))


def test_periods_land_in_range_ticks():
    spec = GenSpec(n=50, u_total=Fraction(1, 2), seed=8, period_range=(1, 100))
    for t in synthesize(spec):
        assert 1 * TICKS_PER_MS <= t.period <= 100 * TICKS_PER_MS + 1


def test_realized_utilization_tracks_target():
    # Quantization to integer ticks keeps the realized utilization within
    # one percent of the target even for large sets.
    for seed in (1, 2, 3):
        for u in (Fraction(3, 10), Fraction(1, 2), Fraction(9, 10)):
            spec = GenSpec(n=200, u_total=u, seed=seed)
            realized = utilization(synthesize(spec))
            assert abs(realized - u) <= u / 100


def test_overloaded_targets_redraw_single_task_overshoots():
    # With a total above one, splits giving one task more than full
    # utilization are discarded and redrawn, never clamped.
    saw_discard = False
    for seed in range(30):
        ts, discards = synthesize_counting(
            GenSpec(n=2, u_total=Fraction(9, 5), seed=seed)
        )
        saw_discard = saw_discard or discards > 0
        assert all(t.wcet <= t.period for t in ts)
    assert saw_discard


def test_genspec_validation():
    good = dict(n=5, u_total=Fraction(1, 2), seed=0)
    GenSpec(**good)
    with pytest.raises(ValueError):
        GenSpec(**{**good, "n": 0})
    with pytest.raises(ValueError):
        GenSpec(**{**good, "u_total": Fraction(0)})
    with pytest.raises(ValueError):
        GenSpec(**{**good, "u_total": Fraction(6)})  # above n
    with pytest.raises(ValueError):
        GenSpec(**{**good, "period_range": (0, 10)})
    with pytest.raises(ValueError):
        GenSpec(**{**good, "period_range": (10, 1)})
    with pytest.raises(ValueError):
        GenSpec(**{**good, "deadline_factor": Fraction(1, 2)})
    with pytest.raises(ValueError):
        GenSpec(**{**good, "suspension_factor_range": (Fraction(1), Fraction(0))})
    with pytest.raises(ValueError):
        GenSpec(**{**good, "suspension_factor_range": (Fraction(-1), Fraction(0))})


def test_log_uniform_periods_pass_ks():
    # Pool the periods of many sets and compare log-periods against the
    # uniform distribution they are drawn from.
    logs = []
    for seed in range(100):
        spec = GenSpec(n=100, u_total=Fraction(1, 2), seed=seed, period_range=(1, 100))
        logs.extend(math.log(t.period) for t in synthesize(spec))
    lo = math.log(1 * TICKS_PER_MS)
    hi = math.log(100 * TICKS_PER_MS)
    stat, p = scipy.stats.kstest(logs, "uniform", args=(lo, hi - lo))
    assert len(logs) == 10_000
    assert p > 0.01, (stat, p)


# --- batch files ------------------------------------------------------------------


def test_batch_round_trip(tmp_path):
    entries = []
    for i in range(5):
        spec = GenSpec(n=4, u_total=Fraction(i + 1, 10), seed=i)
        entries.append(
            BatchEntry(
                id=f"set-{i}", seed=i, u_target=spec.u_total, taskset=synthesize(spec)
            )
        )
    path = tmp_path / "batch.jsonl"
    dump_batch(entries, path)
    loaded = load_batch(path)
    assert loaded == entries


def test_batch_preserves_exact_rationals(tmp_path):
    ts = TaskSet((Task(1, 0, 3, 3),))
    entry = BatchEntry(id="x", seed=0, u_target=Fraction(1, 3), taskset=ts)
    path = tmp_path / "one.jsonl"
    dump_batch([entry], path)
    assert load_batch(path)[0].u_target == Fraction(1, 3)


def test_batch_skips_blank_lines(tmp_path):
    ts = TaskSet((Task(1, 0, 3, 3),))
    path = tmp_path / "gaps.jsonl"
    dump_batch([BatchEntry(id="x", seed=0, u_target=Fraction(1, 2), taskset=ts)], path)
    with open(path, "a") as fh:
        fh.write("\n")
    assert len(load_batch(path)) == 1
