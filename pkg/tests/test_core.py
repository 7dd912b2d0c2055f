from __future__ import annotations

import random

import pytest

from logic.core import (
    General,
    Instance,
    InstanceError,
    PartialSchedule,
    ScheduleError,
    SizeClass,
    TwoSize,
    VariantPreconditionError,
    classify_general,
    guarantee_holds,
    instance_digest,
    is_valid_schedule,
    job_classes,
    makespan,
    movable_machines,
    resolve_variant,
)


@pytest.mark.parametrize(
    "size, T, expected",
    [
        (9, 17, SizeClass.SMALL),
        (10, 17, SizeClass.MEDIUM),
        (11, 17, SizeClass.LARGE),
        (13, 17, SizeClass.LARGE),
        (14, 17, SizeClass.HUGE),
        (1, 1, SizeClass.HUGE),
        (2, 4, SizeClass.SMALL),
        (2, 3, SizeClass.LARGE),
    ],
)
def test_classify_general_thresholds(size, T, expected):
    assert classify_general(size, T) is expected


def test_classification_partitions_sizes():
    for T in range(1, 201):
        for size in range(1, 201):
            cls = classify_general(size, T)
            assert cls.is_big == (17 * size >= 11 * T)
            if 17 * size <= 9 * T:
                assert cls is SizeClass.SMALL
            elif 17 * size < 11 * T:
                assert cls is SizeClass.MEDIUM


def test_instance_rejects_bad_jobs():
    with pytest.raises(InstanceError):
        Instance.build(2, [(0, [0])])
    with pytest.raises(InstanceError):
        Instance.build(2, [(3, [])])
    with pytest.raises(InstanceError):
        Instance.build(2, [(3, [2])])
    with pytest.raises(InstanceError):
        Instance.build(2, [(3, [0, 0])])
    with pytest.raises(InstanceError):
        Instance.build(0, [])


def test_eligible_jobs_per_machine(e1):
    assert e1.eligible_jobs(0) == (0, 1)
    assert e1.eligible_jobs(1) == (0, 2)


def test_instance_digest_is_stable(e1):
    same = Instance.build(2, [(2, [1, 0]), (2, [0]), (2, [1])])
    assert instance_digest(e1) == instance_digest(same)
    assert len(instance_digest(e1)) == 64


def test_movable_machines():
    instance = Instance.build(3, [(1, [0, 1]), (1, [0]), (1, [0, 1, 2])])
    schedule = PartialSchedule.from_assignment(instance, [0, 0, None])
    assert movable_machines(0, schedule) == {1}
    assert movable_machines(1, schedule) == frozenset()
    assert movable_machines(2, schedule) == {0, 1, 2}


def test_makespan_requires_complete_schedule(e1):
    schedule = PartialSchedule.from_assignment(e1, [0, 0, None])
    with pytest.raises(ScheduleError):
        makespan(schedule)
    schedule.assign(2, 1)
    assert makespan(schedule) == 4
    assert makespan(PartialSchedule(Instance.build(1, []))) == 0


def test_assign_rejects_ineligible_machine(e1):
    schedule = PartialSchedule(e1)
    with pytest.raises(ScheduleError):
        schedule.assign(1, 1)


def test_load_cache_stays_coherent_under_random_updates():
    rng = random.Random(7)
    instance = Instance.build(
        4,
        [(rng.randint(1, 9), rng.sample(range(4), rng.randint(1, 4))) for _ in range(12)],
    )
    schedule = PartialSchedule(instance)
    for _ in range(500):
        job = rng.randrange(instance.job_count)
        choices = list(instance.jobs[job].eligible_sorted) + [None]
        schedule.assign(job, rng.choice(choices))
        assert schedule.recompute_loads() == schedule.loads
    assert schedule.is_coherent()
    clone = schedule.copy()
    clone.assign(0, None)
    assert schedule.is_coherent() and clone.is_coherent()


def test_general_validity_boundaries():
    instance = Instance.build(2, [(11, [0]), (11, [0]), (33, [1])])
    schedule = PartialSchedule.from_assignment(instance, [None, None, 1])
    assert is_valid_schedule(schedule, 17, General())
    schedule.assign(0, 0)
    schedule.assign(1, 0)
    assert not is_valid_schedule(schedule, 17, General())


def test_two_size_validity_boundary():
    instance = Instance.build(1, [(6, [0])] + [(2, [0])] * 4)
    variant = TwoSize(small_size=2)
    schedule = PartialSchedule.from_assignment(instance, [0, 0, 0, 0, None])
    assert schedule.load(0) == 12
    assert is_valid_schedule(schedule, 6, variant)
    schedule.assign(4, 0)
    assert not is_valid_schedule(schedule, 6, variant)


def test_validity_is_monotone_in_target():
    rng = random.Random(3)
    for _ in range(200):
        instance = Instance.build(3, [(rng.randint(1, 12), rng.sample(range(3), rng.randint(1, 3))) for _ in range(6)])
        assignment = [rng.choice(job.eligible_sorted) for job in instance.jobs]
        schedule = PartialSchedule.from_assignment(instance, assignment)
        for T in range(instance.max_size, instance.total_size):
            if is_valid_schedule(schedule, T, General()):
                assert is_valid_schedule(schedule, T + 1, General())


def test_guarantee_holds_is_scaled_bound():
    assert guarantee_holds(33, 17, General())
    assert not guarantee_holds(34, 17, General())
    assert guarantee_holds(12, 6, TwoSize(small_size=2))
    assert not guarantee_holds(13, 6, TwoSize(small_size=2))


def test_resolve_variant(e1, e2):
    assert resolve_variant(e2, 6) == TwoSize(small_size=2)
    assert isinstance(resolve_variant(e2, 7), General)
    assert isinstance(resolve_variant(e1, 4), General)
    assert isinstance(resolve_variant(e2, 6, "general"), General)
    with pytest.raises(VariantPreconditionError):
        resolve_variant(e2, 7, "two-size")
    with pytest.raises(VariantPreconditionError):
        resolve_variant(e1, 4, "two-size")
    with pytest.raises(ValueError):
        resolve_variant(e1, 4, "fastest")


def test_two_size_classes_map_sizes(e2):
    classes = job_classes(e2, 6, TwoSize(small_size=2))
    assert classes == (SizeClass.HUGE, SizeClass.SMALL, SizeClass.SMALL, SizeClass.SMALL)
