from __future__ import annotations

from fractions import Fraction

import pytest

from conftest import corpus_size
from logic.configlp import opt_lp, verify_dual
from logic.core import (
    General,
    Instance,
    InstanceError,
    IterationCapExceeded,
    PartialSchedule,
    SizeClass,
    TwoSize,
    VariantPreconditionError,
    is_valid_schedule,
    job_classes,
    makespan,
)
from logic.localsearch import (
    INFINITE_VALUE,
    BlockerKind,
    BlockerTree,
    InvariantViolation,
    Move,
    MoveCategory,
    MoveValue,
    SearchContractError,
    TerminationMonitor,
    build_certificate,
    check_tree_invariants,
    compute_s_i,
    enumerate_moves,
    extend_schedule,
    insertion_order,
    move_value,
    schedule_at,
    solve,
    termination_measure,
)
from logic.solver_config import SolverConfig
from logic.toolkit import GenSpec, brute_force_opt, gen_chain, gen_random, gen_two_size, gen_two_size_planted
from logic.trace import BlockerAdded, BlockersRemoved, JobAssigned, MoveChosen, Stuck, TraceRecorder, replay

DEBUG = SolverConfig(debug_checks=True)


def _e1_before_last_insertion(e1):
    schedule = PartialSchedule(e1)
    for job in (0, 1):
        assert extend_schedule(schedule, job, 3, General(), config=DEBUG).extended
    return schedule


def test_e1_at_three_gets_stuck_with_known_certificate(e1):
    schedule = _e1_before_last_insertion(e1)
    assert schedule.assignment == (1, 0, None)

    outcome = extend_schedule(schedule, 2, 3, General(), config=DEBUG)

    assert not outcome.extended
    certificate = outcome.certificate
    assert certificate.scale == 51
    assert certificate.y == (33, 33)
    assert certificate.z == (33, 33, 33)
    assert sum(certificate.y) == 66 < sum(certificate.z) == 99
    assert verify_dual(e1, 3, certificate.to_dual_prices()).certifies_infeasibility
    assert isinstance(outcome.events[-1], Stuck)


def test_e1_trace_has_four_blocker_events_and_decreasing_measure(e1):
    recorder = TraceRecorder()
    monitor = TerminationMonitor(strict=True)
    run = schedule_at(e1, 3, "general", config=DEBUG, recorder=recorder, monitor=monitor)

    assert run.stuck and run.stuck_job == 2
    assert run.dual_check.certifies_infeasibility
    blocker_events = [e for e in recorder.events if isinstance(e, (BlockerAdded, BlockersRemoved))]
    assert [type(e).__name__ for e in blocker_events] == [
        "BlockerAdded",
        "BlockersRemoved",
        "BlockerAdded",
        "BlockerAdded",
    ]
    assert all(e.kind == "big" for e in blocker_events if isinstance(e, BlockerAdded))
    assert monitor.checkpoints == 3
    assert monitor.violations == 0


def test_stuck_on_e1_moves_exclude_big_blocker_machines(e1):
    schedule = _e1_before_last_insertion(e1)
    outcome = extend_schedule(schedule, 2, 3, General())
    tree = outcome.tree
    assert tree.big_machines == {0, 1}
    assert enumerate_moves(schedule, tree, 3, General()) == []


def test_insertion_on_empty_machine_is_one_valid_move():
    instance = Instance.build(2, [(3, [1])])
    schedule = PartialSchedule(instance)
    outcome = extend_schedule(schedule, 0, 3, General())
    assert outcome.extended
    assert outcome.iterations == 1
    assert [type(e) for e in outcome.events] == [MoveChosen, JobAssigned]
    assert outcome.events[0].category == MoveCategory.VALID.value
    assert schedule.machine_of(0) == 1


def test_extend_rejects_assigned_job(e1):
    schedule = PartialSchedule.from_assignment(e1, [0, None, None])
    with pytest.raises(SearchContractError):
        extend_schedule(schedule, 0, 4, General())


def test_two_size_requires_big_size_equal_to_target(e2):
    schedule = PartialSchedule(e2)
    with pytest.raises(VariantPreconditionError):
        extend_schedule(schedule, 0, 7, TwoSize(small_size=2))


def test_event_cap_is_reported(e1):
    schedule = PartialSchedule.from_assignment(e1, [0, None, None])
    with pytest.raises(IterationCapExceeded):
        extend_schedule(schedule, 1, 3, General(), config=SolverConfig(event_cap=1))


def test_event_cap_counts_emitted_events(e1):
    # Inserting job 1 emits move+block, then move+assign+block-, then move+assign: 7 events.
    schedule = PartialSchedule.from_assignment(e1, [0, None, None])
    with pytest.raises(IterationCapExceeded, match="5 trace events"):
        extend_schedule(schedule, 1, 3, General(), config=SolverConfig(event_cap=5))

    schedule = PartialSchedule.from_assignment(e1, [0, None, None])
    outcome = extend_schedule(schedule, 1, 3, General(), config=SolverConfig(event_cap=6))
    assert outcome.extended
    assert len(outcome.events) == 7
    assert outcome.iterations == 3


def test_compute_s_i_examples():
    instance = Instance.build(2, [(1, [0, 1]), (1, [0])])
    schedule = PartialSchedule.from_assignment(instance, [0, 0])
    classes = job_classes(instance, 10, General())
    tree = BlockerTree(new_job=1)
    assert compute_s_i(schedule, tree, 0, classes) == {1}

    tree.add(BlockerKind.SMALL, 1, [], 0, MoveValue(1, 1, 0), schedule)
    assert compute_s_i(schedule, tree, 0, classes) == {0, 1}


def test_two_size_small_move_into_small_blocker_machine_is_absent():
    instance = Instance.build(2, [(2, [0, 1]), (2, [1])])
    variant = TwoSize(small_size=2)
    schedule = PartialSchedule.from_assignment(instance, [0, None])
    tree = BlockerTree(new_job=1)
    tree.add(BlockerKind.SMALL, 1, [], 0, MoveValue(1, 0, 0), schedule)
    moves = enumerate_moves(schedule, tree, 6, variant, classes=(SizeClass.SMALL, SizeClass.SMALL))
    assert all(move.machine != 1 for move in moves)


def test_huge_job_to_machine_with_medium_job_is_potential_but_not_valid():
    instance = Instance.build(2, [(14, [0, 1]), (10, [1]), (10, [1])])
    schedule = PartialSchedule.from_assignment(instance, [None, 1, 1])
    tree = BlockerTree(new_job=0)
    moves = {(m.job, m.machine): m for m in enumerate_moves(schedule, tree, 17, General())}
    assert moves[(0, 0)].category is MoveCategory.VALID
    to_mediums = moves[(0, 1)]
    assert to_mediums.potential is MoveCategory.HUGE_TO_MEDIUM
    assert to_mediums.value == MoveValue(5, 2, 0)


def test_move_value_encodings():
    instance = Instance.build(2, [(3, [0, 1]), (7, [1])])
    schedule = PartialSchedule.from_assignment(instance, [0, 1])
    small = Move(0, 1, MoveCategory.SMALL_MOVE, MoveValue(0), MoveCategory.SMALL_MOVE)
    assert move_value(small, schedule, 17, General()) == MoveValue(1, 3, 7)
    valid = Move(0, 1, MoveCategory.VALID, MoveValue(0), MoveCategory.SMALL_MOVE)
    assert move_value(valid, schedule, 17, General()) == MoveValue(0, 0, 0)
    assert MoveValue(1, 3, 7) < MoveValue(2, 0, 0) < MoveValue(5, 1, 0)


def test_termination_measure_grows_smaller_when_blocker_added(e1):
    schedule = PartialSchedule.from_assignment(e1, [0, None, None])
    tree = BlockerTree(new_job=1)
    empty = termination_measure(tree)
    assert empty == (INFINITE_VALUE,)
    tree.add(BlockerKind.BIG, 0, [0], 0, MoveValue(2), schedule)
    assert termination_measure(tree) < empty


def test_build_certificate_root_only_huge_job():
    instance = Instance.build(1, [(17, [0]), (9, [0]), (9, [0])])
    schedule = PartialSchedule.from_assignment(instance, [None, 0, 0])
    tree = BlockerTree(new_job=0)
    assert enumerate_moves(schedule, tree, 17, General()) == []
    certificate = build_certificate(schedule, tree, 17, General())
    assert certificate.z == (187, 153, 153)
    assert certificate.y == (306,)
    assert sum(certificate.y) == sum(certificate.z) - certificate.z[0]
    assert verify_dual(instance, 17, certificate.to_dual_prices()).certifies_infeasibility


def test_build_certificate_requires_stuck_state(e1):
    schedule = PartialSchedule(e1)
    with pytest.raises(SearchContractError):
        build_certificate(schedule, BlockerTree(new_job=0), 4, General())


def test_check_tree_invariants_detects_reassigned_blocked_job(e1):
    schedule = PartialSchedule.from_assignment(e1, [0, 0, None])
    tree = BlockerTree(new_job=2)
    tree.add(BlockerKind.SMALL, 0, [0, 1], 0, MoveValue(1), schedule)
    classes = job_classes(e1, 4, General())
    check_tree_invariants(tree, schedule, classes, General())
    schedule.assign(0, 1)
    with pytest.raises(InvariantViolation, match="moved while blocked"):
        check_tree_invariants(tree, schedule, classes, General())


def test_solve_worked_examples(e1, e2):
    first = solve(e1)
    assert (first.T, first.makespan, first.ratio) == (4, 4, Fraction(1))

    two_size = solve(e2)
    assert two_size.variant == TwoSize(small_size=2)
    assert two_size.T == 6
    assert 3 * two_size.makespan <= 5 * 6 + 3 * 2

    general = solve(e2, "general")
    assert general.makespan == 6
    assert general.ratio == Fraction(1)


def test_solve_single_job_and_empty_instance():
    result = solve(Instance.build(1, [(7, [0])]))
    assert (result.T, result.makespan) == (7, 7)
    empty = solve(Instance.build(2, []))
    assert empty.makespan == 0 and empty.ratio == Fraction(1)


def test_schedule_at_rejects_target_below_largest_job():
    with pytest.raises(InstanceError):
        schedule_at(Instance.build(1, [(5, [0])]), 4)


def test_trace_replays_to_final_schedule():
    instance = gen_chain(5, 8)
    recorder = TraceRecorder()
    result = solve(instance, config=DEBUG, recorder=recorder)
    assert replay(recorder.events, instance.job_count) == list(result.schedule.assignment)
    assert any(isinstance(e, BlockerAdded) and e.kind == "big" for e in recorder.events)


def _planted_spec(seed: int) -> GenSpec:
    machines = 2 + seed % 4
    big_count = 1 + seed % (machines - 1)
    small_size = 1 + seed % 3
    big_size = 6 + seed % 5
    room = (machines - big_count) * (big_size // small_size)
    return GenSpec(
        kind="two-size-planted",
        machines=machines,
        small_size=small_size,
        big_size=big_size,
        big_count=big_count,
        small_count=1 + seed % room,
        density=0.3 + 0.7 * ((seed * 7) % 10) / 9,
        seed=seed,
    )


def _overloaded_two_size_spec(seed: int) -> GenSpec:
    # A big job on every machine plus more small load than the bound leaves room for.
    machines = 2 + seed % 3
    small_size = 1 + seed % 3
    big_size = small_size + 3 + seed % 4
    return GenSpec(
        kind="two-size",
        machines=machines,
        small_size=small_size,
        big_size=big_size,
        big_count=machines,
        small_count=machines * (big_size // small_size + 2),
        density=0.4 + 0.6 * (seed % 2),
        seed=seed,
    )


def test_general_guarantee_on_random_corpus():
    for seed in range(corpus_size(200)):
        spec = GenSpec(
            machines=2 + seed % 5,
            jobs=4 + seed % 17,
            size_max=20,
            density=0.3 + 0.7 * ((seed * 13) % 10) / 9,
            seed=seed,
        )
        instance = gen_random(spec)
        result = solve(instance, "general")
        assert 17 * result.makespan <= 33 * result.T
        assert is_valid_schedule(result.schedule, result.T, General())
        assert result.measure_violations == 0
        if instance.job_count:
            assert result.measure_checkpoints == result.blockers_added
        if instance.job_count <= 9:
            assert result.T <= brute_force_opt(instance) <= result.makespan


def test_two_size_guarantee_on_planted_corpus():
    for seed in range(corpus_size(60)):
        spec = _planted_spec(seed)
        instance = gen_two_size_planted(spec)
        result = solve(instance, "two-size")
        assert result.T == spec.big_size
        assert 3 * result.makespan <= 5 * result.T + 3 * spec.small_size
        assert is_valid_schedule(result.schedule, result.T, result.variant)
        assert result.measure_violations == 0


def test_two_size_debug_corpus_keeps_invariants():
    for seed in range(corpus_size(20)):
        spec = _planted_spec(seed + 1000)
        instance = gen_two_size_planted(spec)
        monitor = TerminationMonitor(strict=True)
        run = schedule_at(instance, spec.big_size, "two-size", config=DEBUG, monitor=monitor)
        assert not run.stuck
        assert monitor.violations == 0
        assert 3 * makespan(run.schedule) <= 5 * spec.big_size + 3 * spec.small_size


def test_two_size_certificates_verify_exactly():
    stuck = 0
    for seed in range(corpus_size(30)):
        spec = _overloaded_two_size_spec(seed)
        instance = gen_two_size(spec)
        run = schedule_at(instance, spec.big_size, "two-size", config=DEBUG)
        assert run.stuck
        assert run.certificate.scale == 3 * spec.big_size
        assert run.dual_check.certifies_infeasibility
        assert run.measure_violations == 0
        stuck += 1

    for seed in range(corpus_size(40)):
        spec = GenSpec(
            kind="two-size",
            machines=2 + seed % 3,
            small_size=1 + seed % 3,
            big_size=6 + seed % 4,
            big_count=1 + seed % 3,
            small_count=4 + seed % 9,
            density=0.4 + 0.6 * (seed % 2),
            seed=seed,
        )
        instance = gen_two_size(spec)
        if opt_lp(instance) <= spec.big_size:
            continue
        run = schedule_at(instance, spec.big_size, "two-size", config=DEBUG)
        if run.stuck:
            stuck += 1
            assert run.dual_check.certifies_infeasibility
        else:
            assert 3 * makespan(run.schedule) <= 5 * spec.big_size + 3 * spec.small_size
    assert stuck >= corpus_size(30)


class _SmallSetWatcher(TraceRecorder):
    """Mirrors the blocker tree from the event stream and compares ``S_i`` after every event."""

    def __init__(self, schedule: PartialSchedule, new_job: int, classes) -> None:
        super().__init__()
        self.schedule = schedule
        self.classes = classes
        self.tree = BlockerTree(new_job)
        self.compared = 0
        self.previous = self._snapshot()

    def _snapshot(self):
        machines = range(self.schedule.instance.machine_count)
        return (
            self.tree.small_machines,
            {machine: self.schedule.jobs_on(machine) for machine in machines},
            {machine: compute_s_i(self.schedule, self.tree, machine, self.classes) for machine in machines},
        )

    def emit(self, event) -> None:
        super().emit(event)
        if isinstance(event, BlockerAdded):
            self.tree.add(
                BlockerKind(event.kind), event.machine, event.jobs, event.parent, MoveValue(*event.value), self.schedule
            )
        elif isinstance(event, BlockersRemoved):
            self.tree.remove_from(event.from_seq)
        current = self._snapshot()
        small_before, jobs_before, s_before = self.previous
        small_now, jobs_now, s_now = current
        if small_before == small_now:
            for machine, jobs in jobs_now.items():
                if jobs == jobs_before[machine]:
                    assert s_now[machine] == s_before[machine], (event, machine)
                    self.compared += 1
        self.previous = current


def _watch_small_sets(instance: Instance, T: int, variant) -> int:
    classes = job_classes(instance, T, variant)
    schedule = PartialSchedule(instance)
    compared = 0
    for job in insertion_order(instance):
        watcher = _SmallSetWatcher(schedule, job, classes)
        outcome = extend_schedule(schedule, job, T, variant, config=DEBUG, recorder=watcher, classes=classes)
        compared += watcher.compared
        if not outcome.extended:
            assert watcher.tree.small_machines == outcome.tree.small_machines
            break
    return compared


def test_small_sets_stay_put_while_small_blockers_are_unchanged():
    compared = 0
    for seed in range(corpus_size(20)):
        instance = gen_random(GenSpec(machines=3, jobs=10, size_max=12, density=0.5, seed=seed))
        compared += _watch_small_sets(instance, max(instance.max_size, opt_lp(instance) - 1), General())
    for seed in range(corpus_size(20)):
        spec = _overloaded_two_size_spec(seed)
        compared += _watch_small_sets(gen_two_size(spec), spec.big_size, TwoSize(small_size=spec.small_size))
    assert compared > 0


def test_certificates_below_opt_lp_verify_exactly(e1):
    runs = [(e1, 3)]
    for seed in range(corpus_size(24)):
        # machines + 1 jobs of size 2: at T = 3 every job is big, so one is always left over.
        machines = 2 + seed % 4
        tight = gen_random(GenSpec(machines=machines, jobs=machines + 1, size_min=2, size_max=2, density=0.6, seed=seed))
        runs.append((tight, 3))
    for seed in range(corpus_size(60)):
        mixed = gen_random(GenSpec(machines=2 + seed % 3, jobs=5 + seed % 6, size_max=12, density=0.5, seed=seed))
        runs.append((mixed, opt_lp(mixed) - 1))

    stuck = 0
    for instance, T in runs:
        if T < instance.max_size:
            continue
        run = schedule_at(instance, T, "general", config=DEBUG)
        assert run.measure_violations == 0
        if run.stuck:
            stuck += 1
            assert run.dual_check.certifies_infeasibility
            certificate = run.certificate
            assert sum(certificate.y) < sum(certificate.z)
        else:
            assert 17 * makespan(run.schedule) <= 33 * T
    assert stuck >= 20


def test_debug_corpus_keeps_invariants():
    for seed in range(corpus_size(50)):
        instance = gen_random(GenSpec(machines=3, jobs=9, size_max=15, density=0.6, seed=seed))
        monitor = TerminationMonitor(strict=True)
        run = schedule_at(instance, opt_lp(instance), "general", config=DEBUG, monitor=monitor)
        assert not run.stuck
        assert monitor.violations == 0
