"""Local-search schedulers driven by a tree of blockers.

Two variants share one loop:

* the two-size algorithm for instances with sizes ``s < b = T`` (guarantee
  ``makespan <= 5/3 T + s``),
* the general algorithm for arbitrary integer sizes (guarantee
  ``makespan <= 33/17 T``).

A run inserts one unassigned job at a time. Each insertion grows a tree of
blockers rooted at the new job and repeatedly applies the potential move of
minimum lexicographic value. When no potential move is left, the tree and the
schedule yield an integral dual certificate proving the configuration LP
infeasible at ``T``.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

from .configlp import DualCheck, DualPrices, opt_lp, verify_dual
from .core import (
    General,
    Instance,
    InstanceError,
    IterationCapExceeded,
    PartialSchedule,
    SizeClass,
    TwoSize,
    Variant,
    guarantee_holds,
    is_valid_schedule,
    job_classes,
    load_within_bound,
    makespan,
    movable_machines,
    resolve_variant,
    variant_to_mapping,
)
from .solver_config import SolverConfig, load_solver_config
from .trace import (
    BlockerAdded,
    BlockersRemoved,
    JobAssigned,
    MoveChosen,
    Stuck,
    TraceEvent,
    TraceRecorder,
)

logger = logging.getLogger(__name__)


class SearchContractError(RuntimeError):
    """Raised when a search operation is called outside its precondition."""


class InvariantViolation(RuntimeError):
    """Raised when a structural property of the search is broken."""


class GuaranteeViolation(RuntimeError):
    """Raised when a finished schedule misses the variant's makespan bound."""


class StuckAtFeasibleTarget(RuntimeError):
    """The search got stuck at ``T = OPT_LP``, where the LP is feasible.

    The certificate and its check are attached: a certificate that verifies
    points at the LP, one that does not points at the search.
    """

    def __init__(self, T: int, job: int, certificate: "DualCertificate", check: DualCheck) -> None:
        side = "LP verdict" if check.certifies_infeasibility else "search"
        super().__init__(f"local search stuck on job {job} at feasible T={T} (suspect: {side})")
        self.T = T
        self.job = job
        self.certificate = certificate
        self.check = check


class MoveValue(NamedTuple):
    """Lexicographic value of a move; smaller is preferred."""

    rank: int
    k1: int = 0
    k2: int = 0


VALID_VALUE = MoveValue(0, 0, 0)
ROOT_VALUE = MoveValue(-1, 0, 0)
INFINITE_VALUE = MoveValue(sys.maxsize, 0, 0)


class MoveCategory(str, Enum):
    VALID = "valid"
    SMALL_MOVE = "small"
    BIG_TO_SMALL = "big-to-small"
    BIG_TO_BIG = "big-to-big"
    MEDIUM_LARGE_TO_BIG = "medium/large-to-big"
    HUGE_TO_SMALL = "huge-to-small"
    HUGE_TO_BIG = "huge-to-big"
    HUGE_TO_MEDIUM = "huge-to-medium"


class BlockerKind(str, Enum):
    ROOT = "root"
    SMALL = "small"
    BIG = "big"
    MEDIUM = "medium"


_SMALL_BLOCKING = {MoveCategory.SMALL_MOVE, MoveCategory.BIG_TO_SMALL, MoveCategory.HUGE_TO_SMALL}
_BIG_BLOCKING = {MoveCategory.BIG_TO_BIG, MoveCategory.MEDIUM_LARGE_TO_BIG, MoveCategory.HUGE_TO_BIG}


@dataclass(frozen=True)
class Move:
    """Relocation of ``job`` to ``machine``.

    ``potential`` keeps the category the move qualified under; ``category`` is
    :attr:`MoveCategory.VALID` when applying the move keeps the schedule valid.
    """

    job: int
    machine: int
    category: MoveCategory
    value: MoveValue
    potential: MoveCategory

    @property
    def is_valid(self) -> bool:
        return self.category is MoveCategory.VALID

    @property
    def sort_key(self) -> Tuple[MoveValue, int, int]:
        return self.value, self.job, self.machine


@dataclass(frozen=True)
class Blocker:
    seq: int
    kind: BlockerKind
    machine: Optional[int]
    jobs: FrozenSet[int]
    parent: Optional[int]
    value: MoveValue
    placement: Tuple[Tuple[int, Optional[int]], ...] = ()


class BlockerTree:
    """Blockers in insertion order with parent links.

    Blockers are only removed as a suffix of the insertion order, so the list
    order is the ``seq`` order.
    """

    def __init__(self, new_job: int) -> None:
        self._blockers: List[Blocker] = []
        self._position: Dict[int, int] = {}
        self._owner: Dict[int, int] = {}
        self._next_seq = 0
        self._append(
            BlockerKind.ROOT,
            machine=None,
            jobs=frozenset({new_job}),
            parent=None,
            value=ROOT_VALUE,
            placement=((new_job, None),),
        )

    def _append(
        self,
        kind: BlockerKind,
        *,
        machine: Optional[int],
        jobs: FrozenSet[int],
        parent: Optional[int],
        value: MoveValue,
        placement: Tuple[Tuple[int, Optional[int]], ...],
    ) -> Blocker:
        blocker = Blocker(
            seq=self._next_seq,
            kind=kind,
            machine=machine,
            jobs=jobs,
            parent=parent,
            value=value,
            placement=placement,
        )
        self._next_seq += 1
        self._position[blocker.seq] = len(self._blockers)
        self._blockers.append(blocker)
        for job in jobs:
            self._owner[job] = blocker.seq
        return blocker

    @property
    def root(self) -> Blocker:
        return self._blockers[0]

    @property
    def blockers(self) -> Tuple[Blocker, ...]:
        return tuple(self._blockers)

    def __len__(self) -> int:
        return len(self._blockers)

    def __iter__(self):
        return iter(self._blockers)

    def add(
        self,
        kind: BlockerKind,
        machine: int,
        jobs: Iterable[int],
        parent: int,
        value: MoveValue,
        schedule: PartialSchedule,
    ) -> Blocker:
        if kind is BlockerKind.ROOT:
            raise SearchContractError("the root blocker is created with the tree")
        if parent not in self._position:
            raise SearchContractError(f"parent blocker {parent} is not in the tree")
        job_set = frozenset(jobs)
        placement = tuple((job, schedule.machine_of(job)) for job in sorted(job_set))
        return self._append(
            kind, machine=machine, jobs=job_set, parent=parent, value=value, placement=placement
        )

    def get(self, seq: int) -> Blocker:
        return self._blockers[self._position[seq]]

    def owner_of(self, job: int) -> Optional[Blocker]:
        seq = self._owner.get(job)
        return None if seq is None else self.get(seq)

    def remove_from(self, seq: int) -> List[Blocker]:
        """Remove the blocker *seq* and every blocker added after it."""

        position = self._position[seq]
        if position == 0:
            raise SearchContractError("the root blocker cannot be removed")
        removed = self._blockers[position:]
        del self._blockers[position:]
        for blocker in removed:
            del self._position[blocker.seq]
            for job in blocker.jobs:
                if self._owner.get(job) == blocker.seq:
                    del self._owner[job]
        return removed

    def machines(self, kind: Optional[BlockerKind] = None) -> FrozenSet[int]:
        """Machines of blockers of *kind*, or of all blockers."""

        return frozenset(
            blocker.machine
            for blocker in self._blockers
            if blocker.machine is not None and (kind is None or blocker.kind is kind)
        )

    @property
    def small_machines(self) -> FrozenSet[int]:
        return self.machines(BlockerKind.SMALL)

    @property
    def big_machines(self) -> FrozenSet[int]:
        return self.machines(BlockerKind.BIG)

    @property
    def medium_machines(self) -> FrozenSet[int]:
        return self.machines(BlockerKind.MEDIUM)

    @property
    def jobs(self) -> FrozenSet[int]:
        return frozenset(self._owner)


@dataclass(frozen=True)
class DualCertificate:
    """Integral dual prices scaled by ``scale`` (``3T`` or ``17T``)."""

    scale: int
    y: Tuple[int, ...]
    z: Tuple[int, ...]

    @property
    def gap(self) -> int:
        return sum(self.z) - sum(self.y)

    def to_dual_prices(self) -> DualPrices:
        return DualPrices(y=self.y, z=self.z)

    def to_mapping(self) -> Dict[str, object]:
        return {"scale": self.scale, "y": list(self.y), "z": list(self.z)}


class TerminationMonitor:
    """Asserts that the termination measure strictly decreases between checkpoints.

    A checkpoint is taken right after each blocker is added. With ``strict``
    set a violation raises :class:`InvariantViolation`; otherwise it is
    counted and logged.
    """

    def __init__(self, strict: bool = False) -> None:
        self.strict = strict
        self.checkpoints = 0
        self.violations = 0
        self.history: List[Tuple[MoveValue, ...]] = []
        self._last: Optional[Tuple[MoveValue, ...]] = None

    def start(self, measure: Tuple[MoveValue, ...]) -> None:
        self._last = measure

    def checkpoint(self, measure: Tuple[MoveValue, ...]) -> None:
        self.checkpoints += 1
        self.history.append(measure)
        if self._last is not None and not measure < self._last:
            self.violations += 1
            message = f"termination measure did not decrease: {self._last} -> {measure}"
            logger.error(message)
            if self.strict:
                raise InvariantViolation(message)
        self._last = measure


@dataclass
class ExtendOutcome:
    """Result of one insertion; the schedule is updated in place."""

    extended: bool
    schedule: PartialSchedule
    new_job: int
    events: List[TraceEvent]
    iterations: int
    blockers_added: int
    certificate: Optional[DualCertificate] = None
    tree: Optional[BlockerTree] = None


@dataclass
class SearchRun:
    """Insertion loop at a fixed ``T``: complete, or the first stuck state."""

    schedule: PartialSchedule
    T: int
    variant: Variant
    iterations: int
    blockers_added: int
    stuck_job: Optional[int] = None
    certificate: Optional[DualCertificate] = None
    dual_check: Optional[DualCheck] = None
    trace_summary: Dict[str, int] = field(default_factory=dict)
    measure_checkpoints: int = 0
    measure_violations: int = 0

    @property
    def stuck(self) -> bool:
        return self.stuck_job is not None


@dataclass(frozen=True)
class SolveResult:
    schedule: PartialSchedule
    T: int
    makespan: int
    ratio: Fraction
    variant: Variant
    iterations: int
    blockers_added: int
    trace_summary: Dict[str, int]
    measure_checkpoints: int = 0
    measure_violations: int = 0

    @property
    def ratio_num(self) -> int:
        return self.ratio.numerator

    @property
    def ratio_den(self) -> int:
        return self.ratio.denominator


# ---------------------------------------------------------------------------
# Move taxonomy
# ---------------------------------------------------------------------------


def _has_big_job(schedule: PartialSchedule, machine: int, classes: Sequence[SizeClass]) -> bool:
    return any(classes[job].is_big for job in schedule.jobs_on(machine))


def _big_job_on(schedule: PartialSchedule, machine: int, classes: Sequence[SizeClass]) -> int:
    big_jobs = [job for job in schedule.jobs_on(machine) if classes[job].is_big]
    if len(big_jobs) != 1:
        raise InvariantViolation(f"machine {machine} carries {len(big_jobs)} big jobs")
    return big_jobs[0]


def _size_of(schedule: PartialSchedule, jobs: Iterable[int]) -> int:
    return sum(schedule.instance.jobs[job].size for job in jobs)


def compute_s_i(
    schedule: PartialSchedule,
    tree: BlockerTree,
    machine: int,
    classes: Sequence[SizeClass],
) -> FrozenSet[int]:
    """Small jobs on *machine* whose alternative machines all lie in ``M_S``."""

    small_machines = tree.small_machines
    return frozenset(
        job
        for job in schedule.jobs_on(machine)
        if classes[job] is SizeClass.SMALL and movable_machines(job, schedule) <= small_machines
    )


def _two_size_category(
    schedule: PartialSchedule,
    tree: BlockerTree,
    job: int,
    machine: int,
    T: int,
    variant: TwoSize,
    classes: Sequence[SizeClass],
) -> Optional[MoveCategory]:
    if classes[job] is SizeClass.SMALL:
        return None if machine in tree.small_machines else MoveCategory.SMALL_MOVE
    if machine in tree.machines():
        return None
    stuck_small = _size_of(schedule, compute_s_i(schedule, tree, machine, classes))
    if 3 * stuck_small > 2 * T + 3 * variant.small_size:
        return None
    if _has_big_job(schedule, machine, classes):
        return MoveCategory.BIG_TO_BIG
    return MoveCategory.BIG_TO_SMALL


def _general_category(
    schedule: PartialSchedule,
    tree: BlockerTree,
    job: int,
    machine: int,
    T: int,
    classes: Sequence[SizeClass],
) -> Optional[MoveCategory]:
    job_class = classes[job]
    if job_class is SizeClass.SMALL:
        return None if machine in tree.small_machines else MoveCategory.SMALL_MOVE

    if job_class in (SizeClass.MEDIUM, SizeClass.LARGE):
        if job_class is SizeClass.MEDIUM:
            blocked = machine in tree.machines()
        else:
            blocked = machine in tree.big_machines or machine in tree.small_machines
        if blocked:
            return None
        if _has_big_job(schedule, machine, classes):
            return MoveCategory.MEDIUM_LARGE_TO_BIG
        return MoveCategory.SMALL_MOVE

    if machine in tree.machines():
        return None
    size = schedule.instance.jobs[job].size
    stuck_small = _size_of(schedule, compute_s_i(schedule, tree, machine, classes))
    medium = _size_of(
        schedule, (other for other in schedule.jobs_on(machine) if classes[other] is SizeClass.MEDIUM)
    )
    if 17 * (size + stuck_small + medium) <= 33 * T:
        if _has_big_job(schedule, machine, classes):
            return MoveCategory.HUGE_TO_BIG
        return MoveCategory.HUGE_TO_SMALL
    if 17 * (size + stuck_small) <= 33 * T:
        return MoveCategory.HUGE_TO_MEDIUM
    return None


def _is_valid_after(
    schedule: PartialSchedule,
    job: int,
    machine: int,
    T: int,
    variant: Variant,
    classes: Sequence[SizeClass],
) -> bool:
    # Only the target machine gains load; the rest of a valid schedule stays valid.
    size = schedule.instance.jobs[job].size
    if not load_within_bound(schedule.load(machine) + size, T, variant):
        return False
    return not (classes[job].is_big and _has_big_job(schedule, machine, classes))


def move_value(move: Move, schedule: PartialSchedule, T: int, variant: Variant) -> MoveValue:
    """Return the lexicographic value of *move* under *variant*."""

    if move.category is MoveCategory.VALID:
        return VALID_VALUE
    load = schedule.load(move.machine)
    category = move.category
    if isinstance(variant, TwoSize):
        if category is MoveCategory.SMALL_MOVE:
            return MoveValue(1, load, 0)
        if category is MoveCategory.BIG_TO_SMALL:
            return MoveValue(2, load, 0)
        if category is MoveCategory.BIG_TO_BIG:
            return MoveValue(3, 0, 0)
        raise SearchContractError(f"{category.value} moves do not exist in the two-size variant")

    if category is MoveCategory.SMALL_MOVE:
        return MoveValue(1, schedule.instance.jobs[move.job].size, load)
    if category is MoveCategory.MEDIUM_LARGE_TO_BIG:
        return MoveValue(2, 0, 0)
    if category is MoveCategory.HUGE_TO_SMALL:
        return MoveValue(3, load, 0)
    if category is MoveCategory.HUGE_TO_BIG:
        return MoveValue(4, 0, 0)
    if category is MoveCategory.HUGE_TO_MEDIUM:
        classes = job_classes(schedule.instance, T, variant)
        mediums = sum(1 for job in schedule.jobs_on(move.machine) if classes[job] is SizeClass.MEDIUM)
        return MoveValue(5, mediums, 0)
    raise SearchContractError(f"{category.value} moves do not exist in the general variant")


def enumerate_moves(
    schedule: PartialSchedule,
    tree: BlockerTree,
    T: int,
    variant: Variant,
    classes: Optional[Sequence[SizeClass]] = None,
) -> List[Move]:
    """Return every potential move of a job in the tree, ordered by job then machine."""

    if classes is None:
        classes = job_classes(schedule.instance, T, variant)
    moves: List[Move] = []
    for job in sorted(tree.jobs):
        for machine in sorted(movable_machines(job, schedule)):
            if isinstance(variant, TwoSize):
                potential = _two_size_category(schedule, tree, job, machine, T, variant, classes)
            else:
                potential = _general_category(schedule, tree, job, machine, T, classes)
            if potential is None:
                continue
            category = potential
            if _is_valid_after(schedule, job, machine, T, variant, classes):
                category = MoveCategory.VALID
            draft = Move(job, machine, category, VALID_VALUE, potential)
            moves.append(
                Move(job, machine, category, move_value(draft, schedule, T, variant), potential)
            )
    return moves


# ---------------------------------------------------------------------------
# Certificates and invariants
# ---------------------------------------------------------------------------


def build_certificate(
    schedule: PartialSchedule,
    tree: BlockerTree,
    T: int,
    variant: Variant,
    classes: Optional[Sequence[SizeClass]] = None,
) -> DualCertificate:
    """Build the scaled dual certificate of a stuck state.

    Big jobs in the tree are priced with rounded-down sizes (``2/3`` or
    ``11/17``), medium ones with ``9/17``, and small jobs in the tree or
    without potential moves with their size. Machines of small blockers cost
    one unit; every other machine costs the prices of its jobs.
    """

    if classes is None:
        classes = job_classes(schedule.instance, T, variant)
    if enumerate_moves(schedule, tree, T, variant, classes):
        raise SearchContractError("a certificate needs a state without potential moves")

    two_size = isinstance(variant, TwoSize)
    scale = (3 if two_size else 17) * T
    small_factor = 3 if two_size else 17
    big_price = 2 * T if two_size else 11 * T
    medium_price = 9 * T

    tree_jobs = tree.jobs
    small_machines = tree.small_machines
    z: List[int] = []
    for job in schedule.instance.jobs:
        job_class = classes[job.id]
        if job_class is SizeClass.SMALL:
            stuck = movable_machines(job.id, schedule) <= small_machines
            z.append(small_factor * job.size if job.id in tree_jobs or stuck else 0)
        elif job.id not in tree_jobs:
            z.append(0)
        elif job_class.is_big:
            z.append(big_price)
        else:
            z.append(medium_price)

    y = tuple(
        scale if machine in small_machines else sum(z[job] for job in schedule.jobs_on(machine))
        for machine in range(schedule.instance.machine_count)
    )
    return DualCertificate(scale=scale, y=y, z=tuple(z))


def termination_measure(tree: BlockerTree) -> Tuple[MoveValue, ...]:
    """Values of the non-root blockers in insertion order, closed by infinity."""

    return tuple(blocker.value for blocker in tree.blockers[1:]) + (INFINITE_VALUE,)


def check_tree_invariants(
    tree: BlockerTree,
    schedule: PartialSchedule,
    classes: Sequence[SizeClass],
    variant: Variant,
) -> None:
    """Raise :class:`InvariantViolation` when the tree is malformed."""

    seen_jobs: Dict[int, int] = {}
    seen_machines: Dict[Tuple[BlockerKind, int], int] = {}
    present = {blocker.seq for blocker in tree}
    for index, blocker in enumerate(tree):
        if index == 0:
            if blocker.kind is not BlockerKind.ROOT or blocker.machine is not None or blocker.parent is not None:
                raise InvariantViolation("first blocker must be the root")
        else:
            if blocker.kind is BlockerKind.ROOT or blocker.machine is None or blocker.parent is None:
                raise InvariantViolation(f"blocker {blocker.seq} looks like a second root")
            if blocker.parent not in present or blocker.parent >= blocker.seq:
                raise InvariantViolation(f"blocker {blocker.seq} has parent {blocker.parent}")
            key = (blocker.kind, blocker.machine)
            if key in seen_machines:
                raise InvariantViolation(
                    f"machine {blocker.machine} in two {blocker.kind.value} blockers"
                )
            seen_machines[key] = blocker.seq
        if isinstance(variant, TwoSize) and blocker.kind is BlockerKind.MEDIUM:
            raise InvariantViolation("medium blockers do not exist in the two-size variant")
        if blocker.kind is BlockerKind.BIG:
            if len(blocker.jobs) != 1 or not classes[next(iter(blocker.jobs))].is_big:
                raise InvariantViolation(f"big blocker {blocker.seq} must hold exactly one big job")
        if blocker.kind is BlockerKind.MEDIUM:
            if not blocker.jobs or any(classes[job] is not SizeClass.MEDIUM for job in blocker.jobs):
                raise InvariantViolation(f"medium blocker {blocker.seq} must hold medium jobs only")
        for job in blocker.jobs:
            if job in seen_jobs:
                raise InvariantViolation(f"job {job} in blockers {seen_jobs[job]} and {blocker.seq}")
            seen_jobs[job] = blocker.seq
        if blocker.kind is BlockerKind.ROOT:
            continue
        for job, machine in blocker.placement:
            if schedule.machine_of(job) != machine:
                raise InvariantViolation(f"job {job} moved while blocked by {blocker.seq}")


# ---------------------------------------------------------------------------
# Search loop
# ---------------------------------------------------------------------------


def _blocker_for(
    move: Move,
    tree: BlockerTree,
    schedule: PartialSchedule,
    classes: Sequence[SizeClass],
) -> Tuple[BlockerKind, FrozenSet[int]]:
    machine = move.machine
    if move.category in _SMALL_BLOCKING:
        return BlockerKind.SMALL, frozenset(schedule.jobs_on(machine)) - tree.jobs
    if move.category in _BIG_BLOCKING:
        return BlockerKind.BIG, frozenset({_big_job_on(schedule, machine, classes)})
    if move.category is MoveCategory.HUGE_TO_MEDIUM:
        mediums = frozenset(j for j in schedule.jobs_on(machine) if classes[j] is SizeClass.MEDIUM)
        return BlockerKind.MEDIUM, mediums
    raise SearchContractError(f"{move.category.value} moves do not add blockers")


def _debug_checks(
    tree: BlockerTree,
    schedule: PartialSchedule,
    T: int,
    variant: Variant,
    classes: Sequence[SizeClass],
) -> None:
    check_tree_invariants(tree, schedule, classes, variant)
    if not schedule.is_coherent():
        raise InvariantViolation("cached loads drifted from the assignment")
    if not is_valid_schedule(schedule, T, variant):
        raise InvariantViolation("schedule became invalid")


def extend_schedule(
    schedule: PartialSchedule,
    new_job: int,
    T: int,
    variant: Variant,
    *,
    config: Optional[SolverConfig] = None,
    recorder: Optional[TraceRecorder] = None,
    monitor: Optional[TerminationMonitor] = None,
    classes: Optional[Sequence[SizeClass]] = None,
    first_iteration: int = 1,
) -> ExtendOutcome:
    """Insert *new_job* into the valid partial *schedule* (updated in place).

    Raises
    ------
    SearchContractError
        If the job is already assigned.
    VariantPreconditionError
        If the two-size variant is used with a big size other than ``T``.
    IterationCapExceeded
        If the insertion has emitted ``config.event_cap`` trace events and
        still needs another step.
    """

    config = config or load_solver_config()
    instance = schedule.instance
    if schedule.machine_of(new_job) is not None:
        raise SearchContractError(f"job {new_job} is already assigned")
    if isinstance(variant, TwoSize):
        resolve_variant(instance, T, variant)
    if classes is None:
        classes = job_classes(instance, T, variant)

    tree = BlockerTree(new_job)
    monitor = monitor or TerminationMonitor(strict=config.debug_checks)
    monitor.start(termination_measure(tree))
    events: List[TraceEvent] = []

    def emit(event: TraceEvent) -> None:
        events.append(event)
        if recorder is not None:
            recorder.emit(event)

    iteration = first_iteration - 1
    blockers_added = 0
    while schedule.machine_of(new_job) is None:
        if len(events) >= config.event_cap:
            logger.error("Insertion of job %s emitted %s events without finishing", new_job, len(events))
            raise IterationCapExceeded(
                f"insertion of job {new_job} exceeded the cap of {config.event_cap} trace events"
            )
        iteration += 1

        moves = enumerate_moves(schedule, tree, T, variant, classes)
        if not moves:
            certificate = build_certificate(schedule, tree, T, variant, classes)
            emit(Stuck(iteration, new_job, certificate.scale, certificate.y, certificate.z))
            logger.debug("Job %s stuck at T=%s after %s iterations", new_job, T, iteration)
            return ExtendOutcome(
                extended=False,
                schedule=schedule,
                new_job=new_job,
                events=events,
                iterations=iteration - first_iteration + 1,
                blockers_added=blockers_added,
                certificate=certificate,
                tree=tree,
            )

        move = min(moves, key=lambda candidate: candidate.sort_key)
        logger.debug("it=%s move job %s -> %s (%s %s)", iteration, move.job, move.machine, move.category.value, tuple(move.value))
        emit(MoveChosen(iteration, move.job, move.machine, move.category.value, tuple(move.value)))

        if move.is_valid:
            owner = tree.owner_of(move.job)
            if owner is None:
                raise InvariantViolation(f"moved job {move.job} belongs to no blocker")
            schedule.assign(move.job, move.machine)
            emit(JobAssigned(iteration, move.job, move.machine))
            if owner.kind is not BlockerKind.ROOT:
                removed = tree.remove_from(owner.seq)
                emit(BlockersRemoved(iteration, owner.seq, len(removed)))
        else:
            parent = tree.owner_of(move.job)
            if parent is None:
                raise InvariantViolation(f"moved job {move.job} belongs to no blocker")
            kind, jobs = _blocker_for(move, tree, schedule, classes)
            blocker = tree.add(kind, move.machine, jobs, parent.seq, move.value, schedule)
            blockers_added += 1
            emit(
                BlockerAdded(
                    iteration,
                    blocker.seq,
                    blocker.kind.value,
                    move.machine,
                    tuple(sorted(blocker.jobs)),
                    parent.seq,
                    tuple(move.value),
                )
            )
            monitor.checkpoint(termination_measure(tree))

        if config.debug_checks:
            _debug_checks(tree, schedule, T, variant, classes)

    return ExtendOutcome(
        extended=True,
        schedule=schedule,
        new_job=new_job,
        events=events,
        iterations=iteration - first_iteration + 1,
        blockers_added=blockers_added,
    )


def insertion_order(instance: Instance) -> List[int]:
    """Jobs by descending size, ties by ascending id."""

    return sorted(range(instance.job_count), key=lambda job: (-instance.jobs[job].size, job))


def _count_events(events: Iterable[TraceEvent], summary: Dict[str, int]) -> None:
    for event in events:
        kind = event.to_mapping()["ev"]
        summary[kind] = summary.get(kind, 0) + 1


def schedule_at(
    instance: Instance,
    T: int,
    variant: Union[str, Variant] = "auto",
    *,
    order: Optional[Sequence[int]] = None,
    config: Optional[SolverConfig] = None,
    recorder: Optional[TraceRecorder] = None,
    monitor: Optional[TerminationMonitor] = None,
) -> SearchRun:
    """Run the insertion loop at an arbitrary integer *T*.

    Returns the complete schedule or the first stuck state together with its
    certificate and the exact check of that certificate.
    """

    config = config or load_solver_config()
    if instance.job_count and instance.max_size > T:
        raise InstanceError(f"job size {instance.max_size} exceeds the target makespan {T}")
    resolved = resolve_variant(instance, T, variant)
    classes = job_classes(instance, T, resolved)
    schedule = PartialSchedule(instance)
    monitor = monitor or TerminationMonitor(strict=config.debug_checks)
    summary: Dict[str, int] = {}
    iterations = 0
    blockers_added = 0

    for job in order if order is not None else insertion_order(instance):
        outcome = extend_schedule(
            schedule,
            job,
            T,
            resolved,
            config=config,
            recorder=recorder,
            monitor=monitor,
            classes=classes,
            first_iteration=iterations + 1,
        )
        iterations += outcome.iterations
        blockers_added += outcome.blockers_added
        _count_events(outcome.events, summary)
        if not outcome.extended:
            certificate = outcome.certificate
            check = verify_dual(instance, T, certificate.to_dual_prices())
            logger.info(
                "Stuck on job %s at T=%s (%s): certificate gap %s, verified=%s",
                job,
                T,
                resolved.name,
                certificate.gap,
                check.certifies_infeasibility,
            )
            return SearchRun(
                schedule=schedule,
                T=T,
                variant=resolved,
                iterations=iterations,
                blockers_added=blockers_added,
                stuck_job=job,
                certificate=certificate,
                dual_check=check,
                trace_summary=summary,
                measure_checkpoints=monitor.checkpoints,
                measure_violations=monitor.violations,
            )

    return SearchRun(
        schedule=schedule,
        T=T,
        variant=resolved,
        iterations=iterations,
        blockers_added=blockers_added,
        trace_summary=summary,
        measure_checkpoints=monitor.checkpoints,
        measure_violations=monitor.violations,
    )


def solve(
    instance: Instance,
    variant: Union[str, Variant] = "auto",
    *,
    config: Optional[SolverConfig] = None,
    recorder: Optional[TraceRecorder] = None,
    T: Optional[int] = None,
) -> SolveResult:
    """Schedule *instance* at ``T = OPT_LP`` and check the variant's guarantee.

    ``T`` may be passed when ``OPT_LP`` is already known.

    Raises
    ------
    StuckAtFeasibleTarget
        If the search gets stuck although the LP is feasible at ``T``.
    GuaranteeViolation
        If the final makespan misses the variant's bound.
    """

    config = config or load_solver_config()
    if T is None:
        T = opt_lp(instance, config=config)
    if instance.job_count == 0:
        empty = PartialSchedule(instance)
        return SolveResult(empty, 0, 0, Fraction(1), General(), 0, 0, {})

    run = schedule_at(instance, T, variant, config=config, recorder=recorder)
    if run.stuck:
        logger.error("Stuck at feasible T=%s; certificate %s", T, run.certificate.to_mapping())
        raise StuckAtFeasibleTarget(T, run.stuck_job, run.certificate, run.dual_check)

    span = makespan(run.schedule)
    if not guarantee_holds(span, T, run.variant):
        raise GuaranteeViolation(
            f"makespan {span} breaks the {run.variant.name} bound at T={T}"
        )
    ratio = Fraction(span, T)
    logger.info(
        "Solved %s jobs on %s machines: T=%s makespan=%s ratio=%s variant=%s iterations=%s",
        instance.job_count,
        instance.machine_count,
        T,
        span,
        ratio,
        variant_to_mapping(run.variant)["name"],
        run.iterations,
    )
    return SolveResult(
        schedule=run.schedule,
        T=T,
        makespan=span,
        ratio=ratio,
        variant=run.variant,
        iterations=run.iterations,
        blockers_added=run.blockers_added,
        trace_summary=run.trace_summary,
        measure_checkpoints=run.measure_checkpoints,
        measure_violations=run.measure_violations,
    )
