"""Instance and schedule data model shared by the solver modules.

Sizes are positive integers and the target makespan ``T`` is carried
explicitly, so every threshold of the analysis (9/17, 11/17, 14/17, ``R`` and
``1 + R``) is an exact integer comparison after clearing denominators: by 17
for the general algorithm and by 3 for the two-size one.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import (
    Any,
    ClassVar,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

logger = logging.getLogger(__name__)

VARIANT_CHOICES = ("auto", "two-size", "general")


class InstanceError(ValueError):
    """Raised when an instance violates the data model."""


class ScheduleError(ValueError):
    """Raised when a schedule does not fit its instance."""


class VariantPreconditionError(ValueError):
    """Raised when the two-size algorithm is requested for an unsuitable instance."""


class GuardExceeded(RuntimeError):
    """Raised when an exhaustive oracle would exceed its size guard."""


class IterationCapExceeded(RuntimeError):
    """Raised when an iterative procedure hits its configured cap."""


@dataclass(frozen=True)
class Job:
    """A job of integer ``size`` that may only run on ``eligible`` machines."""

    id: int
    size: int
    eligible: FrozenSet[int]

    @property
    def eligible_sorted(self) -> Tuple[int, ...]:
        return tuple(sorted(self.eligible))


@dataclass(frozen=True)
class Instance:
    """Restricted assignment instance: ``p_ij`` is ``size`` or forbidden."""

    machine_count: int
    jobs: Tuple[Job, ...]

    def __post_init__(self) -> None:
        if isinstance(self.machine_count, bool) or not isinstance(self.machine_count, int):
            raise InstanceError("machine count must be an integer")
        if self.machine_count < 1:
            raise InstanceError("an instance needs at least one machine")
        for index, job in enumerate(self.jobs):
            if job.id != index:
                raise InstanceError(f"job ids must be dense, found {job.id} at position {index}")
            if isinstance(job.size, bool) or not isinstance(job.size, int) or job.size < 1:
                raise InstanceError(f"job {index}: size must be a positive integer, got {job.size!r}")
            if not job.eligible:
                raise InstanceError(f"job {index}: eligibility set is empty")
            for machine in job.eligible:
                if isinstance(machine, bool) or not isinstance(machine, int):
                    raise InstanceError(f"job {index}: machine index {machine!r} is not an integer")
                if not 0 <= machine < self.machine_count:
                    raise InstanceError(
                        f"job {index}: machine {machine} outside [0, {self.machine_count})"
                    )

    @classmethod
    def build(
        cls,
        machine_count: int,
        jobs: Iterable[Tuple[int, Iterable[int]]],
    ) -> "Instance":
        """Create an instance from ``(size, eligible machines)`` pairs."""

        built: List[Job] = []
        for index, (size, eligible) in enumerate(jobs):
            machines = list(eligible)
            if len(set(machines)) != len(machines):
                raise InstanceError(f"job {index}: eligibility list has duplicates")
            built.append(Job(id=index, size=size, eligible=frozenset(machines)))
        return cls(machine_count=machine_count, jobs=tuple(built))

    @property
    def job_count(self) -> int:
        return len(self.jobs)

    @property
    def sizes(self) -> Tuple[int, ...]:
        return tuple(job.size for job in self.jobs)

    @property
    def distinct_sizes(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.sizes)))

    @property
    def total_size(self) -> int:
        return sum(self.sizes)

    @property
    def max_size(self) -> int:
        return max(self.sizes, default=0)

    @cached_property
    def _machine_jobs(self) -> Tuple[Tuple[int, ...], ...]:
        per_machine: List[List[int]] = [[] for _ in range(self.machine_count)]
        for job in self.jobs:
            for machine in job.eligible:
                per_machine[machine].append(job.id)
        return tuple(tuple(sorted(ids)) for ids in per_machine)

    def eligible_jobs(self, machine: int) -> Tuple[int, ...]:
        """Return ids of jobs that may run on *machine*, ascending."""

        return self._machine_jobs[machine]

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "machines": self.machine_count,
            "jobs": [
                {"p": job.size, "eligible": list(job.eligible_sorted)} for job in self.jobs
            ],
        }


def instance_digest(instance: Instance) -> str:
    """Return a stable SHA-256 digest of the canonical instance JSON."""

    canonical = json.dumps(instance.to_mapping(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class SizeClass(str, Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"
    HUGE = "huge"

    @property
    def is_big(self) -> bool:
        return self in (SizeClass.LARGE, SizeClass.HUGE)


@dataclass(frozen=True)
class TwoSize:
    """Algorithm for instances with exactly two sizes ``s < b`` and ``b = T``."""

    small_size: int
    name: ClassVar[str] = "two-size"
    scale_factor: ClassVar[int] = 3


@dataclass(frozen=True)
class General:
    """Algorithm for arbitrary integer sizes."""

    name: ClassVar[str] = "general"
    scale_factor: ClassVar[int] = 17


Variant = Union[TwoSize, General]


def classify_general(size: int, T: int) -> SizeClass:
    """Classify *size* against the thresholds 9/17, 11/17 and 14/17 of ``T``."""

    scaled = 17 * size
    if scaled <= 9 * T:
        return SizeClass.SMALL
    if scaled < 11 * T:
        return SizeClass.MEDIUM
    if scaled < 14 * T:
        return SizeClass.LARGE
    return SizeClass.HUGE


def job_class(size: int, T: int, variant: Variant) -> SizeClass:
    if isinstance(variant, TwoSize):
        # b = T is huge under the general thresholds too.
        return SizeClass.SMALL if size == variant.small_size else SizeClass.HUGE
    return classify_general(size, T)


def job_classes(instance: Instance, T: int, variant: Variant) -> Tuple[SizeClass, ...]:
    """Return the size class of every job, indexed by job id."""

    return tuple(job_class(job.size, T, variant) for job in instance.jobs)


def load_within_bound(load: int, T: int, variant: Variant) -> bool:
    """Check ``load <= (1 + R) * T`` for the variant's ``R``."""

    if isinstance(variant, TwoSize):
        return 3 * load <= 5 * T + 3 * variant.small_size
    return 17 * load <= 33 * T


def guarantee_holds(makespan_value: int, T: int, variant: Variant) -> bool:
    """Return whether a complete schedule meets the variant's approximation bound."""

    return load_within_bound(makespan_value, T, variant)


class PartialSchedule:
    """Assignment of jobs to machines or TBD (``None``) with cached loads.

    The schedule also caches the job set of every machine. It is a
    single-owner mutable value; instances are shared read-only.
    """

    def __init__(self, instance: Instance) -> None:
        self.instance = instance
        self._assignment: List[Optional[int]] = [None] * instance.job_count
        self._loads: List[int] = [0] * instance.machine_count
        self._members: List[Set[int]] = [set() for _ in range(instance.machine_count)]

    @classmethod
    def from_assignment(
        cls,
        instance: Instance,
        assignment: Sequence[Optional[int]],
    ) -> "PartialSchedule":
        if len(assignment) != instance.job_count:
            raise ScheduleError(
                f"assignment lists {len(assignment)} jobs, instance has {instance.job_count}"
            )
        schedule = cls(instance)
        for job_id, machine in enumerate(assignment):
            if machine is not None:
                schedule.assign(job_id, machine)
        return schedule

    def copy(self) -> "PartialSchedule":
        clone = PartialSchedule(self.instance)
        clone._assignment = list(self._assignment)
        clone._loads = list(self._loads)
        clone._members = [set(members) for members in self._members]
        return clone

    def machine_of(self, job_id: int) -> Optional[int]:
        return self._assignment[job_id]

    def assign(self, job_id: int, machine: Optional[int]) -> None:
        """Set ``sigma(job) <- machine``; ``None`` makes the job TBD again."""

        job = self.instance.jobs[job_id]
        if machine is not None and machine not in job.eligible:
            raise ScheduleError(f"job {job_id} is not eligible on machine {machine}")
        previous = self._assignment[job_id]
        if previous == machine:
            return
        if previous is not None:
            self._loads[previous] -= job.size
            self._members[previous].discard(job_id)
        if machine is not None:
            self._loads[machine] += job.size
            self._members[machine].add(job_id)
        self._assignment[job_id] = machine

    def load(self, machine: int) -> int:
        return self._loads[machine]

    @property
    def loads(self) -> Tuple[int, ...]:
        return tuple(self._loads)

    @property
    def assignment(self) -> Tuple[Optional[int], ...]:
        return tuple(self._assignment)

    def jobs_on(self, machine: int) -> Tuple[int, ...]:
        return tuple(sorted(self._members[machine]))

    def unassigned(self) -> Tuple[int, ...]:
        return tuple(job_id for job_id, machine in enumerate(self._assignment) if machine is None)

    def is_complete(self) -> bool:
        return all(machine is not None for machine in self._assignment)

    def recompute_loads(self) -> Tuple[int, ...]:
        """Recompute loads from the assignment, ignoring the cache."""

        loads = [0] * self.instance.machine_count
        for job_id, machine in enumerate(self._assignment):
            if machine is not None:
                loads[machine] += self.instance.jobs[job_id].size
        return tuple(loads)

    def is_coherent(self) -> bool:
        if self.recompute_loads() != self.loads:
            return False
        for machine, members in enumerate(self._members):
            expected = {j for j, m in enumerate(self._assignment) if m == machine}
            if members != expected:
                return False
        return True

    def to_mapping(self) -> Dict[str, Any]:
        return {"assignment": list(self._assignment), "makespan": max(self._loads, default=0)}

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"PartialSchedule(assignment={self._assignment!r}, loads={self._loads!r})"


def movable_machines(job_id: int, schedule: PartialSchedule) -> FrozenSet[int]:
    """Return ``Gamma(j)`` without the job's current machine."""

    job = schedule.instance.jobs[job_id]
    current = schedule.machine_of(job_id)
    if current is None:
        return job.eligible
    return job.eligible - {current}


def makespan(schedule: PartialSchedule) -> int:
    """Return the maximum machine load of a complete schedule."""

    missing = schedule.unassigned()
    if missing:
        raise ScheduleError(f"jobs still unassigned: {list(missing)}")
    return max(schedule.loads, default=0)


def is_valid_schedule(schedule: PartialSchedule, T: int, variant: Variant) -> bool:
    """Check the load bound and the one-big-job rule on every machine."""

    classes = job_classes(schedule.instance, T, variant)
    for machine in range(schedule.instance.machine_count):
        if not load_within_bound(schedule.load(machine), T, variant):
            return False
        big_jobs = sum(1 for job_id in schedule.jobs_on(machine) if classes[job_id].is_big)
        if big_jobs > 1:
            return False
    return True


def two_size_pair(instance: Instance) -> Optional[Tuple[int, int]]:
    """Return ``(s, b)`` when the instance has exactly two distinct sizes."""

    sizes = instance.distinct_sizes
    if len(sizes) != 2:
        return None
    return sizes[0], sizes[1]


def resolve_variant(
    instance: Instance,
    T: int,
    requested: Union[str, TwoSize, General] = "auto",
) -> Variant:
    """Pick the algorithm variant for *instance* at target *T*.

    ``auto`` selects the two-size algorithm iff the instance has exactly two
    sizes ``s < b`` with ``b = T`` and falls back to the general algorithm
    otherwise. An explicit two-size request with unmet preconditions raises
    :class:`VariantPreconditionError`.
    """

    if isinstance(requested, General):
        return requested
    if isinstance(requested, TwoSize):
        pair = two_size_pair(instance)
        if pair is None or pair[0] != requested.small_size:
            raise VariantPreconditionError(
                f"instance sizes {list(instance.distinct_sizes)} do not match two-size s={requested.small_size}"
            )
        if pair[1] != T:
            raise VariantPreconditionError(f"two-size variant needs b = T, got b={pair[1]}, T={T}")
        return requested

    if requested not in VARIANT_CHOICES:
        raise ValueError(f"unknown variant {requested!r}; expected one of {VARIANT_CHOICES}")
    if requested == "general":
        return General()

    pair = two_size_pair(instance)
    if requested == "two-size":
        if pair is None:
            raise VariantPreconditionError(
                f"two-size variant needs exactly two sizes, found {list(instance.distinct_sizes)}"
            )
        if pair[1] != T:
            raise VariantPreconditionError(f"two-size variant needs b = T, got b={pair[1]}, T={T}")
        return TwoSize(small_size=pair[0])

    if pair is not None and pair[1] == T:
        return TwoSize(small_size=pair[0])
    logger.debug("Falling back to the general variant (sizes=%s, T=%s)", instance.distinct_sizes, T)
    return General()


def variant_to_mapping(variant: Variant) -> Dict[str, Any]:
    if isinstance(variant, TwoSize):
        return {"name": variant.name, "small_size": variant.small_size}
    return {"name": variant.name}
