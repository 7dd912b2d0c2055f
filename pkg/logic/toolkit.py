"""Oracles, baselines and instance generators used by tests and benchmarks."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from .core import GuardExceeded, Instance, InstanceError, PartialSchedule, makespan

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX_JOBS = 14
BRUTE_FORCE_MAX_ASSIGNMENTS = 10_000_000
GENERATOR_KINDS = ("random", "two-size", "two-size-planted", "chain")


@dataclass(frozen=True)
class GenSpec:
    """Generator parameters; ``kind`` selects the family.

    ``random`` uses ``jobs`` and the size range, ``two-size`` uses the
    ``(small_size, big_size)`` pair with per-class counts, ``two-size-planted``
    does the same around a built-in schedule of makespan ``big_size``, and
    ``chain`` uses ``machines`` and ``big_size`` only.
    """

    machines: int = 3
    jobs: int = 8
    size_min: int = 1
    size_max: int = 10
    density: float = 1.0
    seed: int = 0
    kind: str = "random"
    small_size: Optional[int] = None
    big_size: Optional[int] = None
    small_count: int = 0
    big_count: int = 0

    def __post_init__(self) -> None:
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}")
        if self.machines < 1:
            raise ValueError("machines must be positive")
        if not 0 < self.density <= 1:
            raise ValueError("density must lie in (0, 1]")
        if self.jobs < 0 or self.small_count < 0 or self.big_count < 0:
            raise ValueError("job counts must be non-negative")
        if self.kind == "random" and not 1 <= self.size_min <= self.size_max:
            raise ValueError("size range must satisfy 1 <= size_min <= size_max")
        if self.kind in ("two-size", "two-size-planted"):
            if self.small_size is None or self.big_size is None:
                raise ValueError("two-size generation needs small_size and big_size")
            if not 1 <= self.small_size < self.big_size:
                raise ValueError("two-size generation needs 1 <= small_size < big_size")
        if self.kind == "two-size-planted":
            if not 1 <= self.big_count <= self.machines:
                raise ValueError("planted two-size generation needs 1 <= big_count <= machines")
            room = (self.machines - self.big_count) * (self.big_size // self.small_size)
            if self.small_count > room:
                raise ValueError(f"{self.small_count} small jobs do not fit the {room} planted slots")
        if self.kind == "chain":
            if self.machines < 2:
                raise ValueError("chain generation needs at least two machines")
            if self.big_size is None or self.big_size < 1:
                raise ValueError("chain generation needs a positive big_size")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "GenSpec":
        if not isinstance(data, Mapping):
            raise ValueError(f"a generator spec must be a JSON object, got {type(data).__name__}")
        known = {item.name for item in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown GenSpec fields: {sorted(unknown)}")
        try:
            return cls(**dict(data))
        except TypeError as exc:
            raise ValueError(f"malformed generator spec: {exc}") from exc

    def to_mapping(self) -> Dict[str, Any]:
        return asdict(self)


def _sample_eligibility(rng: np.random.Generator, machines: int, density: float) -> List[int]:
    while True:
        mask = rng.random(machines) < density
        if mask.any():
            return [int(machine) for machine in np.flatnonzero(mask)]


def gen_random(spec: GenSpec) -> Instance:
    """Uniform sizes in ``[size_min, size_max]``; each machine eligible with ``density``."""

    rng = np.random.default_rng(spec.seed)
    sizes = rng.integers(spec.size_min, spec.size_max + 1, size=spec.jobs)
    jobs = [
        (int(size), _sample_eligibility(rng, spec.machines, spec.density)) for size in sizes
    ]
    return Instance.build(spec.machines, jobs)


def two_size_instance(
    machines: int,
    small_size: int,
    big_size: int,
    big_eligible: Sequence[Iterable[int]],
    small_eligible: Sequence[Iterable[int]],
) -> Instance:
    """Big jobs first, then small jobs, with the given eligibility lists."""

    if not 1 <= small_size < big_size:
        raise InstanceError("two-size instances need 1 <= s < b")
    jobs = [(big_size, list(eligible)) for eligible in big_eligible]
    jobs.extend((small_size, list(eligible)) for eligible in small_eligible)
    return Instance.build(machines, jobs)


def gen_two_size(spec: GenSpec) -> Instance:
    rng = np.random.default_rng(spec.seed)
    big = [_sample_eligibility(rng, spec.machines, spec.density) for _ in range(spec.big_count)]
    small = [_sample_eligibility(rng, spec.machines, spec.density) for _ in range(spec.small_count)]
    return two_size_instance(spec.machines, spec.small_size, spec.big_size, big, small)


def gen_two_size_planted(spec: GenSpec) -> Instance:
    """Two-size instance that has a schedule of makespan ``big_size``.

    Each big job gets a machine of its own and the small jobs are dealt
    round-robin over the remaining machines, at most ``big_size // small_size``
    per machine. Every job stays eligible on its planted machine, so
    ``OPT_LP = big_size``.
    """

    rng = np.random.default_rng(spec.seed)
    homes = [int(machine) for machine in rng.permutation(spec.machines)]
    free = homes[spec.big_count:]

    def eligible(home: int) -> List[int]:
        mask = rng.random(spec.machines) < spec.density
        mask[home] = True
        return [int(machine) for machine in np.flatnonzero(mask)]

    big = [eligible(home) for home in homes[: spec.big_count]]
    small = [eligible(free[index % len(free)]) for index in range(spec.small_count)]
    return two_size_instance(spec.machines, spec.small_size, spec.big_size, big, small)


def gen_chain(machines: int, big_size: int) -> Instance:
    """Big jobs shared by consecutive machines, plus one private filler per machine.

    Machine 0's filler has the big size, so the first big job has to travel
    along the chain; the other fillers have size ``max(1, big_size // 4)``.
    """

    if machines < 2:
        raise InstanceError("a chain needs at least two machines")
    if big_size < 1:
        raise InstanceError("big_size must be positive")
    jobs = [(big_size, [machine, machine + 1]) for machine in range(machines - 1)]
    filler = max(1, big_size // 4)
    jobs.append((big_size, [0]))
    jobs.extend((filler, [machine]) for machine in range(1, machines))
    return Instance.build(machines, jobs)


def generate(spec: GenSpec) -> Instance:
    if spec.kind == "two-size":
        return gen_two_size(spec)
    if spec.kind == "two-size-planted":
        return gen_two_size_planted(spec)
    if spec.kind == "chain":
        return gen_chain(spec.machines, spec.big_size)
    return gen_random(spec)


def greedy_baseline(instance: Instance) -> PartialSchedule:
    """Largest job first onto the least-loaded eligible machine (lowest id on ties)."""

    schedule = PartialSchedule(instance)
    order = sorted(range(instance.job_count), key=lambda job: (-instance.jobs[job].size, job))
    for job in order:
        target = min(instance.jobs[job].eligible_sorted, key=lambda machine: (schedule.load(machine), machine))
        schedule.assign(job, target)
    return schedule


def brute_force_opt(instance: Instance) -> int:
    """Exact optimal makespan by depth-first branch and bound.

    The greedy schedule seeds the incumbent; a branch is cut as soon as some
    machine would reach the incumbent's makespan.
    """

    if instance.job_count > BRUTE_FORCE_MAX_JOBS:
        raise GuardExceeded(f"{instance.job_count} jobs exceed the brute-force guard of {BRUTE_FORCE_MAX_JOBS}")
    assignments = math.prod(len(job.eligible) for job in instance.jobs)
    if assignments > BRUTE_FORCE_MAX_ASSIGNMENTS:
        raise GuardExceeded(f"{assignments} assignments exceed the brute-force guard")
    if instance.job_count == 0:
        return 0

    order = sorted(range(instance.job_count), key=lambda job: (-instance.jobs[job].size, job))
    lower = max(instance.max_size, -(-instance.total_size // instance.machine_count))
    best = makespan(greedy_baseline(instance))
    loads = [0] * instance.machine_count

    def search(index: int, current: int) -> None:
        nonlocal best
        if best <= lower:
            return
        if index == len(order):
            best = current
            return
        job = instance.jobs[order[index]]
        for machine in job.eligible_sorted:
            new_load = loads[machine] + job.size
            if new_load >= best:
                continue
            loads[machine] = new_load
            search(index + 1, max(current, new_load))
            loads[machine] -= job.size

    search(0, 0)
    logger.debug("Brute-force optimum %s for %s jobs", best, instance.job_count)
    return best
