"""Trace events emitted by the local search and their JSONL stream."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

logger = logging.getLogger(__name__)

EVENT_MOVE = "move"
EVENT_BLOCK_ADDED = "block+"
EVENT_BLOCK_REMOVED = "block-"
EVENT_ASSIGN = "assign"
EVENT_STUCK = "stuck"


@dataclass(frozen=True)
class MoveChosen:
    it: int
    job: int
    machine: int
    category: str
    value: Tuple[int, int, int]

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "it": self.it,
            "ev": EVENT_MOVE,
            "job": self.job,
            "machine": self.machine,
            "category": self.category,
            "value": list(self.value),
        }


@dataclass(frozen=True)
class BlockerAdded:
    it: int
    seq: int
    kind: str
    machine: int
    jobs: Tuple[int, ...]
    parent: int
    value: Tuple[int, int, int]

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "it": self.it,
            "ev": EVENT_BLOCK_ADDED,
            "seq": self.seq,
            "kind": self.kind,
            "machine": self.machine,
            "jobs": list(self.jobs),
            "parent": self.parent,
            "value": list(self.value),
        }


@dataclass(frozen=True)
class BlockersRemoved:
    it: int
    from_seq: int
    count: int

    def to_mapping(self) -> Dict[str, Any]:
        return {"it": self.it, "ev": EVENT_BLOCK_REMOVED, "from_seq": self.from_seq, "count": self.count}


@dataclass(frozen=True)
class JobAssigned:
    it: int
    job: int
    machine: int

    def to_mapping(self) -> Dict[str, Any]:
        return {"it": self.it, "ev": EVENT_ASSIGN, "job": self.job, "machine": self.machine}


@dataclass(frozen=True)
class Stuck:
    it: int
    job: int
    scale: int
    y: Tuple[int, ...]
    z: Tuple[int, ...]

    def to_mapping(self) -> Dict[str, Any]:
        return {
            "it": self.it,
            "ev": EVENT_STUCK,
            "job": self.job,
            "scale": self.scale,
            "y": list(self.y),
            "z": list(self.z),
        }


TraceEvent = Union[MoveChosen, BlockerAdded, BlockersRemoved, JobAssigned, Stuck]


def event_from_mapping(data: Mapping[str, Any]) -> TraceEvent:
    """Rebuild an event from its JSONL mapping."""

    kind = data.get("ev")
    it = int(data["it"])
    if kind == EVENT_MOVE:
        return MoveChosen(it, int(data["job"]), int(data["machine"]), str(data["category"]), tuple(data["value"]))
    if kind == EVENT_BLOCK_ADDED:
        return BlockerAdded(
            it,
            int(data["seq"]),
            str(data["kind"]),
            int(data["machine"]),
            tuple(data["jobs"]),
            int(data["parent"]),
            tuple(data["value"]),
        )
    if kind == EVENT_BLOCK_REMOVED:
        return BlockersRemoved(it, int(data["from_seq"]), int(data["count"]))
    if kind == EVENT_ASSIGN:
        return JobAssigned(it, int(data["job"]), int(data["machine"]))
    if kind == EVENT_STUCK:
        return Stuck(it, int(data["job"]), int(data["scale"]), tuple(data["y"]), tuple(data["z"]))
    raise ValueError(f"unknown trace event {kind!r}")


class TraceRecorder:
    """Collects events in order and optionally streams them as JSONL.

    Events are never mutated after emission. Use as a context manager when a
    *path* is given so the stream is closed.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None, *, keep: bool = True) -> None:
        self.path = Path(path) if path is not None else None
        self.keep = keep
        self.events: List[TraceEvent] = []
        self.count = 0
        self._stream: Optional[IO[str]] = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._stream = self.path.open("w", encoding="utf-8")
            logger.debug("Writing trace to %s", self.path)

    def emit(self, event: TraceEvent) -> None:
        self.count += 1
        if self.keep:
            self.events.append(event)
        if self._stream is not None:
            self._stream.write(json.dumps(event.to_mapping(), separators=(",", ":")))
            self._stream.write("\n")

    def close(self) -> None:
        if self._stream is not None:
            self._stream.close()
            self._stream = None

    def __enter__(self) -> "TraceRecorder":
        return self

    def __exit__(self, _exc_type, _exc, _tb) -> None:
        self.close()

    def summary(self) -> Dict[str, int]:
        counts = {
            EVENT_MOVE: 0,
            EVENT_BLOCK_ADDED: 0,
            EVENT_BLOCK_REMOVED: 0,
            EVENT_ASSIGN: 0,
            EVENT_STUCK: 0,
        }
        for event in self.events:
            counts[event.to_mapping()["ev"]] += 1
        return counts


def read_trace(path: Union[str, Path]) -> List[TraceEvent]:
    events: List[TraceEvent] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                events.append(event_from_mapping(json.loads(line)))
    return events


def replay(
    events: Iterable[TraceEvent],
    job_count: int,
    initial: Optional[Sequence[Optional[int]]] = None,
) -> List[Optional[int]]:
    """Rebuild the assignment produced by a trace.

    Only ``assign`` events change the schedule; the rest describe the search.
    """

    assignment: List[Optional[int]] = list(initial) if initial is not None else [None] * job_count
    if len(assignment) != job_count:
        raise ValueError("initial assignment does not match the job count")
    for event in events:
        if isinstance(event, JobAssigned):
            assignment[event.job] = event.machine
    return assignment
