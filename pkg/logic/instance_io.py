"""Reading and writing instance and schedule JSON files."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional, Tuple, Union

from .core import Instance, InstanceError, PartialSchedule

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class InstanceFormatError(InstanceError):
    """Raised for unreadable or malformed JSON input, with its position when known."""

    def __init__(
        self,
        message: str,
        path: Optional[PathLike] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
    ) -> None:
        location = str(path) if path is not None else "<input>"
        if line is not None:
            location = f"{location}:{line}:{column}"
        super().__init__(f"{location}: {message}")
        self.path = path
        self.line = line
        self.column = column


@dataclass(frozen=True)
class ScheduleFile:
    """Assignment as stored on disk; machine indices are not validated here."""

    assignment: Tuple[Optional[int], ...]
    makespan: Optional[int] = None


def _read_json(path: PathLike) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        logger.error("Malformed JSON in %s: %s", path, exc)
        raise InstanceFormatError(exc.msg, path, exc.lineno, exc.colno) from exc
    except OSError as exc:
        logger.exception("Failed to read %s", path)
        raise InstanceFormatError(f"cannot read file ({exc.strerror or exc})", path) from exc


def _write_json(data: Any, path: PathLike) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8") as handle:
        json.dump(data, handle, ensure_ascii=False, indent=2)
        handle.write("\n")


def _require_int(value: Any, what: str, path: Optional[PathLike]) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceFormatError(f"{what} must be an integer, got {value!r}", path)
    return value


def instance_from_mapping(data: Mapping[str, Any], path: Optional[PathLike] = None) -> Instance:
    """Build an instance from ``{"machines": m, "jobs": [{"p": .., "eligible": [..]}]}``."""

    if not isinstance(data, Mapping):
        raise InstanceFormatError("instance must be a JSON object", path)
    if "machines" not in data or "jobs" not in data:
        raise InstanceFormatError('instance needs "machines" and "jobs"', path)
    machines = _require_int(data["machines"], "machines", path)
    raw_jobs = data["jobs"]
    if not isinstance(raw_jobs, list):
        raise InstanceFormatError('"jobs" must be a list', path)

    jobs = []
    for index, raw in enumerate(raw_jobs):
        if not isinstance(raw, Mapping) or "p" not in raw or "eligible" not in raw:
            raise InstanceFormatError(f'job {index} needs "p" and "eligible"', path)
        size = _require_int(raw["p"], f"job {index} size", path)
        eligible = raw["eligible"]
        if not isinstance(eligible, list):
            raise InstanceFormatError(f"job {index} eligibility must be a list", path)
        jobs.append((size, [_require_int(m, f"job {index} machine", path) for m in eligible]))
    try:
        return Instance.build(machines, jobs)
    except InstanceFormatError:
        raise
    except InstanceError as exc:
        raise InstanceFormatError(str(exc), path) from exc


def load_instance(path: PathLike) -> Instance:
    instance = instance_from_mapping(_read_json(path), path)
    logger.debug("Loaded %s: %s machines, %s jobs", path, instance.machine_count, instance.job_count)
    return instance


def dump_instance(instance: Instance, path: PathLike) -> None:
    _write_json(instance.to_mapping(), path)


def schedule_from_mapping(data: Any, path: Optional[PathLike] = None) -> ScheduleFile:
    if not isinstance(data, Mapping) or "assignment" not in data:
        raise InstanceFormatError('schedule needs an "assignment" list', path)
    raw = data["assignment"]
    if not isinstance(raw, list):
        raise InstanceFormatError('"assignment" must be a list', path)
    assignment = tuple(
        None if machine is None else _require_int(machine, f"assignment of job {job}", path)
        for job, machine in enumerate(raw)
    )
    declared = data.get("makespan")
    if declared is not None:
        declared = _require_int(declared, "makespan", path)
    return ScheduleFile(assignment=assignment, makespan=declared)


def load_schedule(path: PathLike) -> ScheduleFile:
    return schedule_from_mapping(_read_json(path), path)


def save_schedule(schedule: PartialSchedule, path: PathLike) -> None:
    _write_json(schedule.to_mapping(), path)


def read_json(path: PathLike) -> Any:
    """Read a UTF-8 JSON file; failures raise :class:`InstanceFormatError`."""

    return _read_json(path)


def write_json(data: Any, path: PathLike) -> None:
    """Write *data* as indented UTF-8 JSON, creating parent directories."""

    _write_json(data, path)
