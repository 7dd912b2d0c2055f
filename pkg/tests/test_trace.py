from __future__ import annotations

import json

import pytest

from logic.localsearch import schedule_at, solve
from logic.trace import (
    BlockerAdded,
    BlockersRemoved,
    JobAssigned,
    MoveChosen,
    Stuck,
    TraceRecorder,
    event_from_mapping,
    read_trace,
    replay,
)


def test_recorder_streams_jsonl(tmp_path, e1):
    target = tmp_path / "traces" / "e1.jsonl"
    with TraceRecorder(target) as recorder:
        schedule_at(e1, 3, "general", recorder=recorder)

    lines = target.read_text(encoding="utf-8").splitlines()
    assert len(lines) == recorder.count
    assert all(json.loads(line)["ev"] for line in lines)
    assert read_trace(target) == recorder.events
    assert isinstance(recorder.events[-1], Stuck)


def test_recorder_without_keep_only_counts(tmp_path, e2):
    target = tmp_path / "e2.jsonl"
    with TraceRecorder(target, keep=False) as recorder:
        solve(e2, recorder=recorder)
    assert recorder.events == []
    assert recorder.count == len(read_trace(target)) > 0


def test_summary_counts_each_event_kind():
    recorder = TraceRecorder()
    recorder.emit(MoveChosen(1, 0, 1, "valid", (0, 0, 0)))
    recorder.emit(BlockerAdded(2, 1, "small", 1, (2,), 0, (1, 0, 0)))
    recorder.emit(BlockersRemoved(3, 1, 1))
    recorder.emit(JobAssigned(3, 0, 1))
    assert recorder.summary() == {"move": 1, "block+": 1, "block-": 1, "assign": 1, "stuck": 0}


def test_event_mapping_is_lossless():
    event = Stuck(7, 2, 33, (33, 33), (33, 33, 33))
    assert event_from_mapping(json.loads(json.dumps(event.to_mapping()))) == event
    with pytest.raises(ValueError):
        event_from_mapping({"it": 1, "ev": "teleport"})


def test_replay_uses_only_assign_events():
    events = [
        MoveChosen(1, 0, 1, "valid", (0, 0, 0)),
        JobAssigned(1, 0, 1),
        JobAssigned(2, 1, 0),
        JobAssigned(3, 0, 0),
    ]
    assert replay(events, 3) == [0, 0, None]
    assert replay(events[:2], 3, initial=[None, 1, 1]) == [1, 1, 1]
    with pytest.raises(ValueError):
        replay(events, 2, initial=[None])
