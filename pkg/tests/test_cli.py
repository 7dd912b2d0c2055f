from __future__ import annotations

import json

import pandas as pd
import pytest

from logic import logging_utils
from logic.app_info import RELEASE_DATE
from logic.cli import BENCH_COLUMNS, EXIT_INVALID, EXIT_OK, main, verify_assignment
from logic.core import Instance
from logic.instance_io import dump_instance, load_instance, write_json


@pytest.fixture(autouse=True)
def isolated_logging():
    logging_utils.reset_logging()
    yield
    logging_utils.reset_logging()


@pytest.fixture
def run(tmp_path):
    def _run(*argv: str) -> int:
        return main(["--log-dir", str(tmp_path / "logs"), *argv])

    return _run


@pytest.fixture
def e1_path(tmp_path, e1):
    path = tmp_path / "e1.json"
    dump_instance(e1, path)
    return path


def test_lp_prints_bound_and_probe_table(run, e1_path, capsys):
    assert run("lp", str(e1_path)) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "OPT_LP 4"
    assert lines[1] == "T\tfeasible"
    probes = dict(line.split("\t") for line in lines[2:])
    assert probes.get("3", "no") == "no"
    assert probes.get("4", "yes") == "yes"


def test_solve_writes_schedule_report_and_trace(run, tmp_path, e1_path, capsys):
    out = tmp_path / "schedule.json"
    report = tmp_path / "report.json"
    trace = tmp_path / "trace.jsonl"
    code = run("solve", str(e1_path), "--out", str(out), "--report", str(report), "--trace", str(trace), "--debug-checks")
    assert code == EXIT_OK

    schedule = json.loads(out.read_text(encoding="utf-8"))
    assert schedule["makespan"] == 4
    data = json.loads(report.read_text(encoding="utf-8"))
    assert (data["T"], data["makespan"], data["ratio"]) == (4, 4, "1/1")
    assert (data["ratio_num"], data["ratio_den"]) == (1, 1)
    assert data["stuck"] is False
    assert trace.read_text(encoding="utf-8").strip()
    assert "makespan 4 T 4" in capsys.readouterr().err
    assert (tmp_path / "logs" / "last_run.md").exists()


def test_solve_prints_schedule_to_stdout(run, tmp_path, e2, capsys):
    path = tmp_path / "e2.json"
    dump_instance(e2, path)
    assert run("solve", str(path), "--variant", "general") == EXIT_OK
    schedule = json.loads(capsys.readouterr().out)
    assert schedule["makespan"] == 6
    assert schedule["assignment"][0] == 1


def test_solve_rejects_two_size_when_big_size_is_not_the_bound(run, tmp_path):
    path = tmp_path / "pair.json"
    dump_instance(Instance.build(1, [(6, [0]), (2, [0])]), path)
    assert run("solve", str(path), "--variant", "two-size") == EXIT_INVALID


def test_malformed_instance_exits_invalid(run, tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{ not json", encoding="utf-8")
    assert run("lp", str(path)) == EXIT_INVALID
    assert "broken.json:1:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "assignment, T, expected",
    [
        ([1, 0, 1], 4, EXIT_OK),
        ([0, 0, 1], 3, EXIT_INVALID),
        ([1, 1, 1], 4, EXIT_INVALID),
        ([0, 0], 4, EXIT_INVALID),
    ],
)
def test_verify_exit_codes(run, tmp_path, e1_path, capsys, assignment, T, expected):
    schedule = tmp_path / "schedule.json"
    write_json({"assignment": assignment}, schedule)
    assert run("verify", str(e1_path), str(schedule), "--T", str(T)) == expected
    first_line = capsys.readouterr().out.splitlines()[0]
    assert first_line == ("valid" if expected == EXIT_OK else "invalid")


def test_verify_assignment_reasons(e1):
    assert verify_assignment(e1, [1, 0, 1], 4) == []
    assert verify_assignment(e1, [0, 0, 1], 3) == ["machine 0 carries 2 big jobs [0, 1]"]
    assert verify_assignment(e1, [None, 0, 1], 4) == ["job 0 is unassigned"]


def test_oracle_prints_gap(run, e1_path, capsys):
    assert run("oracle", str(e1_path)) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["OPT 4", "OPT_LP 4", "gap 1/1"]


def test_gen_is_seeded(run, tmp_path):
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    args = ["gen", "--machines", "4", "--jobs", "9", "--density", "0.5", "--seed", "12"]
    assert run(*args, "--out", str(first)) == EXIT_OK
    assert run(*args, "--out", str(second)) == EXIT_OK
    assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")
    assert load_instance(first).job_count == 9


def test_gen_reads_spec_file(run, tmp_path):
    spec = tmp_path / "spec.json"
    write_json({"kind": "chain", "machines": 4, "big_size": 8}, spec)
    out = tmp_path / "chain.json"
    assert run("gen", "--spec", str(spec), "--out", str(out)) == EXIT_OK
    assert load_instance(out).machine_count == 4


def test_gen_with_missing_spec_file_exits_invalid(run, tmp_path, capsys):
    assert run("gen", "--spec", str(tmp_path / "missing.json")) == EXIT_INVALID
    assert "cannot read file" in capsys.readouterr().err


@pytest.mark.parametrize("payload", [[1, 2], "chain", {"machines": "four"}, {"kind": "chain", "colour": 1}])
def test_gen_rejects_malformed_spec(run, tmp_path, payload):
    spec = tmp_path / "spec.json"
    write_json(payload, spec)
    assert run("gen", "--spec", str(spec), "--out", str(tmp_path / "out.json")) == EXIT_INVALID
    assert not (tmp_path / "out.json").exists()


def test_gen_planted_two_size(run, tmp_path, capsys):
    out = tmp_path / "planted.json"
    args = ["gen", "--kind", "two-size-planted", "--machines", "4", "--small-size", "2", "--big-size", "6"]
    assert run(*args, "--big-count", "2", "--small-count", "5", "--seed", "3", "--out", str(out)) == EXIT_OK
    instance = load_instance(out)
    assert [job.size for job in instance.jobs] == [6, 6, 2, 2, 2, 2, 2]
    assert run("lp", str(out)) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[0] == "OPT_LP 6"


def test_bench_with_no_instances_writes_header(run, tmp_path, capsys):
    out = tmp_path / "empty.csv"
    assert run("bench", "--count", "0", "--out", str(out)) == EXIT_OK
    assert out.read_text(encoding="utf-8").strip() == ",".join(BENCH_COLUMNS)
    assert "bench: 0 instances, max ratio n/a, failures 0" in capsys.readouterr().err


def test_bench_is_reproducible(run, tmp_path):
    args = ["bench", "--count", "4", "--machines", "3", "--jobs", "7", "--density", "0.6", "--seed", "5"]
    first = tmp_path / "first.csv"
    second = tmp_path / "second.csv"
    assert run(*args, "--out", str(first)) == EXIT_OK
    assert run(*args, "--out", str(second)) == EXIT_OK

    left = pd.read_csv(first).drop(columns=["time_ms"])
    right = pd.read_csv(second).drop(columns=["time_ms"])
    pd.testing.assert_frame_equal(left, right)
    assert list(left["seed"]) == [5, 6, 7, 8]
    assert (left["status"] == "ok").all()
    assert (left["opt"] >= left["T"]).all()
    assert (left["makespan"] >= left["opt"]).all()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    out = capsys.readouterr().out
    assert "rasolver" in out
    assert f"({RELEASE_DATE})" in out
