import io
import json
import subprocess
import sys

import pytest

from scmc import (
    InternalEvent,
    MemoryEvent,
    Params,
    READ,
    Run,
    Trace,
    WRITE,
    dumps_jsonl,
    loads_run_jsonl,
)
from scmc.cli import (
    Config,
    EXIT_OK,
    EXIT_UNDECIDED,
    EXIT_USAGE,
    EXIT_VIOLATION,
    format_event,
    main,
)

W = lambda i, j, d: MemoryEvent(WRITE, i, j, d)
R = lambda i, j, d: MemoryEvent(READ, i, j, d)
ACKX = lambda i, j: InternalEvent("ACKX", (i, j))
ACKS = lambda i, j: InternalEvent("ACKS", (i, j))
UPD = lambda i: InternalEvent("UPD", (i,))

TRACE3 = Trace((W(1, 1, 1), R(2, 1, 0), R(2, 1, 1)), Params(2, 1, 1))
VIOLATION4 = Trace(
    (W(1, 1, 1), R(1, 2, 0), W(2, 2, 1), R(2, 1, 0)), Params(2, 2, 1)
)
RUN12 = Run(
    (
        ACKX(2, 2), UPD(2), ACKS(1, 2), ACKX(2, 2), ACKX(1, 1), UPD(1), UPD(1),
        W(1, 1, 1), R(1, 2, 0), UPD(2), W(2, 2, 1), R(2, 1, 0),
    ),
    Params(2, 2, 1),
)


def write_jsonl(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(dumps_jsonl(obj), encoding="utf-8")
    return str(path)


def run_json(capsys, argv):
    code = main(argv + ["--format", "json"])
    return code, json.loads(capsys.readouterr().out)


class TestCheck:
    def test_buggy_violation_exit_and_payload(self, capsys):
        code, payload = run_json(
            capsys,
            ["check", "--protocol", "piranha-buggy", "--queue-bound", "2", "--k", "2"],
        )
        assert code == EXIT_VIOLATION
        assert payload["result"] == "violation"
        (v,) = payload["verdicts"]
        assert v["result"] == "counterexample"
        assert len(v["run"]) == 12
        assert v["cycle"]["canonical"] is True
        assert v["cycle"]["k"] == 2
        assert v["initial_owners"] is not None
        assert len(v["unambiguous_trace"]) == 4

    def test_correct_all_k_clean(self, capsys):
        code, payload = run_json(capsys, ["check", "--n", "2", "--m", "2"])
        assert code == EXIT_OK
        assert payload["result"] == "no_violation"
        assert [v["k"] for v in payload["verdicts"]] == [1, 2]
        assert all(v["run"] is None for v in payload["verdicts"])

    def test_text_verdict_lines(self, capsys):
        code = main(["check", "--protocol", "piranha-buggy", "--queue-bound", "2", "--k", "1"])
        out = capsys.readouterr().out
        assert code == EXIT_VIOLATION
        assert "counterexample found; not sequentially consistent" in out
        code = main(["check", "--k", "1"])
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert "sequentially consistent under the simple write order" in out

    def test_k_out_of_range(self, capsys):
        assert main(["check", "--k", "3"]) == EXIT_USAGE
        assert main(["check", "--k", "x"]) == EXIT_USAGE

    def test_max_states_inconclusive(self, capsys):
        code, payload = run_json(
            capsys,
            ["check", "--protocol", "piranha-buggy", "--k", "2", "--max-states", "10"],
        )
        assert code == EXIT_UNDECIDED
        assert payload["result"] == "inconclusive"

    def test_print_config(self, capsys):
        code = main(
            ["check", "--k", "2", "--search", "dfs", "--threads", "3", "--print-config"]
        )
        assert code == EXIT_OK
        cfg = json.loads(capsys.readouterr().out)
        assert cfg == {
            "protocol": "piranha",
            "n": 2,
            "m": 2,
            "k": 2,
            "queue_bound": 3,
            "max_states": 50_000_000,
            "search": "dfs",
            "threads": 3,
            "format": "text",
            "output": None,
        }
        assert cfg == Config(k=2, search="dfs", threads=3).to_json()

    def test_output_file(self, tmp_path, capsys):
        out_path = tmp_path / "report.json"
        code = main(["check", "--k", "1", "--format", "json", "--output", str(out_path)])
        assert code == EXIT_OK
        assert capsys.readouterr().out == ""
        payload = json.loads(out_path.read_text(encoding="utf-8"))
        assert payload["result"] == "no_violation"

    def test_threads_match_serial(self, capsys):
        code1, p1 = run_json(
            capsys, ["check", "--protocol", "piranha-buggy", "--queue-bound", "2", "--k", "1"]
        )
        code2, p2 = run_json(
            capsys,
            [
                "check", "--protocol", "piranha-buggy", "--queue-bound", "2",
                "--k", "1", "--threads", "4",
            ],
        )
        assert code1 == code2 == EXIT_VIOLATION
        assert p1["verdicts"] == p2["verdicts"]

    def test_emit_run_chains_into_analyze_and_replay(self, tmp_path, capsys):
        emitted = tmp_path / "cex.jsonl"
        code = main(
            [
                "check", "--protocol", "piranha-buggy", "--queue-bound", "2",
                "--k", "2", "--emit-run", str(emitted), "--format", "json",
            ]
        )
        payload = json.loads(capsys.readouterr().out)
        assert code == EXIT_VIOLATION
        assert payload["emitted_run"] == str(emitted)
        run = loads_run_jsonl(emitted.read_text(encoding="utf-8"))
        assert len(run.events) == 12

        code, analysis = run_json(capsys, ["analyze", str(emitted)])
        assert code == EXIT_VIOLATION
        assert analysis["nice_cycle"]["canonical"] is True

        owners = ",".join(str(o) for o in payload["verdicts"][0]["initial_owners"])
        code = main(
            [
                "replay", str(emitted), "--protocol", "piranha-buggy",
                "--queue-bound", "2", "--owners", owners,
            ]
        )
        capsys.readouterr()
        assert code == EXIT_OK


class TestAnalyze:
    def test_acyclic(self, tmp_path, capsys):
        path = write_jsonl(tmp_path, "t3.jsonl", TRACE3)
        code, payload = run_json(capsys, ["analyze", path])
        assert code == EXIT_OK
        assert payload["analysis"] == "acyclic"
        assert payload["unambiguous"] and payload["causal"]

    def test_cyclic_canonical_2nice(self, tmp_path, capsys):
        path = write_jsonl(tmp_path, "v4.jsonl", VIOLATION4)
        code, payload = run_json(capsys, ["analyze", path])
        assert code == EXIT_VIOLATION
        assert payload["analysis"] == "cyclic"
        assert payload["cycle_vertices"]
        assert payload["nice_cycle"] == {
            "k": 2,
            "vertices": [1, 2, 3, 4],
            "procs": [1, 2],
            "locs": [2, 1],
            "canonical": True,
        }

    def test_one_nice_cycle(self, tmp_path, capsys):
        trace = Trace((W(1, 1, 1), R(1, 1, 0)), Params(1, 1, 1))
        path = write_jsonl(tmp_path, "t1.jsonl", trace)
        code, payload = run_json(capsys, ["analyze", path])
        assert code == EXIT_VIOLATION
        assert payload["nice_cycle"]["k"] == 1

    def test_ambiguous_skipped(self, tmp_path, capsys):
        trace = Trace((W(1, 1, 1), W(2, 1, 1)), Params(2, 1, 1))
        path = write_jsonl(tmp_path, "amb.jsonl", trace)
        code, payload = run_json(capsys, ["analyze", path])
        assert code == EXIT_UNDECIDED
        assert payload["analysis"] == "skipped"
        assert payload["unambiguous"] is False

    def test_noncausal_skipped(self, tmp_path, capsys):
        trace = Trace((R(1, 1, 5),), Params(1, 1, 5))
        path = write_jsonl(tmp_path, "nc.jsonl", trace)
        code, payload = run_json(capsys, ["analyze", path])
        assert code == EXIT_UNDECIDED
        assert payload["causal"] is False

    def test_empty_trace_is_acyclic(self, tmp_path, capsys):
        path = tmp_path / "empty.jsonl"
        path.write_text('{"n": 2, "m": 2, "v": 2}\n', encoding="utf-8")
        code, payload = run_json(capsys, ["analyze", str(path)])
        assert code == EXIT_OK
        assert payload["analysis"] == "acyclic"
        assert payload["events"] == 0

    def test_stdin_dash(self, capsys, monkeypatch):
        monkeypatch.setattr(sys, "stdin", io.StringIO(dumps_jsonl(TRACE3)))
        code, payload = run_json(capsys, ["analyze", "-"])
        assert code == EXIT_OK
        assert payload["analysis"] == "acyclic"

    def test_parse_errors_exit_usage(self, tmp_path, capsys):
        missing_header = tmp_path / "bad1.jsonl"
        missing_header.write_text('{"op": "W", "proc": 1, "loc": 1, "data": 1}\n')
        assert main(["analyze", str(missing_header)]) == EXIT_USAGE
        bad_json = tmp_path / "bad2.jsonl"
        bad_json.write_text('{"n": 1, "m": 1, "v": 1}\n{nope\n')
        assert main(["analyze", str(bad_json)]) == EXIT_USAGE
        assert main(["analyze", str(tmp_path / "nope.jsonl")]) == EXIT_USAGE
        capsys.readouterr()


class TestOracle:
    def test_witness_found(self, tmp_path, capsys):
        path = write_jsonl(tmp_path, "t3.jsonl", TRACE3)
        code, payload = run_json(capsys, ["oracle", path])
        assert code == EXIT_OK
        assert payload["sc"] is True
        assert payload["witness"] == [2, 1, 3]

    def test_violation_refused(self, tmp_path, capsys):
        path = write_jsonl(tmp_path, "v4.jsonl", VIOLATION4)
        code, payload = run_json(capsys, ["oracle", path])
        assert code == EXIT_VIOLATION
        assert payload["sc"] is False
        assert payload["witness"] is None

    def test_engines_agree(self, tmp_path, capsys):
        path = write_jsonl(tmp_path, "t3.jsonl", TRACE3)
        code, payload = run_json(capsys, ["oracle", path, "--engine", "permutations"])
        assert code == EXIT_OK
        assert payload["witness"] == [2, 1, 3]

    def test_bound_undecided(self, tmp_path, capsys):
        trace = Trace(tuple(R(1, 1, 0) for _ in range(11)), Params(1, 1, 1))
        path = write_jsonl(tmp_path, "long.jsonl", trace)
        code, payload = run_json(capsys, ["oracle", path])
        assert code == EXIT_UNDECIDED
        assert payload["sc"] is None
        code, payload = run_json(capsys, ["oracle", path, "--bound", "11"])
        assert code == EXIT_OK

    def test_bad_engine(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["oracle", "x.jsonl", "--engine", "magic"])
        assert exc.value.code == EXIT_USAGE
        capsys.readouterr()


class TestReplay:
    def test_twelve_event_run_on_buggy(self, tmp_path, capsys):
        path = write_jsonl(tmp_path, "run12.jsonl", RUN12)
        code, payload = run_json(
            capsys,
            ["replay", path, "--protocol", "piranha-buggy", "--owners", "1,1",
             "--unambiguous"],
        )
        assert code == EXIT_OK
        assert payload["ok"] is True
        cache = payload["final_state"]["cache"]
        assert cache[0][0] == {"data": 1, "status": "EXC"}
        assert cache[1][1] == {"data": 1, "status": "EXC"}
        assert payload["unambiguous_trace"] == [
            {"op": "W", "proc": 1, "loc": 1, "data": 1},
            {"op": "R", "proc": 1, "loc": 2, "data": 0},
            {"op": "W", "proc": 2, "loc": 2, "data": 1},
            {"op": "R", "proc": 2, "loc": 1, "data": 0},
        ]

    def test_correct_variant_rejects(self, tmp_path, capsys):
        path = write_jsonl(tmp_path, "run12.jsonl", RUN12)
        code, payload = run_json(
            capsys, ["replay", path, "--protocol", "piranha", "--owners", "1,1"]
        )
        assert code == EXIT_VIOLATION
        assert payload["ok"] is False
        assert payload["failed_at"] == 4

    def test_owner_validation(self, tmp_path, capsys):
        path = write_jsonl(tmp_path, "run12.jsonl", RUN12)
        assert main(["replay", path, "--owners", "9,9"]) == EXIT_USAGE
        assert main(["replay", path, "--owners", "1"]) == EXIT_USAGE
        assert main(["replay", path, "--owners", "a,b"]) == EXIT_USAGE
        capsys.readouterr()


class TestValidateAssumptions:
    def test_piranha_clean(self, capsys):
        code, payload = run_json(
            capsys,
            ["validate-assumptions", "--depth", "4", "--samples", "40"],
        )
        assert code == EXIT_OK
        assert payload["ok"] is True
        assert payload["causality_violations"] == []
        assert payload["symmetry_violations"] == []
        assert payload["nodes"] > 0 and payload["symmetry_checks"] > 0


class TestParserContract:
    def test_no_command_exits_usage(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == EXIT_USAGE

    def test_unknown_command_exits_usage(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == EXIT_USAGE

    def test_format_event_strings(self):
        assert format_event(W(1, 2, 3)) == "W(1,2,3)"
        assert format_event(UPD(2)) == "UPD(2)"
        assert format_event(ACKS(1, 2)) == "ACKS(1,2)"

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "scmc", "check", "--k", "1", "--n", "1", "--m", "1",
             "--queue-bound", "1"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == EXIT_OK
        assert "no violation" in proc.stdout

    def test_console_script_usage_error(self):
        proc = subprocess.run(
            [sys.executable, "-m", "scmc", "check", "--search", "sideways"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == EXIT_USAGE
