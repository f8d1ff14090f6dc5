"""Command-line driver: exit codes, report format, stability."""
from __future__ import annotations

import json
import re

import pytest

from relaxcheck.cli import run

from conftest import CORPUS


def _run(capsys, *argv):
    code = run(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _corpus(name: str) -> str:
    return str(CORPUS / name)


def test_proved_exit_zero(capsys):
    code, out, _ = _run(capsys, "--model", "sc",
                        _corpus("fig1_nofence.lit"))
    assert code == 0
    assert re.search(r"fig1_nofence\.lit:\d+: PROVED under SC", out)


def test_alarm_exit_one(capsys):
    code, out, _ = _run(capsys, "--model", "tso",
                        _corpus("fig1_nofence.lit"))
    assert code == 1
    assert "ALARM under TSO" in out


def test_missing_file_exit_two(capsys):
    code, _, err = _run(capsys, "no_such_file.lit")
    assert code == 2 and "cannot read" in err


def test_parse_error_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.lit"
    bad.write_text("thread t { x = ; }")
    code, _, err = _run(capsys, str(bad))
    assert code == 2 and "bad.lit" in err


def test_bad_cap_exit_two(capsys):
    code, _, err = _run(capsys, "--max-combinations", "0",
                        _corpus("seq1.lit"))
    assert code == 2 and "max-combinations" in err


def test_model_directive_used_when_no_flag(tmp_path, capsys):
    f = tmp_path / "m.lit"
    f.write_text("model pso;\nglobal x = 0;\nthread t1 { x = 1; }\n"
                 "assert(x >= 0);\n")
    code, out, _ = _run(capsys, str(f))
    assert code == 0 and "under PSO" in out


def test_flag_overrides_directive(tmp_path, capsys):
    f = tmp_path / "m.lit"
    f.write_text("model pso;\nglobal x = 0;\nthread t1 { x = 1; }\n"
                 "assert(x >= 0);\n")
    code, out, _ = _run(capsys, "--model", "sc", str(f))
    assert code == 0 and "under SC" in out


def test_stats_block_present(capsys):
    _, out, _ = _run(capsys, "--model", "tso", _corpus("fig2_fence.lit"))
    assert re.search(r"stats: threads=3 nodes=21 combinations=\d+ "
                     r"pruned=\d+ rounds=\d+ wall_time_s=", out)
    assert "stats: thread t2: combinations=4 pruned=1" in out


def test_oracle_agree_annotation(capsys):
    code, out, _ = _run(capsys, "--model", "tso", "--oracle",
                        _corpus("fig2_fence.lit"))
    assert code == 0 and "(oracle: agree)" in out


def test_oracle_imprecise_annotation(capsys):
    code, out, _ = _run(capsys, "--model", "sc", "--oracle",
                        _corpus("loop_local.lit"))
    assert code == 1 and "(oracle: analyzer imprecise)" in out


def test_oracle_limit_reported_as_skip(capsys):
    code, out, _ = _run(capsys, "--model", "sc", "--oracle",
                        "--oracle-max-events", "1",
                        _corpus("fig1_nofence.lit"))
    assert code == 0 and "oracle: skipped" in out


def test_emit_relations_dump(capsys):
    code, out, _ = _run(capsys, "--model", "tso", "--emit-relations",
                        _corpus("fig2_fence.lit"))
    assert code == 0
    for rel in ("IsLoad(", "IsStore(", "Dominates(", "NoReorder(", "MHB("):
        assert rel in out


def test_json_report_schema(capsys):
    code, out, _ = _run(capsys, "--model", "pso", "--format", "json",
                        _corpus("fig2_nofence.lit"))
    assert code == 1
    report = json.loads(out)
    assert report["model"] == "pso"
    assert report["file"].endswith("fig2_nofence.lit")
    (verdict,) = report["verdicts"]
    assert verdict["status"] == "ALARM"
    assert isinstance(verdict["line"], int)
    stats = report["stats"]
    assert set(stats) == {"threads", "nodes", "outer_rounds", "per_thread",
                          "wall_time_s"}
    for t in stats["per_thread"].values():
        assert set(t) == {"combinations_enumerated", "combinations_pruned",
                          "overflowed"}


def test_output_byte_stable_modulo_wall_time(capsys):
    outs = []
    for _ in range(2):
        _, out, _ = _run(capsys, "--model", "rmo", _corpus("lb.lit"))
        outs.append(re.sub(r"wall_time_s=\S+", "wall_time_s=X", out))
    assert outs[0] == outs[1]
