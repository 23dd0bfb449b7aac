import json
import xml.dom.minidom

import pytest

from tampnet.cli import main
from tampnet.data import fixture_path

DEMO = str(fixture_path("demo_3x3.json"))
DEMO_SPEC = "visit(2) & end(3) & !visit(1)"
DEMO_PLAN = (
    '{"agents":[{"path":[[0,0]],"start":[0,0]},'
    '{"path":[[2,1],[2,0],[2,1],[2,2]],"start":[2,1]}],'
    '"satisfied_atoms":["end(3)","visit(2)"],'
    '"team_sequence":[21,18,20],"total_cost":3}\n'
)


@pytest.fixture(autouse=True)
def _no_ambient_state_cap(monkeypatch):
    monkeypatch.delenv("TAMP_STATE_CAP", raising=False)


def _other_env(tmp_path):
    path = tmp_path / "other.json"
    path.write_text(json.dumps({
        "grid": {"rows": 2, "cols": 2},
        "regions": [{"name": "z", "cells": [[0, 0]], "final_props": ["1"]}],
        "agents": [[1, 1]],
    }))
    return str(path)


def test_plan_prints_the_frozen_json(capsys):
    assert main(["plan", "--env", DEMO, "--spec", DEMO_SPEC]) == 0
    out, err = capsys.readouterr()
    assert out == DEMO_PLAN
    assert err == ""


def test_plan_out_file_replaces_stdout(tmp_path, capsys):
    out = tmp_path / "plan.json"
    assert main(["plan", "--env", DEMO, "--spec", DEMO_SPEC,
                 "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert out.read_text() == DEMO_PLAN


def test_plan_reads_spec_from_file(tmp_path, capsys):
    spec_file = tmp_path / "task.txt"
    spec_file.write_text(DEMO_SPEC + "\n")
    assert main(["plan", "--env", DEMO, "--spec-file", str(spec_file)]) == 0
    assert capsys.readouterr().out == DEMO_PLAN


def test_infeasible_task_exits_2(capsys):
    assert main(["plan", "--env", DEMO, "--spec", "visit(1) & !visit(2)"]) == 2
    out, err = capsys.readouterr()
    assert out == ""
    assert "infeasible" in err


def test_bad_inputs_exit_1(tmp_path, capsys):
    assert main(["plan", "--env", DEMO, "--spec", "visit(999)"]) == 1
    assert "error:" in capsys.readouterr().err

    assert main(["plan", "--env", DEMO, "--spec", "visit(1) &"]) == 1
    capsys.readouterr()

    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert main(["plan", "--env", str(broken), "--spec", "true"]) == 1
    capsys.readouterr()

    assert main(["plan", "--env", str(tmp_path / "missing.json"),
                 "--spec", "true"]) == 1
    capsys.readouterr()


def test_usage_problems_exit_1_not_2(capsys):
    cases = [
        ["plan", "--spec", "true"],
        ["plan", "--env", DEMO],
        ["plan", "--env", DEMO, "--spec", "true", "--spec-file", "x"],
        ["plan", "--env", DEMO, "--spec", "true", "--render", "ascii"],
        ["frobnicate"],
        ["bench", "--mode", "bogus", "--out", "x.csv"],
        [],
    ]
    for argv in cases:
        assert main(argv) == 1, argv
        assert "usage error:" in capsys.readouterr().err


def test_render_outputs(tmp_path, capsys):
    art = tmp_path / "plan.txt"
    assert main(["plan", "--env", DEMO, "--spec", DEMO_SPEC,
                 "--out", str(tmp_path / "p.json"),
                 "--render", "ascii", "--render-out", str(art)]) == 0
    text = art.read_text()
    assert "cost=3" in text
    assert "a.1" in text

    pic = tmp_path / "plan.svg"
    assert main(["plan", "--env", DEMO, "--spec", DEMO_SPEC,
                 "--out", str(tmp_path / "p.json"),
                 "--render", "svg", "--render-out", str(pic)]) == 0
    doc = xml.dom.minidom.parseString(pic.read_text())
    assert doc.documentElement.tagName == "svg"
    capsys.readouterr()


def test_build_then_plan_through_the_cache(tmp_path, capsys):
    cache = tmp_path / "demo.cache.json"
    assert main(["build", "--env", DEMO, "--out", str(cache)]) == 0
    assert capsys.readouterr().out == \
        f"wrote {cache}: 23 markings, 22 edges\n"
    built = cache.read_bytes()

    assert main(["plan", "--env", DEMO, "--spec", DEMO_SPEC,
                 "--cache", str(cache)]) == 0
    assert capsys.readouterr().out == DEMO_PLAN
    assert cache.read_bytes() == built

    fresh = tmp_path / "fresh.cache.json"
    assert main(["plan", "--env", DEMO, "--spec", DEMO_SPEC,
                 "--cache", str(fresh)]) == 0
    assert capsys.readouterr().out == DEMO_PLAN
    assert fresh.read_bytes() == built


def test_cache_for_another_environment_is_refused(tmp_path, capsys):
    cache = tmp_path / "demo.cache.json"
    assert main(["build", "--env", DEMO, "--out", str(cache)]) == 0
    capsys.readouterr()
    assert main(["plan", "--env", _other_env(tmp_path), "--spec", "end(1)",
                 "--cache", str(cache)]) == 1
    err = capsys.readouterr().err
    assert "error:" in err and "different model" in err


def test_oracle_command(capsys):
    assert main(["oracle", "--env", DEMO, "--spec", DEMO_SPEC]) == 0
    out = capsys.readouterr().out
    assert out == ('{"cost":3,"moves":[[0,[0,0],[1,0]],[0,[1,0],[2,0]],'
                   '[1,[2,1],[2,2]]]}\n')

    assert main(["oracle", "--env", DEMO, "--spec", "visit(1) & !visit(2)"]) == 2
    assert "infeasible" in capsys.readouterr().err

    assert main(["oracle", "--env", DEMO, "--spec", DEMO_SPEC,
                 "--budget", "2"]) == 1
    assert "error:" in capsys.readouterr().err


def test_state_cap_env_variable(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("TAMP_STATE_CAP", "5")
    assert main(["plan", "--env", DEMO, "--spec", "true"]) == 1
    assert "state budget" in capsys.readouterr().err

    assert main(["plan", "--env", DEMO, "--spec", "true",
                 "--state-cap", "100000"]) == 0
    capsys.readouterr()

    monkeypatch.setenv("TAMP_STATE_CAP", "abc")
    assert main(["plan", "--env", DEMO, "--spec", "true"]) == 1
    assert "must be an integer" in capsys.readouterr().err

    monkeypatch.setenv("TAMP_STATE_CAP", "0")
    assert main(["plan", "--env", DEMO, "--spec", "true"]) == 1
    assert "must be positive" in capsys.readouterr().err


def test_bench_command(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["bench", "--mode", "props", "--out", str(out),
                 "--sizes", "4", "--agents", "2", "--props", "2", "3",
                 "--reps", "2", "--oracle-budget", "100000"]) == 0
    stdout = capsys.readouterr().out
    assert stdout == f"wrote {out}: 4 instances, 0 errors\n"
    header = out.read_text().splitlines()[0]
    assert header.startswith("mode,param,rep,rows,cols")

    assert main(["bench", "--mode", "props", "--out", str(out),
                 "--props", "5", "2"]) == 1
    assert "error:" in capsys.readouterr().err
