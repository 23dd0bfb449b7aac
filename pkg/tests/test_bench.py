import csv
import re
from collections import Counter

import pytest

from tampnet import (BenchConfig, END, VISIT, ValidationError,
                     generate_instance, random_instance, run_bench)
from tampnet.bench import CSV_COLUMNS, sweep_values, total_draws


def test_generation_is_deterministic():
    a = generate_instance("det:0", 4, 4, 2, 2, 4)
    b = generate_instance("det:0", 4, 4, 2, 2, 4)
    assert a == b
    c = generate_instance("det:1", 4, 4, 2, 2, 4)
    assert c != a


@pytest.mark.parametrize("seed", range(15))
def test_generated_instances_are_well_formed(seed):
    env, spec = generate_instance(f"wf:{seed}", 4, 4, 2, 2, 5,
                                  clause_max_width=3, max_forbidden=2)
    names = set()
    for region in env.regions:
        assert len(region.cells) == 1
        assert region.trajectory_props == region.final_props
        (name,) = region.trajectory_props
        assert region.name == f"R{name}"
        names.add(name)
    assert names == {str(i + 1) for i in range(len(env.regions))}
    assert 2 <= len(names) <= 5

    assert spec.trajectory_clauses or spec.final_clauses
    positives = {VISIT: set(), END: set()}
    for clause in spec.trajectory_clauses:
        assert 1 <= len(clause) <= 3
        assert clause <= names
        positives[VISIT] |= clause
    for clause in spec.final_clauses:
        assert 1 <= len(clause) <= 3
        assert clause <= names
        positives[END] |= clause
    assert len(spec.forbidden) <= 2
    for atom in spec.forbidden:
        assert atom.name in names
        assert atom.name not in positives[atom.kind]


def test_generation_rejects_impossible_label_counts():
    with pytest.raises(ValidationError):
        generate_instance("x", 3, 3, 1, 10, 10)


def test_label_placement_is_uniform():
    counts = Counter()
    for i in range(10000):
        env, _ = generate_instance(f"chi:{i}", 3, 3, 1, 1, 1)
        counts[env.regions[0].cells[0]] += 1
    assert len(counts) == 9
    expected = 10000 / 9
    chi2 = sum((n - expected) ** 2 / expected for n in counts.values())
    # 8 degrees of freedom: mean 8, standard deviation 4
    assert chi2 < 20


def test_sweep_values_by_mode():
    cfg = BenchConfig(mode="size", sizes=(5, 10), agent_counts=(2,),
                      prop_range=(2, 4), repetitions=3)
    assert sweep_values(cfg) == (5, 10)
    assert total_draws(cfg) == 6
    cfg.mode = "agents"
    assert sweep_values(cfg) == (2,)
    cfg.mode = "props"
    assert sweep_values(cfg) == (2, 3, 4)
    assert total_draws(cfg) == 9


@pytest.mark.parametrize("patch", [
    dict(mode="speed"),
    dict(repetitions=0),
    dict(sizes=()),
    dict(sizes=(0,)),
    dict(agent_counts=()),
    dict(prop_range=(0, 4)),
    dict(prop_range=(5, 4)),
    dict(clause_max_width=0),
    dict(max_forbidden=-1),
])
def test_config_validation(patch):
    cfg = BenchConfig(**patch)
    with pytest.raises(ValidationError):
        cfg.validate()


def test_random_instance_indexing():
    cfg = BenchConfig(mode="props", sizes=(4,), agent_counts=(2,),
                      prop_range=(2, 3), repetitions=2)
    seen = []
    for draw in range(total_draws(cfg)):
        env, spec, meta = random_instance(cfg, draw)
        seen.append((meta["param"], meta["rep"]))
        assert len(env.regions) == meta["param"]
        assert len(env.agents) == 2
    assert seen == [(2, 0), (2, 1), (3, 0), (3, 1)]
    with pytest.raises(ValidationError):
        random_instance(cfg, total_draws(cfg))
    with pytest.raises(ValidationError):
        random_instance(cfg, -1)


def _strip_timings(rows):
    out = []
    for row in rows:
        slim = dict(row)
        slim.pop("offline_s")
        slim.pop("online_s")
        out.append(slim)
    return out


def test_run_bench_writes_a_complete_csv(tmp_path):
    cfg = BenchConfig(mode="props", sizes=(4,), agent_counts=(2,),
                      prop_range=(2, 3), repetitions=2,
                      oracle_budget=200_000)
    out = tmp_path / "sweep.csv"
    rows = run_bench(cfg, out)
    assert len(rows) == 6

    with open(out, newline="") as handle:
        reader = csv.DictReader(handle)
        assert tuple(reader.fieldnames) == CSV_COLUMNS
        file_rows = list(reader)
    assert len(file_rows) == 6

    instance_rows = [r for r in file_rows if r["rep"] != "mean"]
    mean_rows = [r for r in file_rows if r["rep"] == "mean"]
    assert len(instance_rows) == 4 and len(mean_rows) == 2

    for row in instance_rows:
        assert row["mode"] == "props"
        assert row["error"] == ""
        assert row["feasible"] in ("yes", "no")
        assert row["oracle_match"] == "yes"
        if row["feasible"] == "yes":
            assert row["plan_cost"] != ""
        else:
            assert row["oracle_cost"] == "infeasible"
        assert re.fullmatch(r"\d+\.\d{6}", row["offline_s"])
        assert re.fullmatch(r"\d+\.\d{6}", row["online_s"])

    for row in mean_rows:
        assert re.fullmatch(r"\d+/\d+", row["feasible"])
        assert re.fullmatch(r"\d+/\d+", row["oracle_match"])
        if row["plan_cost"]:
            assert re.fullmatch(r"\d+\.\d{3}", row["plan_cost"])


def test_run_bench_is_reproducible_modulo_timing(tmp_path):
    cfg = BenchConfig(mode="size", sizes=(3, 4), agent_counts=(2,),
                      prop_range=(2, 3), repetitions=2)
    first = run_bench(cfg, tmp_path / "a.csv")
    second = run_bench(cfg, tmp_path / "b.csv")
    assert _strip_timings(first) == _strip_timings(second)
