import json
import subprocess
import sys

import pytest

from flowlab.cli import main
from flowlab.errors import ConfigError
from flowlab.report import load_config, run, validate_config


def _cfg(task, **extra):
    cfg = {"schema": "flowlab-config/1", "task": task, "seed": 1}
    cfg.update(extra)
    return cfg


def test_unknown_top_level_key():
    with pytest.raises(ConfigError, match="bogus"):
        validate_config(_cfg("tables", bogus=1))


def test_unknown_nested_key():
    cfg = _cfg("classify", field={"name": "linear_torus"},
               classifier={"grid_n": 256, "wizardry": True})
    with pytest.raises(ConfigError, match="classifier.wizardry"):
        validate_config(cfg)


def test_bad_schema_and_task():
    with pytest.raises(ConfigError, match="schema"):
        validate_config({"task": "tables"})
    with pytest.raises(ConfigError, match="task"):
        validate_config({"schema": "flowlab-config/1", "task": "dance"})


def test_missing_field_for_classify():
    with pytest.raises(ConfigError, match="field"):
        validate_config(_cfg("classify"))


def test_sphere_height_all_starts_self_closed(tmp_path):
    cfg = _cfg("classify", field={"name": "hamiltonian_sphere_height"},
               starts={"sampler": "random", "count": 6}, sides=["omega"],
               budget=150)
    report = run(cfg, output_dir=tmp_path)
    labels = {row["label"] for row in report["classify"]}
    assert labels == {"SelfClosed"}
    assert (tmp_path / "report.json").exists()


def test_simulate_writes_trajectories(tmp_path):
    cfg = _cfg("simulate", field={"name": "linear_torus", "params": {"slope": 0.5}},
               starts=[[0, 0.0, 0.0]], budget=3)
    report = run(cfg, output_dir=tmp_path)
    row = report["simulate"][0]
    assert row["termination"] == "ClosedUp"
    text = (tmp_path / row["file"]).read_text()
    assert text.startswith("# t\tchart\tu\tv")


def test_tables_subset(tmp_path):
    cfg = _cfg("tables", tables={"cases": ["1", "3"]})
    report = run(cfg, output_dir=tmp_path)
    rows = report["tables"]["rows"]
    assert [r["case"] for r in rows] == ["1", "3"]
    assert all(r["pass"] for r in rows)


def test_tables_unknown_case():
    with pytest.raises(ConfigError, match="unknown case"):
        run(_cfg("tables", tables={"cases": ["42"]}))


def test_cli_exit_codes(tmp_path):
    good = tmp_path / "good.json"
    good.write_text(json.dumps(_cfg("classify",
                                    field={"name": "single_limit_cycle_torus"},
                                    starts=[[0, 0.3, 0.5]], sides=["omega"],
                                    budget=300)))
    assert main(["classify", "-c", str(good), "-o", str(tmp_path / "out")]) == 0

    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(_cfg("classify", field={"name": "linear_torus"},
                                   oops=1)))
    assert main(["classify", "-c", str(bad)]) == 2

    notjson = tmp_path / "broken.json"
    notjson.write_text("{nope")
    assert main(["classify", "-c", str(notjson)]) == 2


def test_cli_list_runs():
    assert main(["list"]) == 0


def test_task_subcommand_mismatch(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(_cfg("tables")))
    assert main(["classify", "-c", str(p)]) == 2


def test_ham_check_task(tmp_path):
    cfg = _cfg("ham-check", field={"name": "linear_torus"})
    report = run(cfg, output_dir=tmp_path)
    assert report["ham_check"]["verdict"] == "NotHamiltonian"


def test_render_task_and_determinism(tmp_path):
    cfg = _cfg("render", field={"name": "single_limit_cycle_torus"},
               render={"n_seeds": 4, "t_span": 2.0})
    run(cfg, output_dir=tmp_path / "a")
    run(cfg, output_dir=tmp_path / "b")
    sa = (tmp_path / "a" / "portrait.svg").read_bytes()
    sb = (tmp_path / "b" / "portrait.svg").read_bytes()
    assert sa == sb and len(sa) > 1000
