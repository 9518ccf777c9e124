import json
from pathlib import Path

import pytest

from cransense.cli import (EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, ConfigError,
                           load_config, main)

SMALL = {
    "dims": {"num_rrhs": 2, "num_bbus": 2, "num_subcarriers": 4,
             "users_per_slice": 2, "bbu_user_cap": 4, "fronthaul_cap": 4},
    "radio": {"reserved_rate": 0.5},
    "solver": {"assoc_node_limit": 5000},
    "sweep": {"trials_per_point": 2},
}


def write_config(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_load_config_defaults_and_merge(tmp_path):
    cfg = load_config(None)
    assert cfg["dims"]["num_rrhs"] == 4
    path = write_config(tmp_path, {"dims": {"num_rrhs": 2}})
    cfg = load_config(path)
    assert cfg["dims"]["num_rrhs"] == 2
    assert cfg["dims"]["num_bbus"] == 3  # untouched default
    cfg = load_config(path, seed_override=7, trials_override=5)
    assert cfg["scenario"]["seed"] == 7
    assert cfg["sweep"]["trials_per_point"] == 5


def test_load_config_rejects_unknowns(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, {"bogus": {}}))
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, {"dims": {"bogus": 1}}))
    with pytest.raises(ConfigError):
        load_config(write_config(tmp_path, {"dims": 3}))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.json"))


def test_load_config_reports_json_position(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"dims": {,}}')
    with pytest.raises(ConfigError) as exc:
        load_config(str(p))
    assert "line 1" in str(exc.value)


def test_solve_writes_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    out = tmp_path / "run"
    code = main(["solve", "--config", cfg, "--out", str(out), "--verbose"])
    assert code == EXIT_OK
    assert (out / "iterations.csv").is_file()
    assert (out / "allocation.json").is_file()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "solve"
    assert manifest["resolved_config"]["dims"]["num_rrhs"] == 2
    assert sorted(manifest["outputs"]) == ["allocation.json", "iterations.csv"]
    header = (out / "iterations.csv").read_text().splitlines()[0]
    assert header == "iteration,objective,max_residual"
    dump = json.loads((out / "allocation.json").read_text())
    assert dump["converged"] is True
    captured = capsys.readouterr()
    assert "converged=True" in captured.out


def test_missing_config_exits_without_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["solve", "--config", str(tmp_path / "absent.json"),
                 "--out", str(out)])
    assert code == EXIT_CONFIG
    assert not (out / "manifest.json").exists()
    assert not (out / "iterations.csv").exists()
    assert "config error" in capsys.readouterr().err


def test_infeasible_run_exits_2_without_manifest(tmp_path, capsys):
    doc = dict(SMALL)
    doc["radio"] = {"reserved_rate": 1e9}
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "run"
    code = main(["solve", "--config", cfg, "--out", str(out)])
    assert code == EXIT_INFEASIBLE
    assert not (out / "manifest.json").exists()
    assert "infeasible" in capsys.readouterr().err


def test_sweep_tau_rerun_is_byte_identical(tmp_path, capsys):
    doc = dict(SMALL)
    doc["sweep"] = {"grid": [0.02, 0.05, 0.1], "trials_per_point": 3}
    cfg = write_config(tmp_path, doc)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep-tau", "--config", cfg, "--out", str(out_a),
                 "--quiet"]) == EXIT_OK
    assert main(["sweep-tau", "--config", cfg, "--out", str(out_b),
                 "--quiet"]) == EXIT_OK
    assert (out_a / "sweep_tau.csv").read_bytes() == \
        (out_b / "sweep_tau.csv").read_bytes()
    assert (out_a / "manifest.json").read_bytes() == \
        (out_b / "manifest.json").read_bytes()
    header = (out_a / "sweep_tau.csv").read_text().splitlines()[0]
    assert header == "tau_ms,mean_throughput,stderr,infeasible_trials"
    assert capsys.readouterr().out == ""  # --quiet suppresses the summary


def test_interruption_command(tmp_path):
    doc = dict(SMALL)
    doc["sweep"] = {"grid": [0.01, 0.05], "trials_per_point": 500}
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "run"
    assert main(["interruption", "--config", cfg, "--out", str(out),
                 "--quiet"]) == EXIT_OK
    lines = (out / "interruption.csv").read_text().splitlines()
    assert lines[0] == "tau_ms,p_interrupt,stderr"
    assert len(lines) == 3


def test_seed_override_changes_results(tmp_path):
    doc = dict(SMALL)
    doc["sweep"] = {"grid": [0.05], "trials_per_point": 2}
    cfg = write_config(tmp_path, doc)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    main(["sweep-tau", "--config", cfg, "--out", str(out_a), "--quiet"])
    main(["sweep-tau", "--config", cfg, "--out", str(out_b), "--quiet",
          "--seed", "99"])
    assert (out_a / "sweep_tau.csv").read_bytes() != \
        (out_b / "sweep_tau.csv").read_bytes()
    manifest = json.loads((out_b / "manifest.json").read_text())
    assert manifest["seed"] == 99


def test_pfa_sweep_command(tmp_path):
    doc = dict(SMALL)
    doc["sweep"] = {"grid": [0.1, 0.3], "trials_per_point": 2}
    cfg = write_config(tmp_path, doc)
    out = tmp_path / "run"
    assert main(["sweep-pfa", "--config", cfg, "--out", str(out),
                 "--quiet"]) == EXIT_OK
    lines = (out / "sweep_pfa.csv").read_text().splitlines()
    assert lines[0] == "target_pfa,opt_tau_ms,stderr_ms,infeasible_trials"
    assert len(lines) == 3
