import hashlib
import json
import re
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from collapse_lab.artifacts import (
    CSV_SCHEMA,
    MANIFEST_SCHEMA,
    format_value,
    load_manifest,
    output_role,
    table_to_csv_bytes,
)
from collapse_lab.cli import main
from collapse_lab.scenarios import Column, Table

SMALL_ARGS = ["--n-traj", "150", "--t-max", "0.2", "--record-every", "0.05",
              "--n-blocks", "5", "--seed", "11"]


@pytest.fixture
def runner():
    return CliRunner()


def _manifest_path(out_dir: Path, scenario: str) -> Path:
    hits = sorted(out_dir.glob(f"{scenario}_*.manifest.json"))
    assert hits, f"no manifest for {scenario} in {out_dir}"
    return hits[-1]


class TestCsvFormat:
    def test_schema_and_precision(self):
        table = Table("demo", [Column("tJ", np.array([0.0, 0.01])),
                               Column("x", np.array([1 / 3, 2e-17]))])
        text = table_to_csv_bytes(table).decode()
        lines = text.splitlines()
        assert lines[0] == f"# {CSV_SCHEMA}"
        assert lines[1] == "# table: demo"
        assert lines[2] == "tJ,x"
        assert lines[3] == "0,0.333333333333"
        assert lines[4] == "0.01,2e-17"
        assert text.endswith("\n") and "\r" not in text

    def test_format_value_12_digits(self):
        assert format_value(0.5623351446188083) == "0.562335144619"

    def test_output_role(self):
        assert output_role("fig2_frozen_20260809T120000000000.csv") == "fig2_frozen"
        assert output_role("born_20260809T120000000000.json") == "born"


class TestScenarioCommands:
    def test_born_writes_data_and_manifest(self, runner, tmp_path):
        result = runner.invoke(main, ["born", *SMALL_ARGS, "--t-max", "10",
                                      "--record-every", "0.5",
                                      "--out-dir", str(tmp_path)])
        assert result.exit_code == 0, result.output
        manifest = load_manifest(_manifest_path(tmp_path, "born"))
        assert manifest["schema"] == MANIFEST_SCHEMA
        assert manifest["config"]["n_traj"] == 150
        for entry in manifest["outputs"]:
            payload = (tmp_path / entry["file"]).read_bytes()
            assert hashlib.sha256(payload).hexdigest() == entry["sha256"]
            assert len(payload) == entry["bytes"]

    def test_fig2_csv_files(self, runner, tmp_path):
        result = runner.invoke(main, ["fig2", *SMALL_ARGS, "--out-dir", str(tmp_path)])
        assert result.exit_code == 0, result.output
        frozen = sorted(tmp_path.glob("fig2_frozen_*.csv"))
        white = sorted(tmp_path.glob("fig2_white_*.csv"))
        assert len(frozen) == 1 and len(white) == 1
        header = frozen[0].read_text().splitlines()
        assert header[0] == f"# {CSV_SCHEMA}"
        cols = header[2].split(",")
        assert cols[:5] == ["tJ", "s_td_nats", "s_ent_avg_nats", "s_sum_nats",
                            "s_td_int_nats"]

    def test_same_seed_reproduces_csv_bytes(self, runner, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            r = runner.invoke(main, ["fig2", *SMALL_ARGS, "--out-dir", str(out)])
            assert r.exit_code == 0
        data_a = sorted(a.glob("fig2_*.csv"))
        data_b = sorted(b.glob("fig2_*.csv"))
        for fa, fb in zip(data_a, data_b):
            assert fa.read_bytes() == fb.read_bytes()

    def test_interrupt_and_dephasing_and_fig1(self, runner, tmp_path):
        for args, scenario in [
            (["interrupt", *SMALL_ARGS, "--t-interrupt", "0.1"], "interrupt"),
            (["dephasing", *SMALL_ARGS, "--gamma", "1.5"], "dephasing"),
            (["fig1", *SMALL_ARGS, "--k-traj", "2"], "fig1"),
        ]:
            r = runner.invoke(main, [*args, "--out-dir", str(tmp_path)])
            assert r.exit_code == 0, (scenario, r.output)
            assert _manifest_path(tmp_path, scenario).exists()

    def test_invalid_config_exits_2(self, runner, tmp_path):
        r = runner.invoke(main, ["born", "--noise", "ou", *SMALL_ARGS,
                                 "--out-dir", str(tmp_path)])
        assert r.exit_code == 2
        assert "tau" in r.output


class TestReplay:
    def test_replay_is_byte_identical(self, runner, tmp_path):
        r = runner.invoke(main, ["fig2", *SMALL_ARGS, "--out-dir", str(tmp_path)])
        assert r.exit_code == 0
        manifest = _manifest_path(tmp_path, "fig2")
        replay_dir = tmp_path / "replay"
        r2 = runner.invoke(main, ["replay", str(manifest), "--out-dir", str(replay_dir)])
        assert r2.exit_code == 0, r2.output
        assert r2.output.count("[PASS]") == 2
        # and the files themselves match the originals byte for byte
        originals = {output_role(p.name): p.read_bytes()
                     for p in tmp_path.glob("fig2_*.csv")}
        for p in replay_dir.glob("fig2_*.csv"):
            assert p.read_bytes() == originals[output_role(p.name)]

    def test_replay_detects_tampering(self, runner, tmp_path):
        r = runner.invoke(main, ["born", *SMALL_ARGS, "--t-max", "10",
                                 "--record-every", "0.5", "--out-dir", str(tmp_path)])
        assert r.exit_code == 0
        manifest_path = _manifest_path(tmp_path, "born")
        doc = json.loads(manifest_path.read_text())
        doc["config"]["seed"] = 999  # different run, hashes must mismatch
        manifest_path.write_text(json.dumps(doc))
        r2 = runner.invoke(main, ["replay", str(manifest_path),
                                  "--out-dir", str(tmp_path / "r")])
        assert r2.exit_code == 1
        assert "[FAIL]" in r2.output


class TestConfigFile:
    def test_sections_and_precedence(self, runner, tmp_path):
        cfg = tmp_path / "lab.ini"
        cfg.write_text(
            "[common]\nn_traj = 120\nseed = 11\nt_max = 0.2\nrecord_every = 0.05\n"
            "n_blocks = 5\n\n[born]\nt_max = 10\nrecord_every = 0.5\n"
        )
        out = tmp_path / "out"
        r = runner.invoke(main, ["born", "--config", str(cfg), "--n-traj", "80",
                                 "--out-dir", str(out)])
        assert r.exit_code == 0, r.output
        manifest = load_manifest(_manifest_path(out, "born"))
        assert manifest["config"]["n_traj"] == 80      # flag beats file
        assert manifest["config"]["t_max"] == 10.0     # scenario section beats common
        assert manifest["config"]["seed"] == 11        # common applies

    def test_unknown_key_named_in_error(self, runner, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[common]\nn_trajectories = 5\n")
        r = runner.invoke(main, ["fig2", "--config", str(cfg)])
        assert r.exit_code == 2
        assert "n_trajectories" in r.output

    def test_missing_file_errors(self, runner):
        r = runner.invoke(main, ["fig2", "--config", "/nope/absent.ini"])
        assert r.exit_code == 2


class TestWorkersEnv:
    def test_env_var_fallback(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("COLLAPSE_LAB_WORKERS", "2")
        r = runner.invoke(main, ["born", *SMALL_ARGS, "--t-max", "10",
                                 "--record-every", "0.5", "--out-dir", str(tmp_path)])
        assert r.exit_code == 0
        manifest = load_manifest(_manifest_path(tmp_path, "born"))
        assert manifest["workers"] == 2

    def test_flag_overrides_env(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("COLLAPSE_LAB_WORKERS", "4")
        r = runner.invoke(main, ["born", *SMALL_ARGS, "--t-max", "10",
                                 "--record-every", "0.5", "--workers", "1",
                                 "--out-dir", str(tmp_path)])
        assert r.exit_code == 0
        manifest = load_manifest(_manifest_path(tmp_path, "born"))
        assert manifest["workers"] == 1


class TestExitCodes:
    def test_fail_status_exits_1(self, monkeypatch, runner, tmp_path):
        from collapse_lab import cli as cli_mod

        payload = {
            "scenario": "fig2", "code_version": "0.0", "status": "fail",
            "duration_seconds": 0.0, "master_seed": 1, "workers_used": 1,
            "config": {}, "tables": [], "summary": {},
            "checks": [{"name": "x", "status": "fail", "detail": "boom"}],
        }
        assert cli_mod._emit(payload, str(tmp_path)) == 1

    def test_warn_status_exits_0(self, runner, tmp_path):
        # t_max = 6 leaves a few percent unresolved (warning) while the
        # outcome fraction is still within its statistical band
        r = runner.invoke(main, ["born", *SMALL_ARGS, "--t-max", "6",
                                 "--record-every", "0.5", "--out-dir", str(tmp_path)])
        assert r.exit_code == 0
        assert "WARN" in r.output
