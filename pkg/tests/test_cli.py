import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from pomdar.cli import EXIT_CATALOG, EXIT_GENERIC, EXIT_MISSING_FILE, main
from pomdar.mechanisms import TASK_IDS

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture()
def runner():
    return CliRunner()


def run(runner, *args, **kwargs):
    return runner.invoke(main, list(args), catch_exceptions=False, **kwargs)


class TestCatalog:
    def test_prints_18_rows(self, runner):
        result = run(runner, "catalog")
        assert result.exit_code == 0
        lines = [ln for ln in result.output.splitlines() if ln and not ln.startswith("id")]
        assert len(lines) == 18

    def test_structured_output(self, runner):
        result = run(runner, "--format", "structured", "catalog")
        data = json.loads(result.output)
        assert [t["id"] for t in data["tasks"]] == list(TASK_IDS)

    def test_missing_catalog_file(self, runner):
        result = runner.invoke(main, ["--catalog", "/nonexistent.yaml", "catalog"])
        assert result.exit_code == EXIT_MISSING_FILE
        err = json.loads(result.output.strip().splitlines()[-1])
        assert err["error"]["code"] == "missing_file"


class TestSimulateReplay:
    def test_simulate_then_replay_roundtrip(self, runner, tmp_path, policy_cache):
        from pomdar.service.session import write_log

        policy = tmp_path / "policy.jsonl"
        write_log(policy_cache("G4", "hand_full", 0), policy)
        store = tmp_path / "trials.jsonl"
        log_out = tmp_path / "log.jsonl"
        rec1 = tmp_path / "rec1.json"
        rec2 = tmp_path / "rec2.json"

        r = run(runner, "--store", str(store), "simulate", "--task", "G4",
                "--embodiment", "hand_full", "--policy", str(policy),
                "--log-out", str(log_out), "--record-out", str(rec1))
        assert r.exit_code == 0

        r = run(runner, "--store", str(store), "replay", "--log", str(log_out),
                "--record-out", str(rec2))
        assert r.exit_code == 0
        assert rec1.read_bytes() == rec2.read_bytes()

    def test_replay_shipped_golden_log(self, runner, tmp_path):
        rec_out = tmp_path / "rec.json"
        r = run(runner, "--store", str(tmp_path / "s.jsonl"), "replay",
                "--log", str(GOLDEN / "v1_hand_full.log.jsonl"),
                "--record-out", str(rec_out))
        assert r.exit_code == 0
        assert rec_out.read_bytes() == (GOLDEN / "v1_hand_full.record.json").read_bytes()

    def test_missing_log_exit_code(self, runner):
        result = runner.invoke(main, ["replay", "--log", "/nope.jsonl"])
        assert result.exit_code == EXIT_MISSING_FILE


class TestAggregate:
    def make_store(self, tmp_path):
        from pomdar.scoring import BaselineEntry, BaselineTable, TrialRecord
        from pomdar.scoring import append_trial, save_baselines

        store = tmp_path / "trials.jsonl"
        for i, task in enumerate(TASK_IDS):
            append_trial(store, TrialRecord(
                task_id=task, embodiment_id="hand_full", start_time=float(i),
                end_time=float(i) + 10.0, duration=10.0, correctness=1.0,
                source="test"))
        baselines = tmp_path / "baselines.yaml"
        save_baselines(BaselineTable(entries={
            t: BaselineEntry(time=10.0, note="fixture") for t in TASK_IDS
        }), baselines)
        return store, baselines

    def test_aggregate_writes_bundle_with_figures(self, runner, tmp_path):
        store, baselines = self.make_store(tmp_path)
        out = tmp_path / "report"
        r = run(runner, "--store", str(store), "--baselines", str(baselines),
                "aggregate", "--out", str(out))
        assert r.exit_code == 0
        assert (out / "report.json").exists()
        assert (out / "report.csv").exists()
        assert (out / "manipulation_radar.png").exists()
        assert (out / "grasp_radar.png").exists()
        data = json.loads((out / "report.json").read_text())
        assert data["per_embodiment"][0]["mean"] == 1.0
        csv_text = (out / "report.csv").read_text()
        assert csv_text.splitlines()[1].startswith("hand_full,V1,1,1.000000")

    def test_empty_store_rejected(self, runner, tmp_path):
        _, baselines = self.make_store(tmp_path)
        store = tmp_path / "empty.jsonl"
        store.write_text("")
        result = runner.invoke(main, ["--store", str(store), "--baselines",
                                      str(baselines), "aggregate"])
        assert result.exit_code == EXIT_GENERIC
        err = json.loads(result.output.strip().splitlines()[-1])
        assert "no trials" in err["error"]["message"]

    def test_score_alias(self, runner, tmp_path):
        store, baselines = self.make_store(tmp_path)
        r = run(runner, "--store", str(store), "--baselines", str(baselines), "score")
        assert r.exit_code == 0


class TestBaselineCommand:
    def test_builds_table_from_store(self, runner, tmp_path):
        from pomdar.scoring import TrialRecord, append_trial

        store = tmp_path / "trials.jsonl"
        for i, task in enumerate(TASK_IDS):
            for rep in range(2):
                append_trial(store, TrialRecord(
                    task_id=task, embodiment_id="human",
                    start_time=float(i * 10 + rep), end_time=float(i * 10 + rep) + 8.0,
                    duration=8.0 + rep * 4.0, correctness=1.0, source="human"))
        out = tmp_path / "baselines.yaml"
        r = run(runner, "--store", str(store), "baseline", "--out", str(out))
        assert r.exit_code == 0
        from pomdar.scoring import load_baselines

        table = load_baselines(out)
        assert table.complete
        assert table.time("V1") == 10.0  # mean of 8 and 12


class TestCalibrateCommand:
    def test_calibrate_from_pose_file(self, runner, tmp_path):
        from pomdar.hand import default_model
        from pomdar.retarget import standard_pose_set
        from pomdar.retarget.calibration import load_calibration, save_pose_set

        poses_path = tmp_path / "poses.json"
        save_pose_set(standard_pose_set(default_model()), poses_path)
        out = tmp_path / "calib.json"
        r = run(runner, "--seed", "3", "calibrate", "--poses", str(poses_path),
                "--out", str(out), "--budget", "80")
        assert r.exit_code == 0
        result = load_calibration(out)
        assert 0.95 <= result.params.scale <= 1.05
        assert result.seed == 3


class TestRetargetAndPca:
    def make_trajectory(self, tmp_path, n=160, task="V1"):
        from pomdar.hand import HandPose, default_model
        from pomdar.motion import Trajectory, save_trajectory

        model = default_model()
        rng = np.random.default_rng(4)
        q0 = rng.uniform(model.lower * 0.4, model.upper * 0.4)
        q1 = rng.uniform(model.lower * 0.4, model.upper * 0.4)
        ts = np.arange(n) / 100.0
        qs = np.linspace(0, 1, n)[:, None] * (q1 - q0) + q0
        kps = np.stack([model.forward_kinematics(HandPose(q=q)) for q in qs])
        path = tmp_path / f"traj_{task}.jsonl"
        save_trajectory(Trajectory(task_id=task, subject_id="s1", trial_index=0,
                                   timestamps=ts, keypoints=kps), path)
        return path

    def test_retarget_batch(self, runner, tmp_path):
        traj = self.make_trajectory(tmp_path, n=30)
        out = tmp_path / "joints.jsonl"
        r = run(runner, "retarget", "--trajectory", str(traj), "--out", str(out))
        assert r.exit_code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 30
        row = json.loads(lines[0])
        assert len(row["q"]) == 16

    def test_pca_export_with_figure(self, runner, tmp_path):
        t1 = self.make_trajectory(tmp_path, n=400, task="V1")
        t2 = self.make_trajectory(tmp_path, n=400, task="C2")
        out = tmp_path / "pca.json"
        fig = tmp_path / "pca.png"
        r = run(runner, "pca", "--trajectory", str(t1), "--trajectory", str(t2),
                "--out", str(out), "--components", "4", "--figure", str(fig))
        assert r.exit_code == 0
        data = json.loads(out.read_text())
        assert len(data["components"]) == 4
        assert fig.exists()

    def test_version_mismatch_exit_code(self, runner, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text(json.dumps({"type": "header", "format_version": 99,
                                   "task_id": "V1", "subject_id": "s"}) + "\n")
        result = runner.invoke(main, ["retarget", "--trajectory", str(bad),
                                      "--out", str(tmp_path / "o.jsonl")])
        assert result.exit_code == 3


class TestSeedDeterminism:
    def test_simulate_deterministic_given_seed(self, runner, tmp_path):
        outs = []
        for name in ("a", "b"):
            rec = tmp_path / f"{name}.json"
            r = run(runner, "--store", str(tmp_path / f"{name}.jsonl"), "--seed", "7",
                    "simulate", "--task", "G5", "--record-out", str(rec))
            assert r.exit_code == 0
            outs.append(rec.read_bytes())
        assert outs[0] == outs[1]
