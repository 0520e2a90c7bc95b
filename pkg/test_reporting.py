"""Tests for persistence, result tables, plots and the command line."""
import json

import numpy as np
import pytest

from cli.main import main
from ewc.penalty import ConsolidationState
from nn_core.layers import FullyConnected, SoftmaxReadout
from nn_core.network import NetworkSpec, init_network
from protocols.records import CURVE_D1, CURVE_D2, CURVE_UNION, Curve, ExperimentSummary, Paradigm, RunRecord, RunStage
from reporting.plots import plot_record
from reporting.store import RecordStore, experiment_dir_name, load_record_file
from reporting.tables import MISSING, build_tables, read_table_csv
from utils.errors import RecordError

TINY_FLAGS = [
    "--tmax", "20", "--batch-size", "10", "--eval-every", "10",
    "--hidden-layers", "1", "--layer-sizes", "16", "--lr-d1", "0.001", "--lr-d2", "0.001",
]


def record_with(curves, t_max=100):
    return RunRecord(
        run_id="abc123", experiment_id="e", paradigm=Paradigm.REALISTIC, stage=RunStage.RETRAIN,
        model_family="D-fc", task="D9-1b", hyperparams={"lr_d2": 0.001}, seeds={"d2_batches": 7},
        t_max=t_max, eval_every=50, batch_size=100, curves=curves, quality=0.1, t_e=50, q_r_star=1.0,
    )


def summary_for(family, task, paradigm, seed, q_star, chance):
    return ExperimentSummary(
        experiment_id=f"{family}-{task}-{seed}", model_family=family, task=task, paradigm=paradigm,
        seed=seed, settings={}, grid={}, q_star=q_star, chance_level=chance,
    )


def write_summary(root, summary):
    store = RecordStore(root / experiment_dir_name(summary.model_family, summary.task, summary.paradigm, summary.seed))
    store.save_summary(summary)
    return store


def test_record_round_trip_and_curve_csv(tmp_path):
    record = record_with({CURVE_D2: Curve(iterations=[100, 150, 200], accuracies=[0.0, 0.5, 1.0])})
    store = RecordStore(tmp_path)
    store.save_record(record)
    assert store.load_record("abc123") == record
    lines = (tmp_path / "curves" / "abc123.csv").read_text().splitlines()
    assert lines[0] == "iteration,curve_name,accuracy"
    assert lines[2] == "150,d2_d2,0.5"
    assert store.has_completed("abc123")


def test_corrupt_records_are_reported(tmp_path):
    store = RecordStore(tmp_path)
    store.save_record(record_with({}))
    (store.runs_dir / "broken.json").write_text("{not json")
    records, corrupt = store.list_records()
    assert [r.run_id for r in records] == ["abc123"]
    assert corrupt == [store.runs_dir / "broken.json"]
    with pytest.raises(RecordError):
        load_record_file(store.runs_dir / "broken.json")
    with pytest.raises(RecordError):
        store.load_record("missing")


def test_invalid_curves_are_rejected():
    with pytest.raises(ValueError):
        Curve(iterations=[10, 10], accuracies=[0.1, 0.2])
    with pytest.raises(ValueError):
        Curve(iterations=[10], accuracies=[1.5])


def test_snapshot_and_consolidation_round_trip(tmp_path, mnist_splits):
    spec = NetworkSpec((784,), (FullyConnected(784, 6), FullyConnected(6, 10), SoftmaxReadout(10)))
    state = init_network(spec, seed=0)
    store = RecordStore(tmp_path)
    store.save_snapshot("run", state.params)
    loaded = store.load_snapshot("run")
    for original, restored in zip(state.params, loaded):
        assert set(original) == set(restored)
        for name in original:
            assert np.array_equal(original[name], restored[name])
    assert store.load_snapshot("other") is None

    consolidation = ConsolidationState.capture(state, mnist_splits[0], n_samples=5, seed=0)
    store.save_consolidation("key", consolidation)
    again = store.load_consolidation("key")
    assert again.fisher.n_samples == 5
    assert np.array_equal(again.fisher.values[1]["weight"], consolidation.fisher.values[1]["weight"])
    assert np.array_equal(again.anchor.values[0]["bias"], consolidation.anchor.values[0]["bias"])


def test_tables_group_by_paradigm_and_average_seeds(tmp_path):
    write_summary(tmp_path, summary_for("EWC", "D9-1c", Paradigm.REALISTIC, 0, 0.96, 0.1))
    write_summary(tmp_path, summary_for("EWC", "D9-1c", Paradigm.REALISTIC, 1, 0.98, 0.1))
    write_summary(tmp_path, summary_for("fc", "D5-5a", Paradigm.REALISTIC, 0, 0.49, 0.5))
    write_summary(tmp_path, summary_for("conv", "D5-5a", Paradigm.PRESCIENT, 0, 0.51, 0.5))
    tables, corrupt = build_tables(tmp_path)
    assert not corrupt
    assert set(tables) == {Paradigm.PRESCIENT, Paradigm.REALISTIC}

    realistic = tables[Paradigm.REALISTIC]
    assert realistic.families == ["EWC", "fc"]
    assert realistic.tasks == ["D5-5a", "D9-1c"]
    assert realistic.get("EWC", "D9-1c") == pytest.approx(0.97)
    assert realistic.replicates[("EWC", "D9-1c")] == 2
    assert realistic.get("EWC", "D5-5a") is None
    assert realistic.chance == {"D5-5a": 0.5, "D9-1c": 0.1}

    text = realistic.render_text()
    assert "Realistic evaluation" in text and MISSING in text and "0.9700" in text
    assert read_table_csv(realistic.render_csv()) == realistic


def test_report_lists_corrupt_summaries_and_rejects_empty_dirs(tmp_path):
    with pytest.raises(RecordError, match="No records found"):
        build_tables(tmp_path)
    write_summary(tmp_path, summary_for("fc", "D9-1a", Paradigm.PRESCIENT, 0, 0.87, 0.1))
    broken = tmp_path / "fc__D9-1b__prescient__seed0"
    broken.mkdir()
    (broken / "summary.json").write_text("[]")
    tables, corrupt = build_tables(tmp_path)
    assert corrupt == [broken / "summary.json"]
    assert tables[Paradigm.PRESCIENT].get("fc", "D9-1a") == 0.87


def test_plot_draws_only_present_curves(tmp_path):
    full = record_with({
        CURVE_D1: Curve(iterations=[0, 50, 100], accuracies=[0.1, 0.9, 1.0]),
        CURVE_D2: Curve(iterations=[100, 150, 200], accuracies=[0.0, 1.0, 1.0]),
        CURVE_UNION: Curve(iterations=[100, 150, 200], accuracies=[0.9, 0.1, 0.1]),
    })
    svg = plot_record(full, tmp_path / "full.svg").read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg
    assert "χ(D1, D1, t)" in svg and "χ(D2, D2, t)" in svg and "χ(D2, D1∪D2, t)" in svg

    d1_only = record_with({CURVE_D1: Curve(iterations=[0, 50, 100], accuracies=[1.0, 1.0, 1.0])})
    svg = plot_record(d1_only, tmp_path / "d1.svg").read_text()
    assert "χ(D1, D1, t)" in svg and "χ(D2, D2, t)" not in svg

    with pytest.raises(RecordError):
        plot_record(record_with({}), tmp_path / "empty.svg")


def test_cli_unknown_task_lists_presets(tmp_path, capsys, mnist_dir):
    code = main(["run", "--model", "fc", "--task", "D7-3a", "--data-dir", str(mnist_dir), "--out-dir", str(tmp_path)])
    assert code == 1
    err = capsys.readouterr().err
    assert "D5-5a" in err and "DP10-10" in err


def test_cli_missing_data_fails(tmp_path, capsys):
    code = main(["run", "--model", "fc", "--task", "D9-1a", "--data-dir", str(tmp_path / "none"), "--out-dir", str(tmp_path)] + TINY_FLAGS)
    assert code == 1
    assert "MNIST files missing" in capsys.readouterr().err


def test_cli_run_is_deterministic_and_reportable(tmp_path, capsys, mnist_dir):
    out = tmp_path / "out"
    argv = ["run", "--model", "fc", "--task", "D9-1a", "--paradigm", "realistic", "--seed", "1",
            "--data-dir", str(mnist_dir), "--out-dir", str(out)] + TINY_FLAGS
    assert main(argv) == 0
    experiment = out / "fc__D9-1a__realistic__seed1"
    first = (experiment / "summary.json").read_bytes()
    assert main(argv) == 0
    assert (experiment / "summary.json").read_bytes() == first

    summary = json.loads(first)
    assert 0.0 <= summary["q_star"] <= 1.0
    assert summary["chance_level"] == pytest.approx(0.1)
    assert json.loads((experiment / "status.json").read_text())["status"] == "completed"

    capsys.readouterr()
    assert main(["report", str(out), "--verify"]) == 0
    printed = capsys.readouterr().out
    assert "Realistic evaluation" in printed and "reproduce" in printed
    table = read_table_csv((out / "tables" / "realistic.csv").read_text())
    assert table.get("fc", "D9-1a") == summary["q_star"]

    assert main(["plot", str(experiment)]) == 0
    assert (experiment / "plots" / f"{summary['best_run_id']}.svg").exists()


def test_cli_grid_counts_and_resumes(tmp_path, capsys, mnist_dir):
    out = tmp_path / "out"
    argv = ["grid", "--model", "fc", "--task", "D9-1a", "--paradigm", "realistic", "--seeds", "0",
            "--data-dir", str(mnist_dir), "--out-dir", str(out),
            "--tmax", "20", "--batch-size", "10", "--eval-every", "10",
            "--hidden-layers", "1", "--layer-sizes", "8,16", "--lr-d1", "0.01,0.001", "--lr-d2", "0.001,0.0001"]
    assert main(argv) == 0
    store = RecordStore(out / "fc__D9-1a__realistic__seed0")
    records, _ = store.list_records()
    assert sum(r.stage is RunStage.INITIAL for r in records) == 4
    assert sum(r.stage is RunStage.RETRAIN for r in records) == 2

    stamps = {path.name: path.stat().st_mtime_ns for path in store.runs_dir.iterdir()}
    first = (store.root / "summary.json").read_bytes()
    assert main(argv) == 0
    assert {path.name: path.stat().st_mtime_ns for path in store.runs_dir.iterdir()} == stamps
    assert (store.root / "summary.json").read_bytes() == first


def test_cli_conv_grid_varies_only_learning_rates(tmp_path, mnist_dir):
    out = tmp_path / "out"
    argv = ["grid", "--model", "conv", "--task", "D9-1a", "--paradigm", "realistic",
            "--data-dir", str(mnist_dir), "--out-dir", str(out),
            "--tmax", "10", "--batch-size", "10", "--eval-every", "5", "--lr-d2", "0.001"]
    assert main(argv) == 0
    records, _ = RecordStore(out / "conv__D9-1a__realistic__seed0").list_records()
    initial = [r for r in records if r.stage is RunStage.INITIAL]
    assert sorted(r.hyperparams["lr_d1"] for r in initial) == [0.001, 0.01]
    assert all(r.hyperparams["num_hidden_layers"] is None for r in initial)


def test_config_file_precedence(tmp_path, mnist_dir):
    config = tmp_path / "experiment.json"
    config.write_text(json.dumps({
        "models": ["fc"], "tasks": ["D9-1b"], "paradigms": ["prescient"], "seeds": [3],
        "t_max": 999, "batch_size": 10, "eval_every": 10,
        "grid": {"hidden_layers": [1], "layer_sizes": [8], "lr_d1": [0.001], "lr_d2": [0.001]},
    }))
    out = tmp_path / "out"
    assert main(["run", "--config", str(config), "--tmax", "20", "--data-dir", str(mnist_dir), "--out-dir", str(out)]) == 0
    summary = json.loads((out / "fc__D9-1b__prescient__seed3" / "summary.json").read_text())
    assert summary["settings"]["t_max"] == 20
    assert summary["settings"]["batch_size"] == 10
    assert summary["grid"]["layer_sizes"] == [8]
