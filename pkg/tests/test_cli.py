from __future__ import annotations

import json
from pathlib import Path

import pytest

from guardnet import cli
from guardnet.config import SEED_ENV
from guardnet.core.tracing import read_trace
from guardnet.data.ppm import write_ppm
from guardnet.data.synthetic import make_synthetic_dataset, write_synthetic_dataset

MICRO = ["--variant", "micronet-32"]


@pytest.fixture(autouse=True)
def _isolated(monkeypatch, tmp_path) -> None:
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(SEED_ENV, raising=False)


@pytest.fixture
def dataset_dir(tmp_path: Path) -> Path:
    return write_synthetic_dataset(tmp_path / "frames", per_class=2, size=32)


def _train(dataset: Path, out: Path, *extra: str) -> int:
    return cli.main(
        ["train", *MICRO, "--dataset", str(dataset), "--out", str(out), "--val-fraction", "0", *extra]
    )


def test_train_writes_weights_and_trace(dataset_dir, tmp_path, capsys) -> None:
    out = tmp_path / "w.sdlw"

    exit_code = _train(dataset_dir, out, "--epochs", "3", "--batch-size", "4")

    captured = capsys.readouterr()
    assert exit_code == 0
    assert out.exists()
    epoch_lines = [line for line in captured.out.splitlines() if line.startswith("epoch ")]
    assert len(epoch_lines) == 3
    assert f"weights saved to {out}" in captured.out
    kinds = [event.kind for event in read_trace(cli.trace_path_for(out))]
    assert kinds == ["train_start", "epoch", "epoch", "epoch", "weights_saved", "train_done"]


def test_same_seed_gives_identical_weights(dataset_dir, tmp_path) -> None:
    first = tmp_path / "a.sdlw"
    second = tmp_path / "b.sdlw"

    assert _train(dataset_dir, first, "--epochs", "2", "--seed", "9") == 0
    assert _train(dataset_dir, second, "--epochs", "2", "--seed", "9") == 0

    assert first.read_bytes() == second.read_bytes()


def test_seed_from_environment(dataset_dir, tmp_path, monkeypatch) -> None:
    flagged = tmp_path / "flag.sdlw"
    from_env = tmp_path / "env.sdlw"

    assert _train(dataset_dir, flagged, "--epochs", "1", "--seed", "4") == 0
    monkeypatch.setenv(SEED_ENV, "4")
    assert _train(dataset_dir, from_env, "--epochs", "1") == 0

    assert flagged.read_bytes() == from_env.read_bytes()


def test_eval_after_memorizing_fixture(dataset_dir, tmp_path, capsys) -> None:
    weights = tmp_path / "mem.sdlw"
    report_path = tmp_path / "report.json"
    assert _train(
        dataset_dir, weights, "--epochs", "150", "--batch-size", "6", "--no-augment", "--lr", "0.005"
    ) == 0
    capsys.readouterr()

    exit_code = cli.main(
        ["eval", *MICRO, "--weights", str(weights), "--dataset", str(dataset_dir),
         "--out", str(report_path)]
    )

    payload = json.loads(capsys.readouterr().out)
    assert exit_code == 0
    assert payload["micro_accuracy"] == 1.0
    assert payload["confusion"] == [[2, 0, 0], [0, 2, 0], [0, 0, 2]]
    assert payload["skipped_files"] == 0
    assert json.loads(report_path.read_text(encoding="utf-8")) == payload


def test_predict_reports_class_and_anomaly(dataset_dir, tmp_path, capsys) -> None:
    weights = tmp_path / "w.sdlw"
    assert _train(dataset_dir, weights, "--epochs", "1") == 0
    image = tmp_path / "frame.ppm"
    write_ppm(image, make_synthetic_dataset(per_class=1, size=48).samples[1].image.astype("uint8"))
    capsys.readouterr()

    exit_code = cli.main(["predict", *MICRO, "--weights", str(weights), "--image", str(image)])

    payload = json.loads(capsys.readouterr().out)
    assert exit_code == 0
    assert set(payload["probabilities"]) == {"admin", "intruder", "no_human"}
    assert sum(payload["probabilities"].values()) == pytest.approx(1.0, abs=1e-5)
    assert payload["anomaly"] == (payload["class"] == "intruder")


def test_bench_synthetic_source(capsys) -> None:
    exit_code = cli.main(["bench", *MICRO, "-n", "30", "--warmup", "2", "--seed", "3"])

    payload = json.loads(capsys.readouterr().out)
    assert exit_code == 0
    assert payload["frames"] == 30
    assert payload["variant"] == "micronet-32"
    assert payload["avg_fps"] * payload["mean_latency_ms"] == pytest.approx(1000.0, rel=1e-9)


def test_bench_rejects_too_few_frames(capsys) -> None:
    exit_code = cli.main(["bench", *MICRO, "-n", "10"])

    assert exit_code == 2
    assert "frames" in capsys.readouterr().err


def test_ttest_identical_files(tmp_path, capsys) -> None:
    sample = tmp_path / "a.txt"
    sample.write_text("0.91\n0.88\n0.95\n0.90\n", encoding="utf-8")

    exit_code = cli.main(["ttest", str(sample), str(sample), "--label", "admin"])

    payload = json.loads(capsys.readouterr().out)
    assert exit_code == 0
    assert payload["label"] == "admin"
    assert payload["t_statistic"] == 0.0
    assert payload["p_value"] == 1.0


def test_ttest_constant_samples_is_domain_error(tmp_path, capsys) -> None:
    flat = tmp_path / "flat.txt"
    flat.write_text("1.0\n1.0\n", encoding="utf-8")

    exit_code = cli.main(["ttest", str(flat), str(flat)])

    assert exit_code == 1
    assert capsys.readouterr().err.startswith("guardnet ttest:")


def test_invalid_config_value_exits_two(dataset_dir, tmp_path, capsys) -> None:
    config = tmp_path / "bad.ini"
    config.write_text(f"[train]\ndataset = {dataset_dir}\nepochs = 0\n", encoding="utf-8")

    exit_code = cli.main(["train", *MICRO, "--config", str(config)])

    err = capsys.readouterr().err
    assert exit_code == 2
    assert len(err.strip().splitlines()) == 1
    assert "epochs" in err


def test_unknown_config_key_exits_two(tmp_path, capsys) -> None:
    config = tmp_path / "bad.ini"
    config.write_text("[bench]\nframez = 40\n", encoding="utf-8")

    exit_code = cli.main(["bench", *MICRO, "--config", str(config)])

    assert exit_code == 2
    assert "framez" in capsys.readouterr().err


def test_missing_weights_file_exits_one(dataset_dir, tmp_path, capsys) -> None:
    exit_code = cli.main(
        ["eval", *MICRO, "--weights", str(tmp_path / "none.sdlw"), "--dataset", str(dataset_dir)]
    )

    assert exit_code == 1
    assert capsys.readouterr().err.startswith("guardnet eval:")


def test_unknown_variant_is_usage_error(capsys) -> None:
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["bench", "--variant", "resnet-50"])

    assert excinfo.value.code == 2
    assert "invalid choice" in capsys.readouterr().err
