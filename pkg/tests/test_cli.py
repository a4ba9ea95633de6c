import json

import numpy as np
import pytest
from click.testing import CliRunner

from glyphforge import data as gdata
from glyphforge.cli import main
from glyphforge.data import export_dataset, generate_synthetic_dataset


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def synth_ds(tmp_path, runner):
    path = tmp_path / "ds.glyphds"
    result = runner.invoke(main, ["dataset", "synth", "--styles", "12",
                                  "--classes", "3", "--size", "16",
                                  "--seed", "7", "-o", str(path)])
    assert result.exit_code == 0, result.output
    return path


@pytest.fixture
def trained(tmp_path, synth_ds, runner):
    out = tmp_path / "run"
    result = runner.invoke(main, [
        "train", "--dataset", str(synth_ds), "--out", str(out),
        "--epochs", "1", "--batch-size", "4", "--seed", "1"])
    assert result.exit_code == 0, result.output
    return out


def test_dataset_synth(synth_ds):
    ds = gdata.load_cache(synth_ds)
    assert ds.num_fonts == 12 and ds.num_classes == 3


def test_dataset_synth_summary(runner, tmp_path):
    result = runner.invoke(main, ["dataset", "synth", "--styles", "2",
                                  "--classes", "4", "--size", "16",
                                  "-o", str(tmp_path / "d.glyphds")])
    assert result.exit_code == 0
    assert "2 fonts x 4 classes at 16x16" in result.output


def test_dataset_build(runner, tmp_path):
    ds = generate_synthetic_dataset(2, 3, 16, seed=0)
    export_dataset(ds, tmp_path / "pngs")
    out = tmp_path / "built.glyphds"
    result = runner.invoke(main, ["dataset", "build", "--root",
                                  str(tmp_path / "pngs"), "-o", str(out)])
    assert result.exit_code == 0, result.output
    back = gdata.load_cache(out)
    np.testing.assert_array_equal(back.images, ds.images)


def test_dataset_build_missing_root_usage_error(runner):
    result = runner.invoke(main, ["dataset", "build", "-o", "x.glyphds"])
    assert result.exit_code == 2


def test_dataset_synth_runtime_error(runner, tmp_path):
    result = runner.invoke(main, ["dataset", "synth", "--styles", "1",
                                  "--classes", "27", "--size", "16",
                                  "-o", str(tmp_path / "d.glyphds")])
    assert result.exit_code == 1


def test_train_writes_artifacts(trained):
    assert (trained / "final.ggan").is_file()
    csv_lines = (trained / "telemetry.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 1 + 3  # header + C generator steps


def test_train_invalid_loss_mode(runner, synth_ds, tmp_path):
    result = runner.invoke(main, [
        "train", "--dataset", str(synth_ds), "--out", str(tmp_path / "o"),
        "--epochs", "1", "--loss-mode", "bogus"])
    assert result.exit_code == 2
    assert "wgan-gp" in result.output  # names the valid modes


def test_train_wgan_clip_zero_penalty_column(runner, synth_ds, tmp_path):
    out = tmp_path / "clip"
    result = runner.invoke(main, [
        "train", "--dataset", str(synth_ds), "--out", str(out),
        "--epochs", "1", "--batch-size", "4", "--loss-mode", "wgan-clip"])
    assert result.exit_code == 0, result.output
    rows = (out / "telemetry.csv").read_text().strip().splitlines()[1:]
    assert all(float(row.split(",")[5]) == 0.0 for row in rows)


def test_train_config_file_with_comments(runner, synth_ds, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{\n// adversarial objective\n"loss_mode": "wgan-gp",\n'
                   '"epochs": 1, "batch_size": 4, "base_channels": 8}\n')
    result = runner.invoke(main, [
        "train", "--config", str(cfg), "--dataset", str(synth_ds),
        "--out", str(tmp_path / "o")])
    assert result.exit_code == 0, result.output


def test_train_config_unknown_key_rejected(runner, synth_ds, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"epochs": 1, "bogus": true}')
    result = runner.invoke(main, [
        "train", "--config", str(cfg), "--dataset", str(synth_ds),
        "--out", str(tmp_path / "o")])
    assert result.exit_code == 2
    assert "bogus" in result.output


def test_generate_grid(runner, trained, tmp_path):
    out = tmp_path / "gen"
    result = runner.invoke(main, [
        "generate", "--checkpoint", str(trained / "final.ggan"),
        "--count", "2", "--seed", "5", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "grid.png").is_file()
    assert (out / "style0001_class02.png").is_file()


def test_generate_deterministic(runner, trained, tmp_path):
    args = ["generate", "--checkpoint", str(trained / "final.ggan"),
            "--count", "2", "--seed", "5"]
    r1 = runner.invoke(main, args + ["--out", str(tmp_path / "a")])
    r2 = runner.invoke(main, args + ["--out", str(tmp_path / "b")])
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert (tmp_path / "a" / "grid.png").read_bytes() == \
        (tmp_path / "b" / "grid.png").read_bytes()


def test_generate_zero_count_error(runner, trained, tmp_path):
    result = runner.invoke(main, [
        "generate", "--checkpoint", str(trained / "final.ggan"),
        "--count", "0", "--out", str(tmp_path / "g")])
    assert result.exit_code == 1


def test_evaluate_report(runner, trained, synth_ds, tmp_path):
    out = tmp_path / "eval"
    result = runner.invoke(main, [
        "evaluate", "--checkpoint", str(trained / "final.ggan"),
        "--dataset", str(synth_ds), "--num-styles", "6",
        "--classifier-epochs", "4", "--out", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "report.json").read_text())
    for key in ("legibility_accuracy", "style_consistency", "diversity",
                "histogram_counts"):
        assert key in report
    assert (out / "histogram.csv").is_file()
    assert (out / "histogram.png").is_file()


def test_evaluate_generated_override_degenerate(runner, trained, synth_ds,
                                                tmp_path):
    result = runner.invoke(main, [
        "evaluate", "--checkpoint", str(trained / "final.ggan"),
        "--dataset", str(synth_ds), "--classifier-epochs", "2",
        "--generated-override", str(synth_ds), "--out", str(tmp_path / "e")])
    assert result.exit_code == 0, result.output
    assert "zero-distance rows = 12" in result.output


def test_interpolate_strip(runner, trained, tmp_path):
    out = tmp_path / "strip.png"
    result = runner.invoke(main, [
        "interpolate", "--checkpoint", str(trained / "final.ggan"),
        "--seeds", "1,2", "--steps", "8", "--class", "0",
        "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "9 frames" in result.output
    assert out.is_file()


def test_interpolate_identical_seeds(runner, trained, tmp_path):
    out = tmp_path / "strip.png"
    result = runner.invoke(main, [
        "interpolate", "--checkpoint", str(trained / "final.ggan"),
        "--seeds", "3,3", "--steps", "4", "--out", str(out)])
    assert result.exit_code == 0
    from PIL import Image
    strip = np.asarray(Image.open(out))
    # all frames identical: the strip is periodic in the frame axis
    size = 16
    pad = 2
    first = strip[:, pad:pad + size]
    for k in range(1, 5):
        x = pad + k * (size + pad)
        np.testing.assert_array_equal(strip[:, x:x + size], first)


def test_interpolate_requires_anchor_source(runner, trained, tmp_path):
    result = runner.invoke(main, [
        "interpolate", "--checkpoint", str(trained / "final.ggan"),
        "--out", str(tmp_path / "s.png")])
    assert result.exit_code == 2
