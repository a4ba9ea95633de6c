"""Command-line entry point: dataset building, training, generation,
evaluation, interpolation, and the inference server.

Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
"""
from __future__ import annotations

import json
import os
import re
from pathlib import Path

import click
import numpy as np

from . import data as gdata
from . import evaluation as geval
from . import report as greport
from .models import sample_style
from .train import TrainConfig, Trainer, TrainError, load_checkpoint, \
    load_generator


def _apply_thread_cap():
    cap = os.environ.get("GLYPHFORGE_THREADS")
    if cap:
        import torch
        torch.set_num_threads(max(1, int(cap)))


def _load_config_file(path) -> dict:
    """JSON config with //-comments stripped; unknown keys are rejected
    downstream by TrainConfig."""
    text = Path(path).read_text()
    text = re.sub(r"^\s*//.*$", "", text, flags=re.MULTILINE)
    return json.loads(text)


class _Fail(click.ClickException):
    exit_code = 1


@click.group()
def main():
    """Style-conditioned glyph synthesis, evaluation, and serving."""
    _apply_thread_cap()


# -- dataset ----------------------------------------------------------------

@main.group()
def dataset():
    """Build or synthesize glyph datasets."""


@dataset.command("synth")
@click.option("--styles", type=int, required=True, help="number of synthetic fonts")
@click.option("--classes", type=int, required=True, help="number of character classes (<=26)")
@click.option("--size", type=int, default=32, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", type=click.Path(), required=True)
def dataset_synth(styles, classes, size, seed, output):
    """Generate the procedural synthetic corpus and write a .glyphds cache."""
    try:
        ds = gdata.generate_synthetic_dataset(styles, classes, size, seed)
        gdata.save_cache(ds, output)
    except gdata.DatasetError as e:
        raise _Fail(str(e))
    click.echo(f"wrote {output}: {ds.num_fonts} fonts x {ds.num_classes} "
               f"classes at {ds.image_size}x{ds.image_size}")


@dataset.command("build")
@click.option("--root", type=click.Path(exists=True, file_okay=False),
              required=True, help="root/<font_id>/<class_id>.png tree")
@click.option("-o", "--output", type=click.Path(), required=True)
def dataset_build(root, output):
    """Import a PNG tree and write a .glyphds cache."""
    try:
        ds = gdata.import_dataset(root)
        gdata.save_cache(ds, output)
    except gdata.DatasetError as e:
        raise _Fail(str(e))
    click.echo(f"wrote {output}: {ds.num_fonts} fonts x {ds.num_classes} "
               f"classes at {ds.image_size}x{ds.image_size}")


# -- train -------------------------------------------------------------------

@main.command("train")
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="JSON config file (// comments allowed)")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True),
              required=True, help=".glyphds cache")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--loss-mode", type=str, default=None,
              help="wgan-gp | wgan-clip | dcgan (overrides config)")
@click.option("--epochs", type=int, default=None)
@click.option("--batch-size", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--lam", type=float, default=None)
def cmd_train(config_path, dataset_path, out_dir, loss_mode, epochs,
              batch_size, seed, lam):
    """Train on a dataset; writes checkpoints and telemetry.csv to --out."""
    try:
        ds = gdata.load_cache(dataset_path)
    except gdata.DatasetError as e:
        raise _Fail(str(e))
    cfg_dict = _load_config_file(config_path) if config_path else {}
    cfg_dict.setdefault("image_size", ds.image_size)
    cfg_dict.setdefault("num_classes", ds.num_classes)
    for key, value in (("loss_mode", loss_mode), ("epochs", epochs),
                       ("batch_size", batch_size), ("seed", seed),
                       ("lam", lam)):
        if value is not None:
            cfg_dict[key] = value
    cfg_dict.setdefault("epochs", 1)
    try:
        config = TrainConfig.from_dict(cfg_dict)
        trainer = Trainer(config, ds, out_dir)
    except TrainError as e:
        raise click.UsageError(str(e))

    def progress(epoch, seconds, w_est):
        click.echo(f"epoch {epoch}/{config.resolved_epochs}  "
                   f"{seconds:.1f}s  wasserstein={w_est:.4f}")

    trainer.run(progress=progress)
    click.echo(f"done: {trainer.gen_steps} generator steps, "
               f"artifacts in {out_dir}")


# -- generate -----------------------------------------------------------------

@main.command("generate")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--count", type=int, required=True, help="number of styles (grid rows)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def cmd_generate(checkpoint, count, seed, out_dir):
    """Render a count x C grid PNG plus individual glyph PNGs."""
    if count < 1:
        raise _Fail("count must be >= 1")
    try:
        G, _ = load_generator(checkpoint)
    except Exception as e:
        raise _Fail(str(e))
    rng = np.random.default_rng(seed)
    styles = sample_style(rng, count)
    sheet = geval.generate_styles(G, styles)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    greport.save_grid_png(sheet, out / "grid.png")
    for n in range(count):
        for c in range(G.num_classes):
            greport.save_glyph_png(sheet[n, c], out / f"style{n:04d}_class{c:02d}.png")
    click.echo(f"wrote grid of {count}x{G.num_classes} cells to {out}")


# -- evaluate ------------------------------------------------------------------

@main.command("evaluate")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True),
              required=True)
@click.option("--num-styles", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--radius", type=int, default=geval.DEFAULT_RADIUS,
              show_default=True, help="pseudo-Hamming tolerance radius")
@click.option("--binarize", type=float, default=geval.DEFAULT_BINARIZE,
              show_default=True)
@click.option("--bin-width", type=float, default=None,
              help="histogram bin width (default: max/20)")
@click.option("--classifier-epochs", type=int, default=20, show_default=True)
@click.option("--generated-override", type=click.Path(exists=True),
              default=None,
              help=".glyphds whose images replace the generated set")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def cmd_evaluate(checkpoint, dataset_path, num_styles, seed, radius, binarize,
                 bin_width, classifier_epochs, generated_override, out_dir):
    """Run legibility, diversity, and style-consistency evaluation."""
    try:
        ds = gdata.load_cache(dataset_path)
        G, _ = load_generator(checkpoint)
    except Exception as e:
        raise _Fail(str(e))
    rng = np.random.default_rng(seed)
    try:
        clf, train_acc, test_acc = geval.train_legibility_cnn(
            ds, seed=seed, epochs=classifier_epochs)
    except geval.EvalError as e:
        raise _Fail(str(e))
    click.echo(f"classifier: train acc {train_acc:.4f}, "
               f"test acc {test_acc:.4f}")
    if generated_override is not None:
        gen_ds = gdata.load_cache(generated_override)
        generated = np.asarray(gen_ds.images, dtype=np.float32)
        dm = geval.nearest_training_distance(generated, ds, radius, binarize)
        try:
            c_s, zero_rows = geval.style_consistency(dm)
            click.echo(f"C_s={c_s:.4f} ({zero_rows} zero-distance rows "
                       "excluded)")
        except geval.EvalError as e:
            click.echo(f"style consistency undefined: {e}; "
                       f"zero-distance rows = {dm.d.shape[0]}")
        return
    try:
        rep = geval.evaluate_generator(
            G, ds, clf, num_styles, rng, radius=radius, threshold=binarize,
            bin_width=bin_width)
    except geval.EvalError as e:
        raise _Fail(str(e))
    paths = greport.save_report(rep, out_dir)
    click.echo(f"legibility={rep.legibility_accuracy:.4f}  "
               f"C_s={rep.style_consistency:.4f}  C_d={rep.diversity:.4f}")
    click.echo(f"report written to {paths['json']}")


# -- interpolate ---------------------------------------------------------------

@main.command("interpolate")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--seeds", type=str, default=None,
              help="comma-separated anchor seeds, e.g. 1,2,3")
@click.option("--anchors-file", type=click.Path(exists=True), default=None,
              help="JSON file with a list of 100-dim style vectors")
@click.option("--steps", type=int, default=8, show_default=True)
@click.option("--class", "class_id", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
def cmd_interpolate(checkpoint, seeds, anchors_file, steps, class_id,
                    out_path):
    """Render an interpolation strip PNG between anchor styles."""
    if (seeds is None) == (anchors_file is None):
        raise click.UsageError("provide exactly one of --seeds / --anchors-file")
    try:
        G, _ = load_generator(checkpoint)
    except Exception as e:
        raise _Fail(str(e))
    if seeds is not None:
        anchor_list = [
            sample_style(np.random.default_rng(int(s)))
            for s in seeds.split(",") if s.strip() != ""]
        anchors = np.stack(anchor_list)
    else:
        anchors = np.asarray(json.loads(Path(anchors_file).read_text()),
                             dtype=np.float32)
    try:
        frames = geval.interpolate_styles(G, anchors, steps, class_id)
    except geval.EvalError as e:
        raise _Fail(str(e))
    greport.save_grid_png(frames[None], out_path)
    click.echo(f"wrote strip of {frames.shape[0]} frames to {out_path}")


# -- serve ---------------------------------------------------------------------

@main.command("serve")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@click.option("--host", type=str, default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def cmd_serve(checkpoint, host, port):
    """Serve the checkpoint over HTTP for the style explorer."""
    from .serve import run_server
    run_server(checkpoint, host=host, port=port)


if __name__ == "__main__":
    main()
