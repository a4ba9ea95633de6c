"""File outputs for reports and image sheets: JSON, delimited histogram
data, a rendered histogram figure, and PNG glyph grids."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from PIL import Image

from .evaluation import EvalReport

GRID_PAD = 2


def grid_image(images: np.ndarray, pad: int = GRID_PAD) -> np.ndarray:
    """Tile (R, C, S, S) glyphs into one uint8 grid, ink dark on light."""
    images = np.asarray(images)
    if images.ndim == 3:
        images = images[None]
    rows, cols, s, _ = images.shape
    canvas = np.full((rows * (s + pad) + pad, cols * (s + pad) + pad), 255,
                     dtype=np.uint8)
    for r in range(rows):
        for c in range(cols):
            y = pad + r * (s + pad)
            x = pad + c * (s + pad)
            cell = np.round((1.0 - images[r, c]) * 255.0).astype(np.uint8)
            canvas[y:y + s, x:x + s] = cell
    return canvas


def save_grid_png(images: np.ndarray, path) -> None:
    Image.fromarray(grid_image(images), mode="L").save(path)


def save_glyph_png(image: np.ndarray, path) -> None:
    arr = np.round(np.asarray(image) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)


def save_report(report: EvalReport, out_dir) -> dict:
    """Write report.json, histogram.csv, and histogram.png under out_dir.

    Returns the written paths keyed by kind.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "json": out / "report.json",
        "csv": out / "histogram.csv",
        "png": out / "histogram.png",
    }
    with open(paths["json"], "w") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")

    edges = report.histogram_bins
    counts = report.histogram_counts
    with open(paths["csv"], "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, count in zip(edges[:-1], edges[1:], counts):
            writer.writerow([lo, hi, count])

    fig, ax = plt.subplots(figsize=(6, 4))
    widths = np.diff(edges)
    ax.bar(edges[:-1], counts, width=widths, align="edge",
           edgecolor="black", linewidth=0.5)
    ax.set_xlabel("mean nearest-training distance per style")
    ax.set_ylabel("styles")
    ax.set_title(f"distance histogram (N={report.num_styles}, "
                 f"C_s={report.style_consistency:.3f}, "
                 f"C_d={report.diversity:.3f})")
    fig.tight_layout()
    fig.savefig(paths["png"], dpi=120)
    plt.close(fig)
    return paths
