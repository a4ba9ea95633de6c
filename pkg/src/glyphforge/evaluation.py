"""Evaluation of generated glyph sets along three axes: legibility via a
multi-font recognition CNN, diversity via nearest-training-pattern
distances, and per-style consistency of those distances.

The glyph distance is a tolerant binary mismatch count ("pseudo-Hamming"):
after binarizing both images, an ink pixel counts as unmatched when the
other image has no ink within Chebyshev radius r. All metric arithmetic is
done in 64-bit floats.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
from scipy.ndimage import maximum_filter

from .data import GlyphDataset
from .models import STYLE_DIM, Generator, assemble_latent_batch, sample_style

DEFAULT_RADIUS = 1
DEFAULT_BINARIZE = 0.5


class EvalError(Exception):
    pass


# ---------------------------------------------------------------------------
# Distances

def pseudo_hamming(a: np.ndarray, b: np.ndarray, radius: int = DEFAULT_RADIUS,
                   threshold: float = DEFAULT_BINARIZE) -> float:
    """Symmetric tolerant mismatch count between two glyph rasters."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise EvalError(f"size mismatch: {a.shape} vs {b.shape}")
    if radius < 0:
        raise EvalError("radius must be >= 0")
    if not 0.0 < threshold < 1.0:
        raise EvalError("binarization threshold must lie in (0, 1)")
    ink_a = a >= threshold
    ink_b = b >= threshold
    if radius == 0:
        return float(np.count_nonzero(ink_a != ink_b))
    size = 2 * radius + 1
    dil_a = maximum_filter(ink_a, size=size, mode="constant", cval=False)
    dil_b = maximum_filter(ink_b, size=size, mode="constant", cval=False)
    unmatched_a = np.count_nonzero(ink_a & ~dil_b)
    unmatched_b = np.count_nonzero(ink_b & ~dil_a)
    return float(unmatched_a + unmatched_b)


@dataclass
class DistanceMatrix:
    """Nearest-training-pattern distances for N generated styles x C classes."""

    d: np.ndarray              # (N, C) float64
    argmin_font: np.ndarray    # (N, C) int
    row_means: np.ndarray      # (N,) float64
    most_similar_font: np.ndarray  # (N,) int


def nearest_training_distance(generated: np.ndarray, training: GlyphDataset,
                              radius: int = DEFAULT_RADIUS,
                              threshold: float = DEFAULT_BINARIZE
                              ) -> DistanceMatrix:
    """d[n, c] = min over training fonts of pseudo_hamming(gen[n, c], x).

    Ties go to the lowest font id, both per cell and for the per-row most
    similar font.
    """
    generated = np.asarray(generated)
    if generated.ndim != 4 or generated.shape[0] == 0:
        raise EvalError("generated set must be a non-empty (N, C, S, S) array")
    n_styles, n_classes = generated.shape[:2]
    if n_classes != training.num_classes:
        raise EvalError(f"generated set has {n_classes} classes, training "
                        f"has {training.num_classes}")
    d = np.zeros((n_styles, n_classes), dtype=np.float64)
    argmin_font = np.zeros((n_styles, n_classes), dtype=np.int64)
    for n in range(n_styles):
        for c in range(n_classes):
            best = np.inf
            best_font = 0
            for f in range(training.num_fonts):
                dist = pseudo_hamming(generated[n, c],
                                      training.images[f, c],
                                      radius, threshold)
                if dist < best:
                    best = dist
                    best_font = f
            d[n, c] = best
            argmin_font[n, c] = best_font
    row_means = d.mean(axis=1)
    most_similar = np.zeros(n_styles, dtype=np.int64)
    for n in range(n_styles):
        counts = np.bincount(argmin_font[n], minlength=training.num_fonts)
        most_similar[n] = int(np.argmax(counts))  # argmax takes lowest tie
    return DistanceMatrix(d, argmin_font, row_means, most_similar)


def style_consistency(dm: DistanceMatrix):
    """Mean over styles of (per-row variance sum)/(row mean), scaled by
    1/(N*C); lower means more consistent. Rows with zero mean distance
    (verbatim training copies) are excluded and counted separately.

    Returns (c_s, num_zero_rows).
    """
    d = dm.d.astype(np.float64)
    means = dm.row_means.astype(np.float64)
    nonzero = means > 0
    num_zero = int(np.count_nonzero(~nonzero))
    if not nonzero.any():
        raise EvalError("degenerate: identical to training")
    d = d[nonzero]
    means = means[nonzero]
    n, c = d.shape
    per_row = ((d - means[:, None]) ** 2).sum(axis=1) / means
    return float(per_row.sum() / (n * c)), num_zero


def diversity_metric(row_means: np.ndarray) -> float:
    """Quartile coefficient of dispersion (Q3 - Q1) / (2 * Q2) of the
    per-style mean distances. Quartiles use linear interpolation at
    fractional rank p*(N-1)."""
    values = np.asarray(row_means, dtype=np.float64)
    if values.ndim != 1 or values.size < 4:
        raise EvalError("diversity metric needs at least 4 row means")
    q1, q2, q3 = np.percentile(values, [25, 50, 75])
    if q2 == 0:
        raise EvalError("median distance is zero; diversity undefined")
    return float((q3 - q1) / (2.0 * q2))


# ---------------------------------------------------------------------------
# Legibility classifier

class LegibilityClassifier(nn.Module):
    """Recognition CNN: four stride-2 convolutions with ReLU, a hidden
    fully-connected layer followed by batch normalization and dropout, and a
    C-way linear head."""

    CHANNELS = (32, 64, 128, 256)

    def __init__(self, image_size: int, num_classes: int,
                 hidden: int = 256, dropout: float = 0.5):
        super().__init__()
        self.image_size = image_size
        self.num_classes = num_classes
        convs = []
        ch = 1
        for out_ch in self.CHANNELS:
            convs.append(nn.Conv2d(ch, out_ch, 3, stride=2, padding=1))
            ch = out_ch
        self.convs = nn.ModuleList(convs)
        spatial = image_size // 16
        if spatial < 1:
            raise EvalError(f"image size {image_size} too small for the "
                            "four-conv classifier")
        self.fc = nn.Linear(ch * spatial * spatial, hidden)
        self.bn = nn.BatchNorm1d(hidden)
        self.dropout = nn.Dropout(dropout)
        self.head = nn.Linear(hidden, num_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() == 3:
            x = x.unsqueeze(1)
        h = x
        for conv in self.convs:
            h = torch.relu(conv(h))
        h = torch.relu(self.bn(self.fc(h.flatten(1))))
        return self.head(self.dropout(h))

    @torch.no_grad()
    def predict(self, images: np.ndarray) -> np.ndarray:
        self.eval()
        x = torch.from_numpy(np.array(images, dtype=np.float32, copy=True))
        return self.forward(x).argmax(dim=1).numpy()


def _dataset_tensors(dataset: GlyphDataset, font_ids):
    xs, ys = [], []
    for f in font_ids:
        for c in range(dataset.num_classes):
            xs.append(dataset.images[f, c])
            ys.append(c)
    return (np.stack(xs).astype(np.float32), np.array(ys, dtype=np.int64))


def train_legibility_cnn(dataset: GlyphDataset, seed: int = 0,
                         epochs: int = 20, batch_size: int = 64,
                         lr: float = 1e-3):
    """Train the recognition CNN with a 9:1 font-level split.

    Returns (classifier, train_accuracy, test_accuracy).
    """
    if dataset.num_fonts < 10:
        raise EvalError("need at least 10 fonts for the 9:1 split")
    rng = np.random.default_rng(seed)
    torch.manual_seed(seed)
    fonts = rng.permutation(dataset.num_fonts)
    n_train = (dataset.num_fonts * 9) // 10
    train_fonts, test_fonts = fonts[:n_train], fonts[n_train:]
    x_train, y_train = _dataset_tensors(dataset, train_fonts)
    x_test, y_test = _dataset_tensors(dataset, test_fonts)

    clf = LegibilityClassifier(dataset.image_size, dataset.num_classes)
    opt = torch.optim.Adam(clf.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    n = len(x_train)
    for _ in range(epochs):
        order = rng.permutation(n)
        clf.train()
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            if len(idx) < 2:
                continue  # BatchNorm needs more than one sample
            xb = torch.from_numpy(x_train[idx])
            yb = torch.from_numpy(y_train[idx])
            opt.zero_grad()
            loss = loss_fn(clf(xb), yb)
            loss.backward()
            opt.step()
    train_acc = float((clf.predict(x_train) == y_train).mean())
    test_acc = float((clf.predict(x_test) == y_test).mean())
    return clf, train_acc, test_acc


def generate_styles(G: Generator, styles: np.ndarray) -> np.ndarray:
    """Generate the full class sheet for each style: (N, C, S, S)."""
    styles = np.asarray(styles, dtype=np.float32)
    n = styles.shape[0]
    out = np.zeros((n, G.num_classes, G.image_size, G.image_size),
                   dtype=np.float32)
    for c in range(G.num_classes):
        z = assemble_latent_batch(styles, c, G.num_classes)
        out[:, c] = G.generate(z)
    return out


def legibility_score(G: Generator, classifier: LegibilityClassifier,
                     num_styles: int, rng: np.random.Generator,
                     generated: np.ndarray | None = None) -> float:
    """Fraction of generated glyphs classified as their conditioning class.

    Pass `generated` to score a precomputed (N, C, S, S) sheet instead of
    sampling new styles.
    """
    if classifier.num_classes != G.num_classes:
        raise EvalError("classifier and generator class counts differ")
    if generated is None:
        styles = sample_style(rng, num_styles)
        generated = generate_styles(G, styles)
    n, c = generated.shape[:2]
    preds = classifier.predict(generated.reshape(n * c, *generated.shape[2:]))
    labels = np.tile(np.arange(c), n)
    return float((preds == labels.reshape(n, c).ravel()).mean())


# ---------------------------------------------------------------------------
# Style interpolation

def interpolation_latents(anchors: np.ndarray, steps: int) -> np.ndarray:
    """Linear walk through consecutive anchors; shared endpoints are emitted
    once, giving (len(anchors)-1)*steps + 1 frames."""
    anchors = np.asarray(anchors, dtype=np.float32)
    if anchors.ndim != 2 or anchors.shape[1] != STYLE_DIM:
        raise EvalError(f"anchors must have shape (K, {STYLE_DIM}), "
                        f"got {anchors.shape}")
    if anchors.shape[0] < 2:
        raise EvalError("need at least 2 anchors")
    if steps < 1:
        raise EvalError("steps must be >= 1")
    frames = [anchors[0]]
    for a, b in zip(anchors[:-1], anchors[1:]):
        for k in range(1, steps + 1):
            t = k / steps
            frames.append((1.0 - t) * a + t * b)
    return np.stack(frames)


def interpolate_styles(G: Generator, anchors: np.ndarray, steps: int,
                       class_id: int) -> np.ndarray:
    """Generate the interpolation strip for one class: (F, S, S)."""
    if not 0 <= class_id < G.num_classes:
        raise EvalError(f"class id {class_id} out of range "
                        f"[0, {G.num_classes})")
    latents = interpolation_latents(anchors, steps)
    z = assemble_latent_batch(latents, class_id, G.num_classes)
    return G.generate(z)


# ---------------------------------------------------------------------------
# Report assembly

@dataclass
class EvalReport:
    legibility_accuracy: float
    style_consistency: float
    zero_distance_rows: int
    diversity: float
    min_distance: float
    max_distance: float
    fraction_below_threshold: float
    distance_threshold: float
    histogram_bins: list
    histogram_counts: list
    num_styles: int
    num_classes: int

    def to_dict(self) -> dict:
        return {
            "legibility_accuracy": self.legibility_accuracy,
            "style_consistency": self.style_consistency,
            "zero_distance_rows": self.zero_distance_rows,
            "diversity": self.diversity,
            "min_distance": self.min_distance,
            "max_distance": self.max_distance,
            "fraction_below_threshold": self.fraction_below_threshold,
            "distance_threshold": self.distance_threshold,
            "histogram_bins": self.histogram_bins,
            "histogram_counts": self.histogram_counts,
            "num_styles": self.num_styles,
            "num_classes": self.num_classes,
        }


def evaluate_generator(G: Generator, dataset: GlyphDataset,
                       classifier: LegibilityClassifier, num_styles: int,
                       rng: np.random.Generator,
                       radius: int = DEFAULT_RADIUS,
                       threshold: float = DEFAULT_BINARIZE,
                       bin_width: float | None = None,
                       distance_threshold: float | None = None) -> EvalReport:
    """Run the full evaluation pipeline on freshly sampled styles."""
    styles = sample_style(rng, num_styles)
    generated = generate_styles(G, styles)
    accuracy = legibility_score(G, classifier, num_styles, rng,
                                generated=generated)
    dm = nearest_training_distance(generated, dataset, radius, threshold)
    c_s, zero_rows = style_consistency(dm)
    c_d = diversity_metric(dm.row_means)
    means = dm.row_means
    if distance_threshold is None:
        # fixed fraction of total pixels keeps the report scale-free
        distance_threshold = 0.125 * dataset.image_size ** 2
    if bin_width is None:
        bin_width = max(means.max(), 1.0) / 20.0
    n_bins = max(1, int(np.ceil((means.max() + 1e-9) / bin_width)))
    edges = np.arange(n_bins + 1) * bin_width
    counts, _ = np.histogram(means, bins=edges)
    return EvalReport(
        legibility_accuracy=accuracy,
        style_consistency=c_s,
        zero_distance_rows=zero_rows,
        diversity=c_d,
        min_distance=float(means.min()),
        max_distance=float(means.max()),
        fraction_below_threshold=float((means < distance_threshold).mean()),
        distance_threshold=float(distance_threshold),
        histogram_bins=edges.tolist(),
        histogram_counts=counts.tolist(),
        num_styles=num_styles,
        num_classes=dataset.num_classes,
    )
