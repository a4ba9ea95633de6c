"""Glyph bitmap datasets: PNG import/export, a packed cache format, and a
procedurally rendered synthetic corpus for desk-scale experiments.

Images are stored ink-high: background 0.0, stroke 1.0, intensities on the
8-bit grid so PNG round trips are lossless.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

VALID_SIZES = (16, 32, 64)
MAX_CLASSES = 26

CACHE_MAGIC = b"GLDS"
CACHE_VERSION = 1
_CACHE_HEADER = struct.Struct("<4sIIII")


class DatasetError(Exception):
    """Raised for malformed dataset inputs or files."""


@dataclass(frozen=True)
class GlyphImage:
    """Single-channel glyph raster with intensities in [0, 1], ink high."""

    pixels: np.ndarray
    ink_is_high: bool = True

    def __post_init__(self):
        px = self.pixels
        if px.ndim != 2 or px.shape[0] != px.shape[1]:
            raise DatasetError(f"glyph must be square, got shape {px.shape}")
        if px.shape[0] not in VALID_SIZES:
            raise DatasetError(
                f"glyph size {px.shape[0]} not in {VALID_SIZES}")
        if not np.isfinite(px).all() or px.min() < 0.0 or px.max() > 1.0:
            raise DatasetError("glyph intensities must lie in [0, 1]")

    @property
    def size(self) -> int:
        return self.pixels.shape[0]


class GlyphDataset:
    """Complete (font, class) grid of equally sized glyph images.

    Backed by one float32 array of shape (num_fonts, num_classes, S, S);
    immutable after construction, so concurrent readers are safe.
    """

    def __init__(self, images: np.ndarray):
        if images.ndim != 4:
            raise DatasetError(f"expected 4-d image array, got {images.ndim}-d")
        n_fonts, n_classes, h, w = images.shape
        if n_fonts < 1 or n_classes < 1:
            raise DatasetError("dataset must contain at least one font and class")
        if h != w or h not in VALID_SIZES:
            raise DatasetError(f"image size {h}x{w} not square in {VALID_SIZES}")
        if images.min() < 0.0 or images.max() > 1.0:
            raise DatasetError("intensities must lie in [0, 1]")
        self._images = images.astype(np.float32)
        self._images.setflags(write=False)

    @property
    def num_fonts(self) -> int:
        return self._images.shape[0]

    @property
    def num_classes(self) -> int:
        return self._images.shape[1]

    @property
    def image_size(self) -> int:
        return self._images.shape[2]

    @property
    def images(self) -> np.ndarray:
        return self._images

    def image(self, font_id: int, class_id: int) -> GlyphImage:
        return GlyphImage(self._images[font_id, class_id])

    def class_images(self, class_id: int) -> np.ndarray:
        """All fonts' images of one class, shape (num_fonts, S, S)."""
        if not 0 <= class_id < self.num_classes:
            raise DatasetError(f"class id {class_id} out of range "
                               f"[0, {self.num_classes})")
        return self._images[:, class_id]


def sample_batch(dataset: GlyphDataset, class_id: int, batch_size: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Draw batch_size class-`class_id` images uniformly with replacement
    across fonts. Returns (batch_size, S, S) float32."""
    if not 0 <= class_id < dataset.num_classes:
        raise DatasetError(f"class id {class_id} out of range "
                           f"[0, {dataset.num_classes})")
    if batch_size < 1:
        raise DatasetError("batch_size must be >= 1")
    idx = rng.integers(0, dataset.num_fonts, size=batch_size)
    return dataset.class_images(class_id)[idx]


# ---------------------------------------------------------------------------
# PNG import / export

def _load_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def _detect_and_fix_polarity(raw: np.ndarray) -> np.ndarray:
    # Dark-on-light sources have bright corners; flip so ink is high.
    # Inversion happens in the 8-bit domain to stay exactly on the grid.
    corners = np.array([raw[0, 0], raw[0, -1], raw[-1, 0], raw[-1, -1]])
    if (corners > 127).sum() >= 3:
        raw = 255 - raw
    return raw.astype(np.float32) / 255.0


def import_dataset(root_path) -> GlyphDataset:
    """Build a dataset from a root/<font_id>/<class_id>.png tree."""
    root = Path(root_path)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    font_dirs = sorted(
        (p for p in root.iterdir() if p.is_dir() and p.name.isdigit()),
        key=lambda p: int(p.name))
    if not font_dirs:
        raise DatasetError("no fonts found")
    font_ids = [int(p.name) for p in font_dirs]
    if font_ids != list(range(len(font_ids))):
        raise DatasetError(f"font directories must be 0..{len(font_ids) - 1}, "
                           f"got {font_ids}")

    num_classes = 0
    for fdir in font_dirs:
        for p in fdir.glob("*.png"):
            if p.stem.isdigit():
                num_classes = max(num_classes, int(p.stem) + 1)
    if num_classes == 0:
        raise DatasetError(f"no class PNGs found under {root}")

    images = None
    bad_sizes = []
    for font_id, fdir in enumerate(font_dirs):
        for class_id in range(num_classes):
            path = fdir / f"{class_id}.png"
            if not path.is_file():
                raise DatasetError(
                    f"missing glyph for font {font_id}, class {class_id}: {path}")
            px = _detect_and_fix_polarity(_load_png(path))
            if images is None:
                size = px.shape[0]
                if px.shape != (size, size) or size not in VALID_SIZES:
                    raise DatasetError(
                        f"unsupported image size {px.shape} in {path}")
                images = np.zeros(
                    (len(font_dirs), num_classes, size, size), dtype=np.float32)
            if px.shape != images.shape[2:]:
                bad_sizes.append((font_id, class_id, px.shape))
                continue
            images[font_id, class_id] = px
    if bad_sizes:
        raise DatasetError(f"mixed image sizes, offenders: {bad_sizes}")
    return GlyphDataset(images)


def export_dataset(dataset: GlyphDataset, root_path) -> None:
    """Write the dataset as root/<font_id>/<class_id>.png, ink high."""
    root = Path(root_path)
    for font_id in range(dataset.num_fonts):
        fdir = root / str(font_id)
        fdir.mkdir(parents=True, exist_ok=True)
        for class_id in range(dataset.num_classes):
            px = dataset.images[font_id, class_id]
            arr = np.round(px * 255.0).astype(np.uint8)
            Image.fromarray(arr, mode="L").save(fdir / f"{class_id}.png")


# ---------------------------------------------------------------------------
# Packed cache (.glyphds)

def save_cache(dataset: GlyphDataset, path) -> None:
    """Write the packed binary cache: header + row-major 8-bit intensities."""
    body = np.round(dataset.images * 255.0).astype(np.uint8).tobytes()
    header = _CACHE_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, dataset.num_fonts,
                                dataset.num_classes, dataset.image_size)
    tmp = Path(str(path) + ".tmp")
    tmp.write_bytes(header + body)
    tmp.replace(path)


def load_cache(path) -> GlyphDataset:
    raw = Path(path).read_bytes()
    if len(raw) < _CACHE_HEADER.size:
        raise DatasetError(f"truncated cache file {path}")
    magic, version, n_fonts, n_classes, size = _CACHE_HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise DatasetError(f"{path} is not a glyph dataset cache")
    if version != CACHE_VERSION:
        raise DatasetError(f"cache version {version} unsupported "
                           f"(expected {CACHE_VERSION})")
    expected = n_fonts * n_classes * size * size
    body = np.frombuffer(raw, dtype=np.uint8, offset=_CACHE_HEADER.size)
    if body.size != expected:
        raise DatasetError(f"cache body has {body.size} bytes, "
                           f"expected {expected}")
    images = body.reshape(n_fonts, n_classes, size, size).astype(np.float32)
    return GlyphDataset(images / 255.0)


# ---------------------------------------------------------------------------
# Synthetic corpus

@dataclass(frozen=True)
class SyntheticStyleParams:
    """Procedural style knobs applied uniformly to every class of one font."""

    stroke_thickness: int
    slant: float
    scale: float
    serif_flag: bool

    def __post_init__(self):
        if self.stroke_thickness < 1:
            raise DatasetError("stroke_thickness must be a positive integer")
        if not -0.5 <= self.slant <= 0.5:
            raise DatasetError("slant must lie in [-0.5, 0.5]")
        if not 0.5 <= self.scale <= 1.0:
            raise DatasetError("scale must lie in [0.5, 1.0]")


# Stick-letter stroke skeletons for A..Z in unit coordinates, y increasing
# downwards. Each entry is a list of ((x0, y0), (x1, y1)) segments.
def _chain(pts, closed=False):
    segs = [(pts[i], pts[i + 1]) for i in range(len(pts) - 1)]
    if closed:
        segs.append((pts[-1], pts[0]))
    return segs


_O_PTS = [(.35, .05), (.65, .05), (.8, .25), (.8, .75),
          (.65, .95), (.35, .95), (.2, .75), (.2, .25)]
_C_PTS = [(.75, .15), (.55, .03), (.32, .08), (.2, .3),
          (.2, .7), (.32, .92), (.55, .97), (.75, .85)]

LETTER_SEGMENTS = {
    0: [((.2, 1), (.5, 0)), ((.5, 0), (.8, 1)), ((.33, .62), (.67, .62))],
    1: _chain([(.6, 0), (.68, .12), (.68, .38), (.6, .5)]) +
       _chain([(.6, .5), (.72, .62), (.72, .88), (.6, 1)]) +
       [((.22, 0), (.22, 1)), ((.22, 0), (.6, 0)), ((.22, .5), (.6, .5)),
        ((.22, 1), (.6, 1))],
    2: _chain(_C_PTS),
    3: _chain([(.22, 0), (.55, 0), (.75, .2), (.75, .8), (.55, 1), (.22, 1)],
              closed=True),
    4: [((.25, 0), (.25, 1)), ((.25, 0), (.75, 0)), ((.25, .5), (.65, .5)),
        ((.25, 1), (.75, 1))],
    5: [((.25, 0), (.25, 1)), ((.25, 0), (.75, 0)), ((.25, .5), (.65, .5))],
    6: _chain(_C_PTS) + [((.75, .85), (.78, .55)), ((.78, .55), (.5, .55))],
    7: [((.22, 0), (.22, 1)), ((.78, 0), (.78, 1)), ((.22, .5), (.78, .5))],
    8: [((.5, 0), (.5, 1)), ((.3, 0), (.7, 0)), ((.3, 1), (.7, 1))],
    9: _chain([(.65, 0), (.65, .8), (.5, .97), (.35, .8)]),
    10: [((.25, 0), (.25, 1)), ((.75, 0), (.25, .55)), ((.4, .42), (.78, 1))],
    11: [((.25, 0), (.25, 1)), ((.25, 1), (.75, 1))],
    12: _chain([(.18, 1), (.18, 0), (.5, .6), (.82, 0), (.82, 1)]),
    13: _chain([(.22, 1), (.22, 0), (.78, 1), (.78, 0)]),
    14: _chain(_O_PTS, closed=True),
    15: [((.25, 0), (.25, 1))] +
        _chain([(.25, 0), (.62, 0), (.72, .12), (.72, .38), (.62, .5),
                (.25, .5)]),
    16: _chain(_O_PTS, closed=True) + [((.6, .7), (.88, 1))],
    17: [((.25, 0), (.25, 1)), ((.5, .5), (.78, 1))] +
        _chain([(.25, 0), (.62, 0), (.72, .12), (.72, .38), (.62, .5),
                (.25, .5)]),
    18: _chain([(.72, .12), (.5, .03), (.3, .12), (.3, .32), (.5, .45),
                (.7, .58), (.7, .82), (.5, .95), (.28, .85)]),
    19: [((.2, 0), (.8, 0)), ((.5, 0), (.5, 1))],
    20: _chain([(.25, 0), (.25, .75), (.4, .95), (.6, .95), (.75, .75),
                (.75, 0)]),
    21: [((.2, 0), (.5, 1)), ((.5, 1), (.8, 0))],
    22: _chain([(.15, 0), (.3, 1), (.5, .4), (.7, 1), (.85, 0)]),
    23: [((.2, 0), (.8, 1)), ((.8, 0), (.2, 1))],
    24: [((.2, 0), (.5, .5)), ((.8, 0), (.5, .5)), ((.5, .5), (.5, 1))],
    25: [((.2, 0), (.8, 0)), ((.8, 0), (.2, 1)), ((.2, 1), (.8, 1))],
}


def _transform_segments(segments, params: SyntheticStyleParams):
    out = []
    for (x0, y0), (x1, y1) in segments:
        pts = []
        for x, y in ((x0, y0), (x1, y1)):
            x = 0.5 + params.scale * (x - 0.5)
            y = 0.5 + params.scale * (y - 0.5)
            x = x + params.slant * (0.5 - y)
            pts.append((x, y))
        out.append(tuple(pts))
    return out


def _serif_segments(segments, params: SyntheticStyleParams):
    half = 0.07 * params.scale
    serifs = []
    for p0, p1 in segments:
        for x, y in (p0, p1):
            serifs.append(((x - half, y), (x + half, y)))
    return serifs


def render_glyph(class_id: int, params: SyntheticStyleParams,
                 image_size: int) -> np.ndarray:
    """Rasterize a stroke skeleton as an ink-high float image."""
    if class_id not in LETTER_SEGMENTS:
        raise DatasetError(f"no skeleton for class {class_id}")
    segments = _transform_segments(LETTER_SEGMENTS[class_id], params)
    if params.serif_flag:
        segments = segments + _serif_segments(segments, params)

    ys, xs = np.mgrid[0:image_size, 0:image_size]
    px = (xs + 0.5) / image_size
    py = (ys + 0.5) / image_size
    dist = np.full((image_size, image_size), np.inf)
    for (x0, y0), (x1, y1) in segments:
        dx, dy = x1 - x0, y1 - y0
        length2 = dx * dx + dy * dy
        if length2 == 0:
            t = np.zeros_like(px)
        else:
            t = np.clip(((px - x0) * dx + (py - y0) * dy) / length2, 0.0, 1.0)
        d = np.hypot(px - (x0 + t * dx), py - (y0 + t * dy))
        dist = np.minimum(dist, d)

    dist_px = dist * image_size
    radius = params.stroke_thickness / 2.0
    aa = 0.8  # soft-edge width in pixels
    intensity = np.clip((radius + aa - dist_px) / aa, 0.0, 1.0)
    # snap to the 8-bit grid so the PNG/cache round trip is lossless
    return (np.round(intensity * 255.0) / 255.0).astype(np.float32)


def _sample_style_params(rng: np.random.Generator,
                         image_size: int) -> SyntheticStyleParams:
    max_thickness = max(2, image_size // 12)
    return SyntheticStyleParams(
        stroke_thickness=int(rng.integers(1, max_thickness + 1)),
        slant=float(rng.uniform(-0.3, 0.3)),
        scale=float(rng.uniform(0.6, 0.95)),
        serif_flag=bool(rng.integers(0, 2)),
    )


def generate_synthetic_dataset(num_styles: int, num_classes: int,
                               image_size: int, seed: int) -> GlyphDataset:
    """Deterministic procedural corpus: one style per font, distinct stroke
    topology per class, within-style consistency by construction."""
    if num_styles < 1:
        raise DatasetError("num_styles must be >= 1")
    if not 2 <= num_classes <= MAX_CLASSES:
        raise DatasetError(f"num_classes must be in [2, {MAX_CLASSES}]")
    if image_size not in VALID_SIZES:
        raise DatasetError(f"image_size must be one of {VALID_SIZES}")
    rng = np.random.default_rng(seed)
    images = np.zeros((num_styles, num_classes, image_size, image_size),
                      dtype=np.float32)
    for style_id in range(num_styles):
        params = _sample_style_params(rng, image_size)
        for class_id in range(num_classes):
            images[style_id, class_id] = render_glyph(
                class_id, params, image_size)
    return GlyphDataset(images)
