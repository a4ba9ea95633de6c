"""Generator and discriminator networks plus latent-vector assembly.

Both nets follow the DCGAN layout (5x5 kernels, stride 2, exact spatial
doubling/halving) without batch normalization anywhere. The generator input
is the concatenation of a 100-dim style vector and a one-hot class vector.
"""
from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

STYLE_DIM = 100
LEAKY_SLOPE = 0.2
_KERNEL = 5


class ModelError(Exception):
    pass


def sample_style(rng: np.random.Generator, batch_size: int | None = None):
    """i.i.d. U(-1, 1) style vectors; (100,) or (batch_size, 100)."""
    shape = (STYLE_DIM,) if batch_size is None else (batch_size, STYLE_DIM)
    return rng.uniform(-1.0, 1.0, size=shape).astype(np.float32)


def assemble_latent(style: np.ndarray, class_id: int,
                    num_classes: int) -> np.ndarray:
    """Concatenate style and one-hot class vector: (100 + C,) float32."""
    style = np.asarray(style, dtype=np.float32)
    if style.shape != (STYLE_DIM,):
        raise ModelError(f"style must have shape ({STYLE_DIM},), "
                         f"got {style.shape}")
    if np.abs(style).max() > 1.0:
        raise ModelError("style entries must lie in [-1, 1]")
    if not 0 <= class_id < num_classes:
        raise ModelError(f"class id {class_id} out of range [0, {num_classes})")
    z = np.zeros(STYLE_DIM + num_classes, dtype=np.float32)
    z[:STYLE_DIM] = style
    z[STYLE_DIM + class_id] = 1.0
    return z


def assemble_latent_batch(styles: np.ndarray, class_id: int,
                          num_classes: int) -> np.ndarray:
    styles = np.asarray(styles, dtype=np.float32)
    if styles.ndim != 2 or styles.shape[1] != STYLE_DIM:
        raise ModelError(f"styles must have shape (M, {STYLE_DIM}), "
                         f"got {styles.shape}")
    if not 0 <= class_id < num_classes:
        raise ModelError(f"class id {class_id} out of range [0, {num_classes})")
    z = np.zeros((styles.shape[0], STYLE_DIM + num_classes), dtype=np.float32)
    z[:, :STYLE_DIM] = styles
    z[:, STYLE_DIM + class_id] = 1.0
    return z


def _num_stages(image_size: int) -> int:
    n = int(np.log2(image_size)) - 2
    if image_size < 8 or 2 ** (n + 2) != image_size:
        raise ModelError(f"image size must be a power of two >= 8, "
                         f"got {image_size}")
    return n


class Generator(nn.Module):
    """Project-and-reshape to 4x4, then stride-2 transposed convolutions up
    to the target size; ReLU inside, Sigmoid on the output layer."""

    def __init__(self, image_size: int, num_classes: int,
                 base_channels: int = 64):
        super().__init__()
        self.image_size = image_size
        self.num_classes = num_classes
        self.latent_dim = STYLE_DIM + num_classes
        n = _num_stages(image_size)
        ch0 = base_channels << (n - 1)
        self.start_channels = ch0
        self.fc = nn.Linear(self.latent_dim, 4 * 4 * ch0)
        blocks = []
        ch = ch0
        for i in range(n):
            out_ch = 1 if i == n - 1 else ch // 2
            blocks.append(nn.ConvTranspose2d(ch, out_ch, _KERNEL, stride=2,
                                             padding=2, output_padding=1))
            ch = out_ch
        self.deconvs = nn.ModuleList(blocks)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        if z.dim() != 2 or z.shape[1] != self.latent_dim:
            raise ModelError(f"latent must have shape (M, {self.latent_dim}), "
                             f"got {tuple(z.shape)}")
        h = torch.relu(self.fc(z))
        h = h.view(-1, self.start_channels, 4, 4)
        for i, deconv in enumerate(self.deconvs):
            h = deconv(h)
            if i < len(self.deconvs) - 1:
                h = torch.relu(h)
        return torch.sigmoid(h)

    def generate(self, latents: np.ndarray) -> np.ndarray:
        """Inference helper: numpy latents in, (M, S, S) numpy images out."""
        with torch.no_grad():
            imgs = self.forward(torch.from_numpy(
                np.asarray(latents, dtype=np.float32)))
        return imgs.squeeze(1).numpy()


class Discriminator(nn.Module):
    """Stride-2 convolution stack down to 4x4 and a fully-connected scalar
    head; Leaky-ReLU activations, no batch normalization.

    In WGAN modes the output is an unbounded critic score; with
    terminal_sigmoid=True (DCGAN loss mode) forward() returns probabilities
    while logits() stays available for numerically stable losses.
    """

    def __init__(self, image_size: int, base_channels: int = 64,
                 terminal_sigmoid: bool = False):
        super().__init__()
        self.image_size = image_size
        self.terminal_sigmoid = terminal_sigmoid
        n = _num_stages(image_size)
        convs = []
        ch = 1
        out_ch = base_channels
        for _ in range(n):
            convs.append(nn.Conv2d(ch, out_ch, _KERNEL, stride=2, padding=2))
            ch = out_ch
            out_ch *= 2
        self.convs = nn.ModuleList(convs)
        self.fc = nn.Linear(4 * 4 * ch, 1)

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() == 3:
            x = x.unsqueeze(1)
        if x.dim() != 4 or x.shape[1] != 1 or \
                x.shape[2:] != (self.image_size, self.image_size):
            raise ModelError(
                f"discriminator expects (M, 1, {self.image_size}, "
                f"{self.image_size}) input, got {tuple(x.shape)}")
        h = x
        for conv in self.convs:
            h = torch.nn.functional.leaky_relu(conv(h), LEAKY_SLOPE)
        return self.fc(h.flatten(1)).squeeze(1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        s = self.logits(x)
        return torch.sigmoid(s) if self.terminal_sigmoid else s
