"""Per-class cycled adversarial training: an epoch walks the character
classes in ascending order, running N_disc critic updates then one generator
update per class. Three objectives are supported: wgan-gp (gradient
penalty), wgan-clip (weight clipping after each critic step), and dcgan
(saturating log loss with a terminal sigmoid on the discriminator).

All randomness flows through one numpy PCG64 generator whose state is
serialized into checkpoints, so resumed runs match uninterrupted ones
bit for bit.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .data import GlyphDataset, sample_batch
from .models import Discriminator, Generator, assemble_latent_batch, \
    sample_style
from .nn import Adam, clip_weights, gradient_penalty, init_weights, \
    make_interpolates

LOSS_MODES = ("wgan-gp", "wgan-clip", "dcgan")

CKPT_MAGIC = b"GGAN"
CKPT_VERSION = 1
_CKPT_HEADER = struct.Struct("<4sIQ")

TELEMETRY_COLUMNS = ("gen_step", "epoch", "class_id", "critic_loss",
                     "gen_loss", "grad_penalty", "wasserstein", "wall_clock")


class TrainError(Exception):
    pass


class CheckpointError(Exception):
    pass


@dataclass
class TrainConfig:
    image_size: int
    num_classes: int
    loss_mode: str = "wgan-gp"
    lam: float = 10.0
    clip_c: float = 0.01
    n_disc: int = 5
    batch_size: int = 64
    epochs: int | None = None
    # alternative budget: total generator iterations, converted to
    # ceil(total/num_classes) epochs
    total_gen_iters: int | None = None
    alpha: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.99
    seed: int = 0
    base_channels: int = 64
    checkpoint_every: int = 0  # epochs; 0 = only at termination

    def __post_init__(self):
        problems = []
        if self.loss_mode not in LOSS_MODES:
            problems.append(f"loss_mode must be one of {LOSS_MODES}, "
                            f"got {self.loss_mode!r}")
        if self.lam < 0:
            problems.append("lam must be >= 0")
        if self.clip_c <= 0:
            problems.append("clip_c must be > 0")
        if self.n_disc < 1:
            problems.append("n_disc must be >= 1")
        if self.batch_size < 1:
            problems.append("batch_size must be >= 1")
        if self.epochs is None and self.total_gen_iters is None:
            problems.append("one of epochs / total_gen_iters is required")
        if self.epochs is not None and self.epochs < 1:
            problems.append("epochs must be >= 1")
        if self.total_gen_iters is not None and self.total_gen_iters < 1:
            problems.append("total_gen_iters must be >= 1")
        if problems:
            raise TrainError("invalid config: " + "; ".join(problems))

    @property
    def resolved_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return -(-self.total_gen_iters // self.num_classes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise TrainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


# ---------------------------------------------------------------------------
# Loss functions

def _to_tensor(a) -> torch.Tensor:
    if isinstance(a, torch.Tensor):
        return a
    return torch.from_numpy(np.asarray(a, dtype=np.float32))


def _fake_batch(G, styles, class_id: int, num_classes: int) -> torch.Tensor:
    z = _to_tensor(assemble_latent_batch(np.asarray(styles), class_id,
                                         num_classes))
    if isinstance(G, torch.nn.Module):
        try:
            z = z.to(next(G.parameters()).dtype)
        except StopIteration:
            pass
    return G(z)


def critic_loss(D, G, real, styles, class_id: int, eps, lam: float,
                num_classes: int):
    """Mean of D(G(z)) - D(x) + lam*(||grad D(x_hat)|| - 1)^2 over the batch.

    The generator is held fixed (its output is detached). Returns
    (loss, penalty_value, wasserstein_estimate); the latter two are plain
    floats for telemetry.
    """
    real = _to_tensor(real)
    if real.dim() == 3:
        real = real.unsqueeze(1)
    styles = np.asarray(styles)
    eps = _to_tensor(eps)
    if not (real.shape[0] == styles.shape[0] == eps.shape[0]):
        raise TrainError(
            f"batch size mismatch: real {real.shape[0]}, "
            f"styles {styles.shape[0]}, eps {eps.shape[0]}")
    fake = _fake_batch(G, styles, class_id, num_classes).detach()
    score_fake = D(fake).mean()
    score_real = D(real).mean()
    loss = score_fake - score_real
    penalty_value = 0.0
    if lam > 0:
        x_hat = make_interpolates(real, fake, eps)
        penalty = gradient_penalty(D, x_hat, lam)
        loss = loss + penalty
        penalty_value = float(penalty.detach())
    wasserstein = float((score_real - score_fake).detach())
    return loss, penalty_value, wasserstein


def generator_loss(D, G, styles, class_id: int, num_classes: int):
    """-mean D(G(z)) with the discriminator's parameters held fixed."""
    fake = _fake_batch(G, styles, class_id, num_classes)
    return -D(fake).mean()


def dcgan_critic_loss(D, G, real, styles, class_id: int, num_classes: int):
    """Negated vanilla-GAN discriminator objective, computed from logits:
    -(log D(x) + log(1 - D(G(z))))."""
    real = _to_tensor(real)
    if real.dim() == 3:
        real = real.unsqueeze(1)
    fake = _fake_batch(G, styles, class_id, num_classes).detach()
    loss = F.softplus(-D.logits(real)).mean() + F.softplus(D.logits(fake)).mean()
    wasserstein = float((D(real).mean() - D(fake).mean()).detach())
    return loss, 0.0, wasserstein


def dcgan_generator_loss(D, G, styles, class_id: int, num_classes: int):
    """G minimizes log(1 - D(G(z))) = -softplus(logits)."""
    fake = _fake_batch(G, styles, class_id, num_classes)
    return (-F.softplus(D.logits(fake))).mean()


# ---------------------------------------------------------------------------
# Checkpoints

@dataclass
class Checkpoint:
    config: TrainConfig
    epoch: int
    gen_steps: int
    rng_state: dict
    tensors: dict
    adam_t: dict


def _named_tensors(trainer) -> dict:
    out = {}
    for name, p in trainer.G.state_dict().items():
        out[f"G.{name}"] = p
    for name, p in trainer.D.state_dict().items():
        out[f"D.{name}"] = p
    for name, t in trainer.adam_g.state_tensors().items():
        if name != "t":
            out[f"adamG.{name}"] = t
    for name, t in trainer.adam_d.state_tensors().items():
        if name != "t":
            out[f"adamD.{name}"] = t
    return out


def save_checkpoint(trainer, path) -> None:
    tensors = _named_tensors(trainer)
    manifest = []
    blobs = []
    for name in sorted(tensors):
        arr = tensors[name].detach().numpy().astype(np.float32)
        manifest.append({"name": name, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    meta = {
        "config": trainer.config.to_dict(),
        "epoch": trainer.epoch,
        "gen_steps": trainer.gen_steps,
        "adam_t": {"G": trainer.adam_g.t, "D": trainer.adam_d.t},
        "rng_state": trainer.rng.bit_generator.state,
        "tensors": manifest,
    }
    meta_bytes = json.dumps(meta, sort_keys=True,
                            separators=(",", ":")).encode()
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as f:
        f.write(_CKPT_HEADER.pack(CKPT_MAGIC, CKPT_VERSION, len(meta_bytes)))
        f.write(meta_bytes)
        for blob in blobs:
            f.write(blob)
    tmp.replace(path)


def load_checkpoint(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    if len(raw) < _CKPT_HEADER.size:
        raise CheckpointError(f"truncated checkpoint {path}")
    magic, version, meta_len = _CKPT_HEADER.unpack_from(raw)
    if magic != CKPT_MAGIC:
        raise CheckpointError(f"{path} is not a glyphforge checkpoint")
    if version != CKPT_VERSION:
        raise CheckpointError(f"checkpoint version {version} unsupported "
                              f"(expected {CKPT_VERSION})")
    offset = _CKPT_HEADER.size
    if len(raw) < offset + meta_len:
        raise CheckpointError(f"truncated checkpoint {path}")
    meta = json.loads(raw[offset:offset + meta_len])
    offset += meta_len
    tensors = {}
    for entry in meta["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 4
        if len(raw) < offset + nbytes:
            raise CheckpointError(f"truncated checkpoint {path}")
        arr = np.frombuffer(raw, dtype="<f4", count=count,
                            offset=offset).reshape(shape)
        tensors[entry["name"]] = arr.copy()
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"trailing bytes in checkpoint {path}")
    return Checkpoint(
        config=TrainConfig.from_dict(meta["config"]),
        epoch=int(meta["epoch"]),
        gen_steps=int(meta["gen_steps"]),
        rng_state=meta["rng_state"],
        tensors=tensors,
        adam_t=meta["adam_t"],
    )


def build_models(config: TrainConfig):
    G = Generator(config.image_size, config.num_classes,
                  config.base_channels)
    D = Discriminator(config.image_size, config.base_channels,
                      terminal_sigmoid=(config.loss_mode == "dcgan"))
    return G, D


def load_generator(path):
    """Load just the generator for inference. Returns (G, config)."""
    ckpt = load_checkpoint(path)
    G, _ = build_models(ckpt.config)
    state = {name[2:]: torch.from_numpy(arr)
             for name, arr in ckpt.tensors.items() if name.startswith("G.")}
    G.load_state_dict(state)
    G.eval()
    return G, ckpt.config


# ---------------------------------------------------------------------------
# Trainer

class Trainer:
    def __init__(self, config: TrainConfig, dataset: GlyphDataset,
                 out_dir=None):
        if dataset.num_classes != config.num_classes:
            raise TrainError(
                f"dataset has {dataset.num_classes} classes, config expects "
                f"{config.num_classes}")
        if dataset.image_size != config.image_size:
            raise TrainError(
                f"dataset image size {dataset.image_size} != config "
                f"{config.image_size}")
        self.config = config
        self.dataset = dataset
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.rng = np.random.default_rng(config.seed)
        self.G, self.D = build_models(config)
        init_weights(self.G, self.rng)
        init_weights(self.D, self.rng)
        self.adam_g = Adam(list(self.G.parameters()), config.alpha,
                           config.beta1, config.beta2)
        self.adam_d = Adam(list(self.D.parameters()), config.alpha,
                           config.beta1, config.beta2)
        self.epoch = 0
        self.gen_steps = 0
        self.telemetry: list[dict] = []

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint, dataset: GlyphDataset,
                        out_dir=None) -> "Trainer":
        trainer = cls(ckpt.config, dataset, out_dir)
        g_state = {n[2:]: torch.from_numpy(a) for n, a in ckpt.tensors.items()
                   if n.startswith("G.")}
        d_state = {n[2:]: torch.from_numpy(a) for n, a in ckpt.tensors.items()
                   if n.startswith("D.")}
        trainer.G.load_state_dict(g_state)
        trainer.D.load_state_dict(d_state)
        for prefix, adam in (("adamG.", trainer.adam_g),
                             ("adamD.", trainer.adam_d)):
            state = {n[len(prefix):]: torch.from_numpy(a)
                     for n, a in ckpt.tensors.items() if n.startswith(prefix)}
            state["t"] = ckpt.adam_t["G" if prefix == "adamG." else "D"]
            adam.load_state_tensors(state)
        trainer.rng.bit_generator.state = ckpt.rng_state
        trainer.epoch = ckpt.epoch
        trainer.gen_steps = ckpt.gen_steps
        return trainer

    # -- single class turn -------------------------------------------------

    def _critic_step(self, class_id: int):
        cfg = self.config
        real = sample_batch(self.dataset, class_id, cfg.batch_size, self.rng)
        styles = sample_style(self.rng, cfg.batch_size)
        if cfg.loss_mode == "dcgan":
            loss, penalty, w_est = dcgan_critic_loss(
                self.D, self.G, real, styles, class_id, cfg.num_classes)
        else:
            lam = cfg.lam if cfg.loss_mode == "wgan-gp" else 0.0
            eps = (self.rng.uniform(0.0, 1.0, cfg.batch_size)
                   .astype(np.float32) if lam > 0
                   else np.zeros(cfg.batch_size, dtype=np.float32))
            loss, penalty, w_est = critic_loss(
                self.D, self.G, real, styles, class_id, eps, lam,
                cfg.num_classes)
        grads = torch.autograd.grad(loss, list(self.D.parameters()))
        self.adam_d.step(grads)
        if cfg.loss_mode == "wgan-clip":
            clip_weights(self.D, cfg.clip_c)
        return float(loss.detach()), penalty, w_est

    def _generator_step(self, class_id: int) -> float:
        cfg = self.config
        styles = sample_style(self.rng, cfg.batch_size)
        if cfg.loss_mode == "dcgan":
            loss = dcgan_generator_loss(self.D, self.G, styles, class_id,
                                        cfg.num_classes)
        else:
            loss = generator_loss(self.D, self.G, styles, class_id,
                                  cfg.num_classes)
        grads = torch.autograd.grad(loss, list(self.G.parameters()))
        self.adam_g.step(grads)
        return float(loss.detach())

    def train_class(self, epoch: int, class_id: int) -> dict:
        t0 = time.monotonic()
        critic_losses, penalties, w_est = [], [], 0.0
        for _ in range(self.config.n_disc):
            c_loss, penalty, w_est = self._critic_step(class_id)
            critic_losses.append(c_loss)
            penalties.append(penalty)
        gen_loss = self._generator_step(class_id)
        self.gen_steps += 1
        record = {
            "gen_step": self.gen_steps,
            "epoch": epoch,
            "class_id": class_id,
            "critic_loss": float(np.mean(critic_losses)),
            "gen_loss": gen_loss,
            "grad_penalty": float(np.mean(penalties)),
            "wasserstein": w_est,
            "wall_clock": time.monotonic() - t0,
        }
        self.telemetry.append(record)
        return record

    # -- full run -----------------------------------------------------------

    def run(self, progress=None) -> list[dict]:
        cfg = self.config
        total_epochs = cfg.resolved_epochs
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        while self.epoch < total_epochs:
            epoch_t0 = time.monotonic()
            for class_id in range(cfg.num_classes):
                self.train_class(self.epoch, class_id)
            self.epoch += 1
            if progress is not None:
                progress(self.epoch, time.monotonic() - epoch_t0,
                         self.telemetry[-1]["wasserstein"])
            if (self.out_dir is not None and cfg.checkpoint_every > 0
                    and self.epoch % cfg.checkpoint_every == 0
                    and self.epoch < total_epochs):
                save_checkpoint(
                    self, self.out_dir / f"ckpt_epoch_{self.epoch:04d}.ggan")
        if self.out_dir is not None:
            save_checkpoint(self, self.out_dir / "final.ggan")
            write_telemetry_csv(self.telemetry,
                                self.out_dir / "telemetry.csv")
        return self.telemetry


def write_telemetry_csv(telemetry, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=TELEMETRY_COLUMNS)
        writer.writeheader()
        for record in telemetry:
            writer.writerow(record)
