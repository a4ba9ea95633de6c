"""Training numerics shared by both networks: weight init, the Adam update,
gradient-norm penalty with second-order gradients, and fail-fast checks."""
from __future__ import annotations

import numpy as np
import torch


class NumericsError(Exception):
    """Raised on non-finite values or invalid numeric arguments."""


def init_weights(module: torch.nn.Module, rng: np.random.Generator) -> None:
    """DCGAN-style init: N(0, 0.02) weights, zero biases.

    Draws come from the supplied numpy generator so the whole training
    trajectory is reproducible from one seed.
    """
    for m in module.modules():
        if isinstance(m, (torch.nn.Conv2d, torch.nn.ConvTranspose2d,
                          torch.nn.Linear)):
            w = rng.normal(0.0, 0.02, size=tuple(m.weight.shape))
            with torch.no_grad():
                m.weight.copy_(torch.from_numpy(w.astype(np.float32)))
                if m.bias is not None:
                    m.bias.zero_()


def check_finite(tensors, what: str = "tensor") -> None:
    for t in tensors:
        if not torch.isfinite(t).all():
            raise NumericsError(f"non-finite values in {what}")


def gradient_penalty(discriminator, x_hat: torch.Tensor,
                     lam: float) -> torch.Tensor:
    """lam * E[(||grad_x D(x_hat)||_2 - 1)^2] over the batch.

    x_hat must be a leaf tensor with requires_grad=True. The result carries
    second-order graph so differentiating the total critic loss w.r.t. the
    discriminator parameters includes this term.
    """
    if lam < 0:
        raise NumericsError("gradient penalty coefficient must be >= 0")
    if x_hat.shape[0] == 0:
        raise NumericsError("gradient penalty needs a non-empty batch")
    scores = discriminator(x_hat)
    grads, = torch.autograd.grad(scores.sum(), x_hat, create_graph=True,
                                 allow_unused=True, materialize_grads=True)
    norms = grads.flatten(1).norm(2, dim=1)
    return lam * ((norms - 1.0) ** 2).mean()


def make_interpolates(real: torch.Tensor, fake: torch.Tensor,
                      eps: torch.Tensor) -> torch.Tensor:
    """eps*x + (1-eps)*G(z) with per-element eps, detached as a fresh leaf."""
    if real.shape != fake.shape:
        raise NumericsError(
            f"real/fake shape mismatch: {tuple(real.shape)} vs "
            f"{tuple(fake.shape)}")
    while eps.dim() < real.dim():
        eps = eps.unsqueeze(-1)
    x_hat = eps * real + (1.0 - eps) * fake
    return x_hat.detach().requires_grad_(True)


class Adam:
    """Bias-corrected Adam over an explicit parameter list.

    Kept hand-rolled (rather than torch.optim) so the moment buffers are
    plain tensors we can serialize byte-exactly in checkpoints.
    """

    def __init__(self, params, alpha: float = 2e-4, beta1: float = 0.5,
                 beta2: float = 0.99, eps: float = 1e-8):
        self.params = list(params)
        self.alpha = alpha
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [torch.zeros_like(p) for p in self.params]
        self.v = [torch.zeros_like(p) for p in self.params]

    @torch.no_grad()
    def step(self, grads) -> None:
        grads = list(grads)
        if len(grads) != len(self.params):
            raise NumericsError(
                f"expected {len(self.params)} gradients, got {len(grads)}")
        check_finite(grads, "gradients")
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m.mul_(self.beta1).add_(g, alpha=1.0 - self.beta1)
            v.mul_(self.beta2).addcmul_(g, g, value=1.0 - self.beta2)
            denom = (v / bc2).sqrt_().add_(self.eps)
            p.addcdiv_(m / bc1, denom, value=-self.alpha)

    def state_tensors(self) -> dict:
        out = {"t": self.t}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"m.{i}"] = m
            out[f"v.{i}"] = v
        return out

    def load_state_tensors(self, state: dict) -> None:
        self.t = int(state["t"])
        for i in range(len(self.params)):
            self.m[i].copy_(state[f"m.{i}"])
            self.v[i].copy_(state[f"v.{i}"])


@torch.no_grad()
def clip_weights(module: torch.nn.Module, bound: float) -> None:
    """Hard projection of every parameter into [-bound, bound]."""
    if bound <= 0:
        raise NumericsError("clip bound must be positive")
    for p in module.parameters():
        p.clamp_(-bound, bound)
