import math

import numpy as np
import pytest
import torch

from glyphforge.nn import (Adam, NumericsError, clip_weights,
                           gradient_penalty, init_weights, make_interpolates)


class LinearCritic(torch.nn.Module):
    """D(x) = <u, x> over flattened input."""

    def __init__(self, u: torch.Tensor):
        super().__init__()
        self.u = torch.nn.Parameter(u.clone())

    def forward(self, x):
        return x.flatten(1) @ self.u


class ConstantCritic(torch.nn.Module):
    def __init__(self, value=0.0):
        super().__init__()
        self.bias = torch.nn.Parameter(torch.tensor(float(value)))

    def forward(self, x):
        return self.bias.expand(x.shape[0])


def _leaf(x):
    return x.detach().requires_grad_(True)


def test_penalty_constant_critic_equals_lambda():
    d = ConstantCritic()
    x_hat = _leaf(torch.randn(5, 1, 8, 8))
    pen = gradient_penalty(d, x_hat, lam=7.0)
    assert pen.item() == pytest.approx(7.0, abs=1e-6)


def test_penalty_unit_norm_linear_critic_is_zero():
    u = torch.randn(64, dtype=torch.float64)
    u = u / u.norm()
    d = LinearCritic(u)
    x_hat = _leaf(torch.randn(4, 64, dtype=torch.float64))
    pen = gradient_penalty(d, x_hat, lam=10.0)
    assert pen.item() == pytest.approx(0.0, abs=1e-12)


def test_penalty_norm3_value_and_gradient():
    # D(x) = <u, x> with ||u|| = 3, lambda = 10 -> penalty = 10*(3-1)^2 = 40
    torch.manual_seed(0)
    u = torch.randn(32, dtype=torch.float64)
    u = 3.0 * u / u.norm()
    d = LinearCritic(u)
    x_hat = _leaf(torch.randn(6, 32, dtype=torch.float64))
    pen = gradient_penalty(d, x_hat, lam=10.0)
    assert pen.item() == pytest.approx(40.0, abs=1e-4)

    # gradient w.r.t. u vs central finite differences
    grad_u, = torch.autograd.grad(pen, d.u)
    h = 1e-3
    for i in range(8):
        up = u.clone()
        up[i] += h
        um = u.clone()
        um[i] -= h
        pp = gradient_penalty(LinearCritic(up), _leaf(x_hat.detach()), 10.0)
        pm = gradient_penalty(LinearCritic(um), _leaf(x_hat.detach()), 10.0)
        fd = (pp.item() - pm.item()) / (2 * h)
        assert grad_u[i].item() == pytest.approx(fd, rel=1e-3, abs=1e-6)


def test_penalty_argument_errors():
    d = ConstantCritic()
    with pytest.raises(NumericsError):
        gradient_penalty(d, _leaf(torch.randn(2, 4)), lam=-1.0)
    with pytest.raises(NumericsError):
        gradient_penalty(d, _leaf(torch.randn(0, 4)), lam=1.0)


def test_make_interpolates():
    real = torch.zeros(3, 1, 4, 4)
    fake = torch.ones(3, 1, 4, 4)
    eps = torch.tensor([0.0, 0.5, 1.0])
    x_hat = make_interpolates(real, fake, eps)
    assert x_hat.requires_grad
    assert x_hat[0].mean().item() == pytest.approx(1.0)
    assert x_hat[1].mean().item() == pytest.approx(0.5)
    assert x_hat[2].mean().item() == pytest.approx(0.0)
    with pytest.raises(NumericsError):
        make_interpolates(real, torch.ones(3, 1, 5, 5), eps)


def _scalar_adam_reference(grads, alpha, beta1, beta2, eps=1e-8):
    # independent straight-line evaluation of the Adam recurrences
    m = v = theta = 0.0
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        theta -= alpha * m_hat / (math.sqrt(v_hat) + eps)
    return theta


def test_adam_first_step_delta():
    p = torch.zeros(1)
    opt = Adam([p], alpha=2e-4, beta1=0.5, beta2=0.99)
    opt.step([torch.ones(1)])
    # m_hat = v_hat = 1 -> delta = -alpha / (1 + eps)
    assert p.item() == pytest.approx(-2e-4 * (1 / (1 + 1e-8)), rel=1e-6)


def test_adam_zero_gradient_keeps_param():
    p = torch.full((3,), 1.25)
    opt = Adam([p], alpha=1e-2)
    opt.step([torch.zeros(3)])
    assert torch.all(p == 1.25)


def test_adam_matches_scalar_reference():
    grads = [1.0, 1.0, 0.3, -0.7, 0.1]
    p = torch.zeros(1, dtype=torch.float64)
    opt = Adam([p], alpha=1e-3, beta1=0.5, beta2=0.99)
    for g in grads:
        opt.step([torch.tensor([g], dtype=torch.float64)])
    expected = _scalar_adam_reference(grads, 1e-3, 0.5, 0.99)
    assert p.item() == pytest.approx(expected, rel=1e-12)


def test_adam_rejects_nan():
    p = torch.zeros(1)
    opt = Adam([p])
    with pytest.raises(NumericsError):
        opt.step([torch.tensor([float("nan")])])


def test_clip_weights():
    lin = torch.nn.Linear(4, 4)
    with torch.no_grad():
        lin.weight.fill_(0.5)
    clip_weights(lin, 0.01)
    assert lin.weight.abs().max().item() <= 0.01
    with pytest.raises(NumericsError):
        clip_weights(lin, 0.0)


def test_init_weights_deterministic():
    a = torch.nn.Linear(8, 8)
    b = torch.nn.Linear(8, 8)
    init_weights(a, np.random.default_rng(4))
    init_weights(b, np.random.default_rng(4))
    assert torch.equal(a.weight, b.weight)
    assert torch.all(a.bias == 0)
    assert a.weight.std().item() == pytest.approx(0.02, abs=0.01)


def test_conv_transposed_conv_adjoint():
    # <conv(x), y> == <x, conv_transpose(y)> with the shared kernel
    torch.manual_seed(1)
    w = torch.randn(8, 1, 5, 5, dtype=torch.float64)
    x = torch.randn(2, 1, 16, 16, dtype=torch.float64)
    y = torch.randn(2, 8, 8, 8, dtype=torch.float64)
    cx = torch.nn.functional.conv2d(x, w, stride=2, padding=2)
    cty = torch.nn.functional.conv_transpose2d(y, w, stride=2, padding=2,
                                               output_padding=1)
    lhs = (cx * y).sum().item()
    rhs = (x * cty).sum().item()
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_layer_analytic_values():
    assert torch.sigmoid(torch.tensor(0.0)).item() == pytest.approx(0.5)
    lr = torch.nn.functional.leaky_relu(torch.tensor(-1.0), 0.2)
    assert lr.item() == pytest.approx(-0.2)
    # stride-2 transposed conv doubles 4x4 -> 8x8
    deconv = torch.nn.ConvTranspose2d(512, 256, 5, stride=2, padding=2,
                                      output_padding=1)
    out = deconv(torch.zeros(1, 512, 4, 4))
    assert out.shape[2:] == (8, 8)


def test_backward_finite_difference_small_net():
    # analytic gradient of a small network loss vs central differences
    torch.manual_seed(0)
    net = torch.nn.Sequential(
        torch.nn.Linear(6, 8), torch.nn.LeakyReLU(0.2),
        torch.nn.Linear(8, 1)).double()
    x = torch.randn(5, 6, dtype=torch.float64)

    def loss_value():
        return (net(x) ** 2).mean()

    loss = loss_value()
    grads = torch.autograd.grad(loss, list(net.parameters()))
    h = 1e-3
    total = ok = 0
    for p, g in zip(net.parameters(), grads):
        flat_p = p.data.view(-1)
        flat_g = g.view(-1)
        for i in range(flat_p.numel()):
            orig = flat_p[i].item()
            flat_p[i] = orig + h
            lp = loss_value().item()
            flat_p[i] = orig - h
            lm = loss_value().item()
            flat_p[i] = orig
            fd = (lp - lm) / (2 * h)
            total += 1
            denom = max(abs(fd), abs(flat_g[i].item()), 1e-8)
            if abs(fd - flat_g[i].item()) / denom < 1e-3:
                ok += 1
    assert ok / total >= 0.95


def test_gradient_zero_for_unused_parameter():
    used = torch.nn.Parameter(torch.ones(3))
    unused = torch.nn.Parameter(torch.ones(3))
    loss = used.sum()
    g_used, g_unused = torch.autograd.grad(
        loss, [used, unused], allow_unused=True, materialize_grads=True)
    assert torch.all(g_used == 1.0)
    assert torch.all(g_unused == 0.0)
