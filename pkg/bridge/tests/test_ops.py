import numpy as np
import pytest
import torch

from toybridge.model import TinyDenoiser
from toybridge.sampling import cfg_predict, sample
from toybridge.schedule import NoiseSchedule
from toybridge.training import denoise_loss, forward_noise


def _synthetic_schedule(alpha, sigma):
    return NoiseSchedule(1, np.array([alpha, alpha]), np.array([sigma, sigma]))


def test_forward_noise_noiseless_endpoint():
    y = torch.randn(2, 3, 8, 8)
    eps = torch.randn(2, 3, 8, 8)
    out = forward_noise(y, 0, _synthetic_schedule(1.0, 0.0), eps)
    torch.testing.assert_close(out, y)


def test_forward_noise_pure_noise_endpoint():
    y = torch.randn(2, 3, 8, 8)
    eps = torch.randn(2, 3, 8, 8)
    out = forward_noise(y, 1, _synthetic_schedule(0.0, 1.0), eps)
    torch.testing.assert_close(out, eps)


def test_forward_noise_scalar_example():
    out = forward_noise(
        torch.tensor([1.0]), 0, _synthetic_schedule(0.6, 0.8), torch.tensor([0.5])
    )
    assert abs(float(out) - 1.0) < 1e-7  # 0.6*1 + 0.8*0.5
    assert abs(0.6**2 + 0.8**2 - 1.0) < 1e-12


def test_forward_noise_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        forward_noise(torch.zeros(2, 3), 0, _synthetic_schedule(1, 0), torch.zeros(2, 4))


def test_forward_noise_per_sample_steps():
    sched = NoiseSchedule.cosine(100)
    y = torch.ones(2, 1, 2, 2)
    eps = torch.zeros(2, 1, 2, 2)
    out = forward_noise(y, torch.tensor([10, 90]), sched, eps)
    assert abs(float(out[0, 0, 0, 0]) - sched.alpha(10)) < 1e-6
    assert abs(float(out[1, 0, 0, 0]) - sched.alpha(90)) < 1e-6


class _OracleModel:
    """Stub that 'predicts' the exact noise it is told about."""

    def __init__(self, eps):
        self.eps = eps

    def encode_condition(self, condition):
        return torch.zeros(condition.shape[0], 1, *condition.shape[2:])

    def __call__(self, noised, z, tau_frac):
        return self.eps


class _ZeroModel(_OracleModel):
    def __call__(self, noised, z, tau_frac):
        return torch.zeros_like(noised)


def test_denoise_loss_zero_for_oracle_model():
    sched = NoiseSchedule.cosine(100)
    y = torch.randn(2, 3, 16, 16)
    eps = torch.randn(2, 3, 16, 16)
    loss = denoise_loss(_OracleModel(eps), y, torch.randn(2, 4, 16, 16), 50, eps, False, sched)
    assert float(loss) == 0.0


def test_denoise_loss_of_zero_model_is_noise_variance():
    torch.manual_seed(0)
    sched = NoiseSchedule.cosine(100)
    y = torch.randn(4, 3, 64, 64)
    eps = torch.randn(4, 3, 64, 64)
    loss = denoise_loss(_ZeroModel(eps), y, torch.randn(4, 4, 64, 64), 50, eps, False, sched)
    assert abs(float(loss) - 1.0) < 0.05


def test_denoise_loss_with_drop_ignores_condition_content():
    sched = NoiseSchedule.cosine(100)
    torch.manual_seed(1)
    model = TinyDenoiser(base=16, z_channels=8)
    y = torch.randn(2, 3, 16, 16)
    eps = torch.randn(2, 3, 16, 16)
    with torch.no_grad():
        a = denoise_loss(model, y, torch.randn(2, 4, 16, 16), 40, eps, True, sched)
        b = denoise_loss(model, y, torch.randn(2, 4, 16, 16) * 9.0, 40, eps, True, sched)
    assert float(a) == float(b)


def test_cfg_scale_one_is_conditional():
    p_c, p_u = torch.randn(3, 4), torch.randn(3, 4)
    torch.testing.assert_close(cfg_predict(p_c, p_u, 1.0), p_c)


def test_cfg_scale_zero_is_unconditional():
    p_c, p_u = torch.randn(3, 4), torch.randn(3, 4)
    torch.testing.assert_close(cfg_predict(p_c, p_u, 0.0), p_u)


def test_cfg_hand_example():
    out = cfg_predict(torch.tensor([2.0]), torch.tensor([1.0]), 2.0)
    assert float(out) == 3.0


def test_cfg_degenerate_guidance_identity():
    p = torch.randn(2, 3, 8, 8)
    for scale in (0.0, 0.5, 1.0, 2.0, 7.0):
        torch.testing.assert_close(cfg_predict(p, p, scale), p)


def test_cfg_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        cfg_predict(torch.zeros(2, 3), torch.zeros(3, 2), 1.0)


def test_sampler_output_range_and_shape():
    torch.manual_seed(0)
    model = TinyDenoiser(base=16, z_channels=8)
    model.eval()
    sched = NoiseSchedule.cosine(100)
    out = sample(model, sched, torch.randn(4, 16, 16), steps=5,
                 generator=torch.Generator().manual_seed(1))
    assert out.shape == (1, 3, 16, 16)
    assert float(out.min()) >= -1.0 and float(out.max()) <= 1.0


def test_sampler_cfg_scales_differ_on_same_seed():
    torch.manual_seed(0)
    model = TinyDenoiser(base=16, z_channels=8)
    model.eval()
    sched = NoiseSchedule.cosine(100)
    cond = torch.randn(4, 16, 16)
    a = sample(model, sched, cond, steps=5, cfg_scale=1.0,
               generator=torch.Generator().manual_seed(2))
    b = sample(model, sched, cond, steps=5, cfg_scale=2.0,
               generator=torch.Generator().manual_seed(2))
    assert not torch.equal(a, b)


def test_sampler_seeded_reproducibility():
    torch.manual_seed(0)
    model = TinyDenoiser(base=16, z_channels=8)
    model.eval()
    sched = NoiseSchedule.cosine(100)
    cond = torch.randn(4, 16, 16)
    a = sample(model, sched, cond, steps=5, generator=torch.Generator().manual_seed(3))
    b = sample(model, sched, cond, steps=5, generator=torch.Generator().manual_seed(3))
    torch.testing.assert_close(a, b)
