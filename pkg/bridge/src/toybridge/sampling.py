"""Classifier-free guidance and the ancestral sampler."""

from __future__ import annotations

import torch

from .model import TinyDenoiser
from .schedule import NoiseSchedule

SAMPLING_STEPS = 25
CFG_SCALE_RECORDED = 1.0
CFG_SCALE_NOVEL = 2.0
ETA = 1.0


def cfg_predict(
    pred_cond: torch.Tensor, pred_uncond: torch.Tensor, scale: float
) -> torch.Tensor:
    """Guided prediction: uncond + scale * (cond - uncond)."""
    if pred_cond.shape != pred_uncond.shape:
        raise ValueError(
            f"shape mismatch: {tuple(pred_cond.shape)} vs {tuple(pred_uncond.shape)}"
        )
    return pred_uncond + scale * (pred_cond - pred_uncond)


@torch.no_grad()
def sample(
    model: TinyDenoiser,
    sched: NoiseSchedule,
    condition: torch.Tensor,
    steps: int = SAMPLING_STEPS,
    cfg_scale: float = CFG_SCALE_RECORDED,
    eta: float = ETA,
    generator: torch.Generator | None = None,
) -> torch.Tensor:
    """Draw an image batch from pure noise conditioned on sparse views.

    Runs ``steps`` evenly spaced schedule steps from the pure-noise end to
    step 0. ``eta`` sets the per-step stochasticity (0 = deterministic
    trajectory, 1 = full ancestral noise). Output lies in [-1, 1].
    """
    if condition.dim() == 3:
        condition = condition[None]
    batch = condition.shape[0]
    shape = (batch, 3, condition.shape[2], condition.shape[3])
    gen = generator if generator is not None else torch.Generator().manual_seed(0)

    z = model.encode_condition(condition)
    z_uncond = torch.zeros_like(z)

    taus = torch.linspace(sched.steps, 0, steps + 1).round().long().tolist()
    x = torch.randn(shape, generator=gen)
    for tau, tau_next in zip(taus[:-1], taus[1:]):
        tau_frac = torch.full((batch,), tau / sched.steps, dtype=torch.float32)
        pred_c = model(x, z, tau_frac)
        if cfg_scale == 1.0:
            eps_hat = pred_c
        else:
            eps_hat = cfg_predict(pred_c, model(x, z_uncond, tau_frac), cfg_scale)

        a_t, s_t = float(sched.alpha(tau)), float(sched.sigma(tau))
        a_n, s_n = float(sched.alpha(tau_next)), float(sched.sigma(tau_next))
        x0_hat = ((x - s_t * eps_hat) / max(a_t, 1e-6)).clamp(-1.0, 1.0)
        # Re-derive the noise direction from the clamped estimate so the
        # (x0, eps) pair stays consistent with the current state.
        eps_dir = (x - a_t * x0_hat) / s_t
        # Posterior step variance scaled by eta (exact for any jump size).
        var = (eta * s_n / s_t) ** 2 * max(0.0, 1.0 - (a_t / a_n) ** 2) if tau_next > 0 else 0.0
        var = min(var, s_n**2)
        dir_coeff = max(s_n**2 - var, 0.0) ** 0.5
        x = a_n * x0_hat + dir_coeff * eps_dir
        if var > 0:
            x = x + var**0.5 * torch.randn(shape, generator=gen)
    return x.clamp(-1.0, 1.0)
