"""Noise injection, the denoising objective, and the overfit training loop."""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .model import TinyDenoiser
from .schedule import NoiseSchedule

CONDITION_DROP_PROBABILITY = 0.2


def forward_noise(
    y: torch.Tensor, tau, sched: NoiseSchedule, eps: torch.Tensor
) -> torch.Tensor:
    """Diffuse a clean tensor to step tau: alpha(tau) * y + sigma(tau) * eps.

    ``tau`` may be a scalar step or a per-sample tensor of steps.
    """
    if y.shape != eps.shape:
        raise ValueError(f"shape mismatch: y {tuple(y.shape)} vs eps {tuple(eps.shape)}")
    alpha = torch.as_tensor(sched.alpha(tau), dtype=y.dtype, device=y.device)
    sigma = torch.as_tensor(sched.sigma(tau), dtype=y.dtype, device=y.device)
    while alpha.dim() < y.dim():
        alpha = alpha.unsqueeze(-1)
        sigma = sigma.unsqueeze(-1)
    return alpha * y + sigma * eps


def denoise_loss(
    model: TinyDenoiser,
    y: torch.Tensor,
    condition: torch.Tensor,
    tau,
    eps: torch.Tensor,
    drop: bool,
    sched: NoiseSchedule,
) -> torch.Tensor:
    """Mean squared error between the injected and the predicted noise.

    ``drop`` zeroes the encoded condition channels, the unconditional branch
    used for classifier-free guidance.
    """
    y_r = forward_noise(y, tau, sched, eps)
    z = model.encode_condition(condition)
    if drop:
        z = torch.zeros_like(z)
    tau_frac = torch.as_tensor(tau, dtype=torch.float32, device=y.device) / sched.steps
    if tau_frac.dim() == 0:
        tau_frac = tau_frac.expand(y.shape[0])
    pred = model(y_r, z, tau_frac)
    return F.mse_loss(pred, eps)


@dataclass
class TrainConfig:
    steps: int = 1200
    batch_size: int = 4
    lr: float = 2e-3
    seed: int = 0
    condition_drop_probability: float = CONDITION_DROP_PROBABILITY
    schedule_steps: int = 1000
    base_channels: int = 48
    z_channels: int = 16
    ema_decay: float = 0.999


def train_overfit(
    samples: list[tuple[torch.Tensor, torch.Tensor]],
    cfg: TrainConfig = TrainConfig(),
    log_every: int = 0,
) -> tuple[TinyDenoiser, NoiseSchedule, list[float]]:
    """Overfit the denoiser on a small in-memory dataset.

    Batching, step draws, noise, and condition dropout all come from one
    seeded generator, so a rerun reproduces the same loss trajectory.
    The returned model carries an exponential moving average of the
    weights; sample quality is far steadier under it than under the raw
    final iterate. Also returns the schedule and per-step loss history.
    """
    torch.manual_seed(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)
    sched = NoiseSchedule.cosine(cfg.schedule_steps)
    model = TinyDenoiser(base=cfg.base_channels, z_channels=cfg.z_channels)
    ema = TinyDenoiser(base=cfg.base_channels, z_channels=cfg.z_channels)
    ema.load_state_dict(model.state_dict())
    for p in ema.parameters():
        p.requires_grad_(False)
    opt = torch.optim.AdamW(model.parameters(), lr=cfg.lr)
    decay = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=cfg.steps, eta_min=cfg.lr * 0.05)

    conditions = torch.stack([c for c, _ in samples])
    targets = torch.stack([t for _, t in samples])
    n = len(samples)

    history: list[float] = []
    model.train()
    for step in range(cfg.steps):
        idx = torch.randint(0, n, (cfg.batch_size,), generator=gen)
        y = targets[idx]
        condition = conditions[idx]
        tau = torch.randint(1, sched.steps + 1, (cfg.batch_size,), generator=gen)
        eps = torch.randn(y.shape, generator=gen)
        drop = bool(torch.rand((), generator=gen) < cfg.condition_drop_probability)

        loss = denoise_loss(model, y, condition, tau, eps, drop, sched)
        opt.zero_grad()
        loss.backward()
        opt.step()
        decay.step()
        with torch.no_grad():
            for p_ema, p in zip(ema.parameters(), model.parameters()):
                p_ema.mul_(cfg.ema_decay).add_(p, alpha=1.0 - cfg.ema_decay)
            for b_ema, b in zip(ema.buffers(), model.buffers()):
                b_ema.copy_(b)
        history.append(float(loss.detach()))
        if log_every and (step + 1) % log_every == 0:
            recent = sum(history[-log_every:]) / log_every
            print(f"step {step + 1:5d}  loss {recent:.4f}", flush=True)

    ema.eval()
    return ema, sched, history


def save_checkpoint(path, model: TinyDenoiser, sched: NoiseSchedule, cfg: TrainConfig) -> None:
    torch.save(
        {
            "state": model.state_dict(),
            "base_channels": cfg.base_channels,
            "z_channels": model.z_channels,
            "schedule_steps": sched.steps,
        },
        path,
    )


def load_checkpoint(path) -> tuple[TinyDenoiser, NoiseSchedule]:
    blob = torch.load(path, map_location="cpu", weights_only=True)
    model = TinyDenoiser(base=blob["base_channels"], z_channels=blob["z_channels"])
    model.load_state_dict(blob["state"])
    model.eval()
    return model, NoiseSchedule.cosine(blob["schedule_steps"])
