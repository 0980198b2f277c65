"""Small convolutional denoiser with a jointly trained condition encoder.

The network predicts the injected noise from a noised target concatenated
channel-wise with the encoded sparse-view condition, modulated by a
sinusoidal step embedding. A description-condition hook exists for parity
with the training formulation but is fixed to a zero vector at this scale.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

DESC_COND_DIM = 16


def step_embedding(tau_frac: torch.Tensor, dim: int) -> torch.Tensor:
    """Sinusoidal embedding of the normalized diffusion step, shape (B, dim)."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(10_000.0) * torch.arange(half, dtype=torch.float32, device=tau_frac.device) / half
    )
    angles = tau_frac[:, None].float() * freqs[None, :] * 1000.0
    return torch.cat([torch.sin(angles), torch.cos(angles)], dim=1)


class _Block(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, emb_dim: int):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, padding=1)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)
        self.norm1 = nn.GroupNorm(8, out_ch)
        self.norm2 = nn.GroupNorm(8, out_ch)
        self.emb = nn.Linear(emb_dim, out_ch)

    def forward(self, x, emb):
        h = F.silu(self.norm1(self.conv1(x)))
        h = h + self.emb(emb)[:, :, None, None]
        return F.silu(self.norm2(self.conv2(h)))


class ConditionEncoder(nn.Module):
    """Maps the 4-channel sparse view (RGB + validity) to latent channels."""

    def __init__(self, out_channels: int = 16):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv2d(4, 48, 3, padding=1),
            nn.SiLU(),
            nn.Conv2d(48, 48, 3, padding=1),
            nn.SiLU(),
            nn.Conv2d(48, out_channels, 3, padding=1),
        )

    def forward(self, condition: torch.Tensor) -> torch.Tensor:
        return self.net(condition)


class TinyDenoiser(nn.Module):
    def __init__(self, base: int = 48, z_channels: int = 16, emb_dim: int = 128):
        super().__init__()
        self.z_channels = z_channels
        self.encoder = ConditionEncoder(z_channels)
        self.emb_mlp = nn.Sequential(
            nn.Linear(emb_dim, emb_dim), nn.SiLU(), nn.Linear(emb_dim, emb_dim)
        )
        self.desc_proj = nn.Linear(DESC_COND_DIM, emb_dim, bias=False)
        self.emb_dim = emb_dim

        # The encoded condition is re-concatenated at every scale so its
        # gradient path stays short even when the noised input is pure noise.
        self.down1 = _Block(3 + z_channels, base, emb_dim)
        self.down2 = _Block(base + z_channels, base * 2, emb_dim)
        self.mid = _Block(base * 2 + z_channels, base * 2, emb_dim)
        self.up1 = _Block(base * 4, base, emb_dim)
        self.up2 = _Block(base * 2, base, emb_dim)
        self.out = nn.Conv2d(base, 3, 3, padding=1)
        # Step-gated additive head from the condition straight to the
        # prediction: the noise target contains the clean image scaled by
        # -alpha/sigma, and this path lets that component be learned from
        # the condition alone without routing through the noised input.
        self.cond_head = nn.Sequential(
            nn.Conv2d(z_channels, 32, 3, padding=1), nn.SiLU(), nn.Conv2d(32, 3, 3, padding=1)
        )
        self.cond_gain = nn.Linear(emb_dim, 1)
        nn.init.zeros_(self.cond_gain.weight)
        nn.init.zeros_(self.cond_gain.bias)

    def encode_condition(self, condition: torch.Tensor) -> torch.Tensor:
        return self.encoder(condition)

    def forward(
        self,
        noised: torch.Tensor,
        z: torch.Tensor,
        tau_frac: torch.Tensor,
        desc_cond: torch.Tensor | None = None,
    ) -> torch.Tensor:
        emb = self.emb_mlp(step_embedding(tau_frac, self.emb_dim))
        if desc_cond is None:
            desc_cond = torch.zeros(noised.shape[0], DESC_COND_DIM, device=noised.device)
        emb = emb + self.desc_proj(desc_cond)

        z2 = F.avg_pool2d(z, 2)
        z4 = F.avg_pool2d(z2, 2)
        d1 = self.down1(torch.cat([noised, z], dim=1), emb)
        d2 = self.down2(torch.cat([F.avg_pool2d(d1, 2), z2], dim=1), emb)
        m = self.mid(torch.cat([F.avg_pool2d(d2, 2), z4], dim=1), emb)
        u1 = self.up1(torch.cat([F.interpolate(m, scale_factor=2, mode="nearest"), d2], dim=1), emb)
        u2 = self.up2(torch.cat([F.interpolate(u1, scale_factor=2, mode="nearest"), d1], dim=1), emb)
        gain = self.cond_gain(emb)[:, :, None, None]
        return self.out(u2) + gain * self.cond_head(z)
