"""Variance-preserving noise schedule.

Coefficients come from a cosine angle sweep: alpha = cos(theta),
sigma = sin(theta), so alpha^2 + sigma^2 = 1 holds exactly at every step,
alpha decreases monotonically and sigma increases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    steps: int
    alphas: np.ndarray  # (steps + 1,) float64, index = diffusion step
    sigmas: np.ndarray

    @staticmethod
    def cosine(steps: int = 1000, shift: float = 0.008) -> "NoiseSchedule":
        t = np.arange(steps + 1, dtype=np.float64) / steps
        theta = (math.pi / 2.0) * ((t + shift) / (1.0 + shift))
        return NoiseSchedule(steps, np.cos(theta), np.sin(theta))

    def alpha(self, tau):
        return self.alphas[tau]

    def sigma(self, tau):
        return self.sigmas[tau]
