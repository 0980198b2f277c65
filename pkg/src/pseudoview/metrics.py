"""PSNR, single-scale SSIM, and pseudo-image sparsity measures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .render import PseudoImage

PSNR_CAP_DB = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB over all channels, 8-bit range.

    Identical images report the 99 dB cap so aggregates stay finite.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    mse = np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2)
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(10.0 * math.log10(DYNAMIC_RANGE**2 / mse))


def _gaussian_kernel_1d(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def _filter_valid(img: np.ndarray, k1d: np.ndarray) -> np.ndarray:
    """Separable valid-mode correlation with a symmetric 1-D kernel."""
    from numpy.lib.stride_tricks import sliding_window_view

    rows = sliding_window_view(img, len(k1d), axis=1) @ k1d
    return sliding_window_view(rows, len(k1d), axis=0) @ k1d


def _ssim_channel(a: np.ndarray, b: np.ndarray) -> float:
    k1d = _gaussian_kernel_1d()
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    mu_a = _filter_valid(a, k1d)
    mu_b = _filter_valid(b, k1d)
    var_a = _filter_valid(a * a, k1d) - mu_a**2
    var_b = _filter_valid(b * b, k1d) - mu_b**2
    cov = _filter_valid(a * b, k1d) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), K1 0.01,
    K2 0.03, 8-bit dynamic range; channel scores are averaged."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    if min(a.shape[0], a.shape[1]) < SSIM_WINDOW:
        raise ShapeError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape[:2]}"
        )
    af = a.astype(np.float64)
    bf = b.astype(np.float64)
    if af.ndim == 2:
        af = af[:, :, None]
        bf = bf[:, :, None]
    scores = [_ssim_channel(af[:, :, c], bf[:, :, c]) for c in range(af.shape[2])]
    return float(np.mean(scores))


def mask_density(p: PseudoImage) -> float:
    """Fraction of raster pixels carrying a projected point."""
    return float(np.count_nonzero(p.valid)) / p.valid.size


@dataclass
class ViewScore:
    frame: int
    camera: str
    psnr_db: float
    ssim: float


@dataclass
class MetricReport:
    records: list[ViewScore] = field(default_factory=list)

    def add(self, frame: int, camera: str, psnr_db: float, ssim_score: float) -> None:
        self.records.append(ViewScore(frame, camera, psnr_db, ssim_score))

    @property
    def mean_psnr(self) -> float:
        return float(np.mean([r.psnr_db for r in self.records])) if self.records else 0.0

    @property
    def mean_ssim(self) -> float:
        return float(np.mean([r.ssim for r in self.records])) if self.records else 0.0

    def write_csv(self, path: str | Path) -> None:
        lines = ["frame,camera,psnr_db,ssim"]
        for r in sorted(self.records, key=lambda r: (r.frame, r.camera)):
            lines.append(f"{r.frame},{r.camera},{r.psnr_db:.6f},{r.ssim:.6f}")
        lines.append(f"mean,all,{self.mean_psnr:.6f},{self.mean_ssim:.6f}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
