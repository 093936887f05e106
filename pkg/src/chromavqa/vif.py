"""Pixel-domain multiscale Visual Information Fidelity.

Follows the pixel-domain approximation released with Sheikh & Bovik's VIF:
four scales, Gaussian local statistics with window lengths 17/9/5/3
(sigma = length/5), low-pass filtering and 2x decimation between scales.
Scale 0 is the finest; larger indices cover lower frequency bands. Each scale
yields an information ratio; the overall score pools the numerators and
denominators across scales.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np
from scipy import ndimage

from .video_io import plane_data

_EPS = 1e-10
# Local variances below this are cancellation noise from E[x^2] - E[x]^2
# (around 1e-11 for 8-bit data), orders of magnitude under any genuine
# one-pixel variance; they are treated as exactly zero.
_VAR_FLOOR = 1e-8


@dataclass(frozen=True)
class VifConfig:
    sigma_noise_sq: float = 2.0
    window_sizes: Tuple[int, ...] = (17, 9, 5, 3)

    def __post_init__(self):
        if self.sigma_noise_sq <= 0:
            raise ValueError("sigma_noise_sq must be positive")
        if len(self.window_sizes) != 4:
            raise ValueError("exactly four scales are computed")
        if any(n < 1 or n % 2 == 0 for n in self.window_sizes):
            raise ValueError("window lengths must be odd and positive")

    def fingerprint(self) -> str:
        return f"vif:sn2={self.sigma_noise_sq!r}:win={','.join(map(str, self.window_sizes))}"


DEFAULT_VIF_CONFIG = VifConfig()


@dataclass(frozen=True)
class VifScores:
    s0: float
    s1: float
    s2: float
    s3: float
    overall: float

    def as_dict(self) -> dict:
        return {"vif_s0": self.s0, "vif_s1": self.s1, "vif_s2": self.s2,
                "vif_s3": self.s3, "vif": self.overall}

    def scale(self, k: int) -> float:
        return (self.s0, self.s1, self.s2, self.s3)[k]


def _gaussian_1d(size: int) -> np.ndarray:
    sigma = size / 5.0
    t = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    w = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return w / w.sum()


def _blur(x: np.ndarray, win: np.ndarray) -> np.ndarray:
    y = ndimage.correlate1d(x, win, axis=0, mode="reflect")
    return ndimage.correlate1d(y, win, axis=1, mode="reflect")


def _blur_decimate(x: np.ndarray, win: np.ndarray) -> np.ndarray:
    # Decimating between the separable passes is exact and halves the work.
    y = ndimage.correlate1d(x, win, axis=0, mode="reflect")[::2]
    return ndimage.correlate1d(y, win, axis=1, mode="reflect")[:, ::2]


def _scale_terms(ref: np.ndarray, dist: np.ndarray, win: np.ndarray,
                 sigma_nsq: float) -> Tuple[float, float]:
    """Information numerator/denominator of one scale."""
    mu_r = _blur(ref, win)
    mu_d = _blur(dist, win)
    sigma_r = _blur(ref * ref, win)
    sigma_r -= mu_r * mu_r
    sigma_r[sigma_r < _VAR_FLOOR] = 0.0
    sigma_d = _blur(dist * dist, win)
    sigma_d -= mu_d * mu_d
    sigma_d[sigma_d < _VAR_FLOOR] = 0.0
    sigma_rd = _blur(ref * dist, win)
    mu_r *= mu_d
    sigma_rd -= mu_r

    g = sigma_rd / (sigma_r + _EPS)
    v_sq = sigma_d
    v_sq -= g * sigma_rd
    np.maximum(v_sq, 0.0, out=v_sq)
    v_sq += sigma_nsq

    num_arg = g
    num_arg *= g
    num_arg *= sigma_r
    num_arg /= v_sq
    num_arg += 1.0
    num = float(np.sum(np.log2(num_arg, out=num_arg)))

    den_arg = sigma_r
    den_arg /= sigma_nsq
    den_arg += 1.0
    den = float(np.sum(np.log2(den_arg, out=den_arg)))
    return num, den


def vif_multiscale(ref, dist, cfg: VifConfig = DEFAULT_VIF_CONFIG) -> VifScores:
    """Per-scale and pooled VIF between two equal-size planes.

    A scale with no reference information (0/0) scores 1.0: nothing was lost
    because nothing was there.
    """
    a, b = plane_data(ref), plane_data(dist)
    if a.shape != b.shape:
        raise ValueError(f"plane dimensions differ: {a.shape} vs {b.shape}")
    n_scales = len(cfg.window_sizes)
    if min(a.shape) < 2 ** (n_scales - 1) * 4:
        raise ValueError(f"plane too small for {n_scales} scales")

    a = a - 128.0
    b = b - 128.0
    nums, dens = [], []
    for s, size in enumerate(cfg.window_sizes):
        win = _gaussian_1d(size)
        if s > 0:
            a = _blur_decimate(a, win)
            b = _blur_decimate(b, win)
        num, den = _scale_terms(a, b, win, cfg.sigma_noise_sq)
        nums.append(num)
        dens.append(den)

    ratios = [n / d if d > 0.0 else 1.0 for n, d in zip(nums, dens)]
    total_den = sum(dens)
    overall = sum(nums) / total_den if total_den > 0.0 else 1.0
    return VifScores(*ratios, overall=overall)
