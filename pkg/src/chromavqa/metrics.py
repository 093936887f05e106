"""Classic full-reference metrics on 8-bit planes: PSNR variants, SSIM, MS-SSIM.

SSIM follows Wang et al. 2004 (11x11 Gaussian window, sigma 1.5, K1=0.01,
K2=0.03, L=255) and MS-SSIM the 5-scale variant of Wang et al. 2003 with the
published exponents. Small inputs fall back to the reference implementations'
convention of shrinking the window with the image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .video_io import PlaneBuffer, Yuv420Frame, plane_data

PEAK = 255.0
DEFAULT_PSNR_CAP = 60.0

_MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


@dataclass(frozen=True)
class ChannelWeights:
    """Per-channel MSE weights for color-sensitivity PSNR; must sum to 1."""

    w_y: float
    w_cb: float
    w_cr: float

    def __post_init__(self):
        if min(self.w_y, self.w_cb, self.w_cr) < 0:
            raise ValueError("channel weights must be non-negative")
        if abs(self.w_y + self.w_cb + self.w_cr - 1.0) > 1e-9:
            raise ValueError("channel weights must sum to 1")


@dataclass(frozen=True)
class PsnrReport:
    psnr_y: float
    psnr_cb: float
    psnr_cr: float
    psnr_411: float
    psnr_611: float
    cspsnr: float


def mse_plane(ref, dist) -> float:
    a, b = plane_data(ref), plane_data(dist)
    if a.shape != b.shape:
        raise ValueError(f"plane dimensions differ: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def _psnr_from_mse(mse: float, cap: float) -> float:
    if mse <= 0.0:
        return cap
    return min(10.0 * math.log10(PEAK * PEAK / mse), cap)


def psnr_plane(ref, dist, cap: float = DEFAULT_PSNR_CAP) -> float:
    """PSNR in dB between two equal-size planes, capped at `cap` dB."""
    return _psnr_from_mse(mse_plane(ref, dist), cap)


def psnr_k11(psnr_y: float, psnr_cb: float, psnr_cr: float, k: float) -> float:
    """Weighted channel combination (k*Y + Cb + Cr) / (k + 2)."""
    return (k * psnr_y + psnr_cb + psnr_cr) / (k + 2.0)


def psnr_family(ref: Yuv420Frame, dist: Yuv420Frame, weights: ChannelWeights,
                cap: float = DEFAULT_PSNR_CAP) -> PsnrReport:
    """Per-channel PSNR on native plane resolutions plus the combined scores.

    The color-sensitivity score fuses the per-channel MSEs linearly before
    the log, so it is a PSNR of a weighted MSE rather than an average of dBs.
    """
    mse_y = mse_plane(ref.y, dist.y)
    mse_cb = mse_plane(ref.cb, dist.cb)
    mse_cr = mse_plane(ref.cr, dist.cr)
    p_y = _psnr_from_mse(mse_y, cap)
    p_cb = _psnr_from_mse(mse_cb, cap)
    p_cr = _psnr_from_mse(mse_cr, cap)
    wmse = weights.w_y * mse_y + weights.w_cb * mse_cb + weights.w_cr * mse_cr
    return PsnrReport(
        psnr_y=p_y,
        psnr_cb=p_cb,
        psnr_cr=p_cr,
        psnr_411=psnr_k11(p_y, p_cb, p_cr, 4.0),
        psnr_611=psnr_k11(p_y, p_cb, p_cr, 6.0),
        cspsnr=_psnr_from_mse(wmse, cap),
    )


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    t = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(t * t) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def _ssim_maps(a: np.ndarray, b: np.ndarray, window_size: int = 11,
               sigma: float = 1.5, k1: float = 0.01, k2: float = 0.03):
    """Local SSIM and contrast-structure maps via valid-mode filtering.

    The window shrinks (with proportional sigma) when the plane is smaller
    than the nominal 11x11 support, matching the reference small-image
    behavior used by the MS-SSIM cascade.
    """
    size = min(window_size, a.shape[0], a.shape[1])
    win = _gaussian_window(size, sigma * size / window_size)

    mu1 = signal.fftconvolve(a, win, mode="valid")
    mu2 = signal.fftconvolve(b, win, mode="valid")
    mu1_sq, mu2_sq, mu1_mu2 = mu1 * mu1, mu2 * mu2, mu1 * mu2
    s11 = signal.fftconvolve(a * a, win, mode="valid") - mu1_sq
    s22 = signal.fftconvolve(b * b, win, mode="valid") - mu2_sq
    s12 = signal.fftconvolve(a * b, win, mode="valid") - mu1_mu2

    c1 = (k1 * PEAK) ** 2
    c2 = (k2 * PEAK) ** 2
    cs_map = (2.0 * s12 + c2) / (s11 + s22 + c2)
    ssim_map = ((2.0 * mu1_mu2 + c1) / (mu1_sq + mu2_sq + c1)) * cs_map
    return ssim_map, cs_map


def ssim_plane(ref, dist) -> float:
    """Mean SSIM over the local map; planes must be at least 11x11."""
    a, b = plane_data(ref), plane_data(dist)
    if a.shape != b.shape:
        raise ValueError(f"plane dimensions differ: {a.shape} vs {b.shape}")
    if min(a.shape) < 11:
        raise ValueError("SSIM needs at least 11x11 samples")
    ssim_map, _ = _ssim_maps(a, b)
    return float(np.mean(ssim_map))


def _downsample2(x: np.ndarray) -> np.ndarray:
    h, w = (x.shape[0] // 2) * 2, (x.shape[1] // 2) * 2
    x = x[:h, :w]
    return 0.25 * (x[0::2, 0::2] + x[1::2, 0::2] + x[0::2, 1::2] + x[1::2, 1::2])


def ms_ssim_plane(ref, dist, weights=_MSSSIM_WEIGHTS) -> float:
    """Multi-scale SSIM over 5 dyadic scales with the standard exponents.

    The finest 4 scales contribute their contrast-structure means, the
    coarsest adds the luminance term. Planes below 16 samples in either
    dimension cannot support 5 scales and are rejected.
    """
    a, b = plane_data(ref), plane_data(dist)
    if a.shape != b.shape:
        raise ValueError(f"plane dimensions differ: {a.shape} vs {b.shape}")
    levels = len(weights)
    if min(a.shape) < 2 ** (levels - 1):
        raise ValueError(f"plane too small for {levels} scales")

    mssim, mcs = [], []
    for _ in range(levels):
        ssim_map, cs_map = _ssim_maps(a, b)
        mssim.append(np.mean(ssim_map))
        mcs.append(np.mean(cs_map))
        a, b = _downsample2(a), _downsample2(b)

    mssim = np.clip(np.asarray(mssim), 0.0, None)
    mcs = np.clip(np.asarray(mcs), 0.0, None)
    w = np.asarray(weights)
    return float(np.prod(mcs[:-1] ** w[:-1]) * mssim[-1] ** w[-1])
