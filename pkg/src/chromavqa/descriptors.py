"""Content-complexity descriptors: spatial/temporal information, colorfulness.

SI is the maximum per-frame standard deviation of the Sobel gradient
magnitude, TI the maximum standard deviation of consecutive-frame luma
differences, and CF the Hasler & Suesstrunk colorfulness statistic of the
opponent channels rg = R-G and yb = 0.5(R+G) - B, each maximized over frames.

The per-frame motion series used as a fusion feature is a distinct, simpler
quantity: the mean absolute luma difference between consecutive frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .video_io import RgbFrame, VideoSequence, yuv420_to_rgb444

_SOBEL_X = np.array([[-1.0, 0.0, 1.0],
                     [-2.0, 0.0, 2.0],
                     [-1.0, 0.0, 1.0]])
_SOBEL_Y = _SOBEL_X.T


@dataclass(frozen=True)
class ContentDescriptors:
    si: float
    ti: float
    cf: float


def motion_ti(seq: VideoSequence) -> List[float]:
    """Mean absolute luma frame difference per frame; the first frame is 0."""
    values = [0.0]
    prev = seq[0].y.as_float()
    for frame in seq.frames[1:]:
        cur = frame.y.as_float()
        values.append(float(np.mean(np.abs(cur - prev))))
        prev = cur
    return values


def _sobel_magnitude(y: np.ndarray) -> np.ndarray:
    # Interior pixels only; no boundary padding policy to pick.
    win = np.lib.stride_tricks.sliding_window_view(y, (3, 3))
    sh = np.einsum("ijkl,kl->ij", win, _SOBEL_X)
    sv = np.einsum("ijkl,kl->ij", win, _SOBEL_Y)
    return np.sqrt(sh * sh + sv * sv)


def spatial_information(seq: VideoSequence) -> float:
    return max(float(np.std(_sobel_magnitude(f.y.as_float()))) for f in seq)


def temporal_information(seq: VideoSequence) -> float:
    if len(seq) < 2:
        return 0.0
    best = 0.0
    prev = seq[0].y.as_float()
    for frame in seq.frames[1:]:
        cur = frame.y.as_float()
        best = max(best, float(np.std(cur - prev)))
        prev = cur
    return best


def colorfulness(rgb: RgbFrame) -> float:
    r = rgb.r.as_float()
    g = rgb.g.as_float()
    b = rgb.b.as_float()
    rg = r - g
    yb = 0.5 * (r + g) - b
    sigma = np.hypot(np.std(rg), np.std(yb))
    mu = np.hypot(np.mean(rg), np.mean(yb))
    return float(sigma + 0.3 * mu)


def si_ti_cf(seq: VideoSequence) -> ContentDescriptors:
    """Descriptor triple for one sequence; CF runs on the RGB444 conversion."""
    cf = max(colorfulness(yuv420_to_rgb444(f)) for f in seq)
    return ContentDescriptors(
        si=spatial_information(seq),
        ti=temporal_information(seq),
        cf=cf,
    )
