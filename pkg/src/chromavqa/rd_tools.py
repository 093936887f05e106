"""Codec-facing utilities: chroma QP derivation, BD-rate, monotonicity checks.

The chroma QP calculator reproduces the HEVC mapping from the transitional
value QP_i to QP_c (identity below 30, table lookup through 43, QP_i - 6
above) and supports an unclipped offset mode for planning encodes outside the
standardized [-12, 12] offset range. BD-rate integrates monotone piecewise
cubic interpolants of log-bitrate over the shared quality interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

_QP_TABLE = {30: 29, 31: 30, 32: 31, 33: 32, 34: 33, 35: 33, 36: 34,
             37: 34, 38: 35, 39: 35, 40: 36, 41: 36, 42: 37, 43: 37}
QP_MIN, QP_MAX = 0, 51
OFFSET_CLIP = 12


@dataclass(frozen=True)
class QpParams:
    qp_y: int
    cb_offset: int = 0
    cr_offset: int = 0
    clipped_mode: bool = True

    def __post_init__(self):
        if not QP_MIN <= self.qp_y <= QP_MAX:
            raise ValueError(f"qp_y must lie in [{QP_MIN}, {QP_MAX}]")


def qp_i_to_qp_c(qp_i: int) -> int:
    """Nonlinear transitional-QP to chroma-QP mapping, clamped to [0, 51]."""
    if qp_i < 30:
        qp_c = qp_i
    elif qp_i > 43:
        qp_c = qp_i - 6
    else:
        qp_c = _QP_TABLE[qp_i]
    return min(max(qp_c, QP_MIN), QP_MAX)


def chroma_qp(p: QpParams) -> Tuple[int, int]:
    """Chroma QPs for both channels; offsets clip to [-12, 12] in clipped mode."""
    def one(offset: int) -> int:
        if p.clipped_mode:
            offset = min(max(offset, -OFFSET_CLIP), OFFSET_CLIP)
        return qp_i_to_qp_c(p.qp_y + offset)

    return one(p.cb_offset), one(p.cr_offset)


@dataclass(frozen=True)
class RdPoint:
    bitrate_kbps: float
    quality: float


@dataclass(frozen=True)
class RdCurve:
    points: Tuple[RdPoint, ...]

    def __post_init__(self):
        pts = tuple(p if isinstance(p, RdPoint) else RdPoint(*p)
                    for p in self.points)
        if not pts:
            raise ValueError("an RD curve needs at least one point")
        if any(p.bitrate_kbps <= 0 for p in pts):
            raise ValueError("bitrates must be positive")
        rates = [p.bitrate_kbps for p in pts]
        if any(b >= a for a, b in zip(rates[1:], rates)):
            raise ValueError("bitrates must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points])

    @property
    def log_rates(self) -> np.ndarray:
        return np.log10([p.bitrate_kbps for p in self.points])


def bd_rate(anchor: RdCurve, test: RdCurve) -> float:
    """Average bitrate difference of `test` against `anchor`, in percent.

    Interpolates log10(bitrate) as a function of quality with a monotone
    piecewise cubic, integrates both curves over the common quality interval,
    and converts the mean log offset back to a percentage. Curves must have
    at least 4 points with strictly increasing quality; a quality dip is an
    error rather than something to sort away.
    """
    for name, curve in (("anchor", anchor), ("test", test)):
        if len(curve.points) < 4:
            raise ValueError(f"{name} curve needs at least 4 points")
        q = curve.qualities
        if np.any(np.diff(q) <= 0):
            raise ValueError(f"{name} curve quality is not strictly increasing")
    lo = max(anchor.qualities.min(), test.qualities.min())
    hi = min(anchor.qualities.max(), test.qualities.max())
    if hi <= lo:
        raise ValueError("RD curves have no overlapping quality range")

    int_anchor = PchipInterpolator(anchor.qualities, anchor.log_rates).antiderivative()
    int_test = PchipInterpolator(test.qualities, test.log_rates).antiderivative()
    mean_anchor = (int_anchor(hi) - int_anchor(lo)) / (hi - lo)
    mean_test = (int_test(hi) - int_test(lo)) / (hi - lo)
    return (10.0 ** (mean_test - mean_anchor) - 1.0) * 100.0


@dataclass(frozen=True)
class Violation:
    axis: str                 # "chroma_step" or "crf"
    row: int                  # crf index of the worse cell
    col: int                  # step index of the worse cell
    magnitude: float


@dataclass(frozen=True)
class MonotonicityReport:
    grid: Tuple[Tuple[float, ...], ...]
    violations: Tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def monotonicity_check(grid, tolerance: float = 1e-6) -> MonotonicityReport:
    """Scan a (crf x chroma-step) prediction grid for strict increases.

    Predictions are expected to be non-increasing left-to-right within each
    row (growing chroma degradation) and top-to-bottom within each column
    (growing base quantization). Ties are fine; increases beyond the
    tolerance are recorded with their magnitudes.
    """
    rows = [tuple(float(v) for v in row) for row in grid]
    if not rows or not rows[0]:
        raise ValueError("grid must be non-empty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("grid must be rectangular")

    violations: List[Violation] = []
    for i, row in enumerate(rows):
        for j in range(1, width):
            delta = row[j] - row[j - 1]
            if delta > tolerance:
                violations.append(Violation("chroma_step", i, j, delta))
    for j in range(width):
        for i in range(1, len(rows)):
            delta = rows[i][j] - rows[i - 1][j]
            if delta > tolerance:
                violations.append(Violation("crf", i, j, delta))
    return MonotonicityReport(tuple(rows), tuple(violations))
