import math

import numpy as np
import pytest

from chromavqa.metrics import (ChannelWeights, ms_ssim_plane, psnr_family,
                               psnr_k11, psnr_plane, ssim_plane)
from chromavqa.video_io import PlaneBuffer, Yuv420Frame

from conftest import flat_frame, random_plane, textured_plane


def slow_ssim(a, b, size=11, sigma=1.5, k1=0.01, k2=0.03):
    """Straightforward SSIM used only as a test oracle: explicit windows."""
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    half = (size - 1) / 2.0
    t = np.arange(size) - half
    g = np.exp(-(t * t) / (2 * sigma * sigma))
    win = np.outer(g, g)
    win /= win.sum()
    c1 = (k1 * 255.0) ** 2
    c2 = (k2 * 255.0) ** 2
    h, w = a.shape
    vals = []
    for i in range(h - size + 1):
        for j in range(w - size + 1):
            pa = a[i:i + size, j:j + size]
            pb = b[i:i + size, j:j + size]
            mu1 = (win * pa).sum()
            mu2 = (win * pb).sum()
            s11 = (win * pa * pa).sum() - mu1 * mu1
            s22 = (win * pb * pb).sum() - mu2 * mu2
            s12 = (win * pa * pb).sum() - mu1 * mu2
            vals.append(((2 * mu1 * mu2 + c1) * (2 * s12 + c2))
                        / ((mu1 * mu1 + mu2 * mu2 + c1) * (s11 + s22 + c2)))
    return float(np.mean(vals))


def slow_ms_ssim(a, b, weights=(0.0448, 0.2856, 0.3001, 0.2363, 0.1333)):
    """Direct MS-SSIM re-implementation used only as a test oracle."""
    from scipy import signal

    def maps(x, y):
        size = min(11, x.shape[0], x.shape[1])
        half = (size - 1) / 2.0
        t = np.arange(size) - half
        g = np.exp(-(t * t) / (2 * (1.5 * size / 11) ** 2))
        win = np.outer(g, g)
        win /= win.sum()
        c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
        mu1 = signal.convolve2d(x, win[::-1, ::-1], mode="valid")
        mu2 = signal.convolve2d(y, win[::-1, ::-1], mode="valid")
        s11 = signal.convolve2d(x * x, win[::-1, ::-1], mode="valid") - mu1 ** 2
        s22 = signal.convolve2d(y * y, win[::-1, ::-1], mode="valid") - mu2 ** 2
        s12 = signal.convolve2d(x * y, win[::-1, ::-1], mode="valid") - mu1 * mu2
        cs = (2 * s12 + c2) / (s11 + s22 + c2)
        ssim = ((2 * mu1 * mu2 + c1) / (mu1 ** 2 + mu2 ** 2 + c1)) * cs
        return ssim.mean(), cs.mean()

    x = a.astype(np.float64)
    y = b.astype(np.float64)
    mssim, mcs = [], []
    for _ in weights:
        s, c = maps(x, y)
        mssim.append(max(s, 0.0))
        mcs.append(max(c, 0.0))
        hh, ww = (x.shape[0] // 2) * 2, (x.shape[1] // 2) * 2
        x = x[:hh, :ww]
        y = y[:hh, :ww]
        x = 0.25 * (x[::2, ::2] + x[1::2, ::2] + x[::2, 1::2] + x[1::2, 1::2])
        y = 0.25 * (y[::2, ::2] + y[1::2, ::2] + y[::2, 1::2] + y[1::2, 1::2])
    out = 1.0
    for w, c in zip(weights[:-1], mcs[:-1]):
        out *= c ** w
    return out * mssim[-1] ** weights[-1]


class TestPsnrPlane:
    def test_identical_hits_cap(self, rng):
        p = random_plane(rng, 16, 16)
        assert psnr_plane(p, p) == 60.0

    def test_unit_difference(self):
        a = np.full((8, 8), 100, np.uint8)
        b = np.full((8, 8), 101, np.uint8)
        assert psnr_plane(a, b) == pytest.approx(20 * math.log10(255), abs=1e-12)

    def test_full_scale_difference(self):
        a = np.zeros((8, 8), np.uint8)
        b = np.full((8, 8), 255, np.uint8)
        assert psnr_plane(a, b) == pytest.approx(0.0, abs=1e-12)

    def test_symmetry(self, rng):
        for _ in range(20):
            a = random_plane(rng, 12, 9)
            b = random_plane(rng, 12, 9)
            assert psnr_plane(a, b) == psnr_plane(b, a)

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            psnr_plane(random_plane(rng, 8, 8), random_plane(rng, 8, 9))

    def test_configurable_cap(self, rng):
        p = random_plane(rng, 8, 8)
        assert psnr_plane(p, p, cap=100.0) == 100.0


class TestPsnrFamily:
    def test_equal_channels(self):
        assert psnr_k11(40, 40, 40, 4) == pytest.approx(40.0, abs=1e-12)
        assert psnr_k11(40, 40, 40, 6) == pytest.approx(40.0, abs=1e-12)

    def test_k6_arithmetic(self):
        assert psnr_k11(48, 30, 30, 6) == pytest.approx(43.5, abs=1e-12)

    def test_degenerate_weights(self, rng):
        ref = Yuv420Frame(PlaneBuffer(random_plane(rng, 8, 8)),
                          PlaneBuffer(random_plane(rng, 4, 4)),
                          PlaneBuffer(random_plane(rng, 4, 4)))
        dist = Yuv420Frame(PlaneBuffer(random_plane(rng, 8, 8)),
                           PlaneBuffer(random_plane(rng, 4, 4)),
                           PlaneBuffer(random_plane(rng, 4, 4)))
        rep = psnr_family(ref, dist, ChannelWeights(1.0, 0.0, 0.0))
        assert rep.cspsnr == rep.psnr_y

    def test_equal_mse_matches_channel_psnr(self):
        ref = flat_frame(8, 8, y=100, cb=100, cr=100)
        dist = flat_frame(8, 8, y=110, cb=110, cr=110)
        rep = psnr_family(ref, dist, ChannelWeights(0.7, 0.2, 0.1))
        assert rep.cspsnr == pytest.approx(rep.psnr_y, abs=1e-12)

    def test_convex_combination_bounds(self, rng):
        for _ in range(10):
            ref = Yuv420Frame(PlaneBuffer(random_plane(rng, 8, 8)),
                              PlaneBuffer(random_plane(rng, 4, 4)),
                              PlaneBuffer(random_plane(rng, 4, 4)))
            dist = Yuv420Frame(PlaneBuffer(random_plane(rng, 8, 8)),
                               PlaneBuffer(random_plane(rng, 4, 4)),
                               PlaneBuffer(random_plane(rng, 4, 4)))
            rep = psnr_family(ref, dist, ChannelWeights(0.5, 0.25, 0.25))
            lo = min(rep.psnr_y, rep.psnr_cb, rep.psnr_cr)
            hi = max(rep.psnr_y, rep.psnr_cb, rep.psnr_cr)
            assert lo - 1e-12 <= rep.psnr_611 <= hi + 1e-12
            assert lo - 1e-12 <= rep.psnr_411 <= hi + 1e-12

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            ChannelWeights(0.5, 0.5, 0.5)


class TestSsim:
    def test_identity(self, rng):
        p = textured_plane(rng, 32, 32)
        assert ssim_plane(p, p) == pytest.approx(1.0, abs=1e-12)

    def test_constant_extremes_closed_form(self):
        a = np.zeros((16, 16), np.uint8)
        b = np.full((16, 16), 255, np.uint8)
        c1 = (0.01 * 255) ** 2
        expected = c1 / (255.0 ** 2 + c1)  # variances vanish, c2 cancels
        assert ssim_plane(a, b) == pytest.approx(expected, rel=1e-9)

    def test_matches_slow_oracle_and_noise_bound(self, rng):
        ref = textured_plane(rng, 64, 64)
        noise = rng.uniform(-64, 64, ref.shape)
        dist = np.clip(ref.astype(float) + noise, 0, 255).astype(np.uint8)
        fast = ssim_plane(ref, dist)
        slow = slow_ssim(ref, dist)
        assert fast == pytest.approx(slow, abs=1e-9)
        assert fast < 0.9

    def test_too_small(self, rng):
        with pytest.raises(ValueError):
            ssim_plane(random_plane(rng, 8, 8), random_plane(rng, 8, 8))


class TestMsSsim:
    def test_identity(self, rng):
        p = textured_plane(rng, 192, 192)
        assert ms_ssim_plane(p, p) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry(self, rng):
        a = textured_plane(rng, 192, 192)
        b = np.clip(a.astype(float) + rng.normal(0, 10, a.shape),
                    0, 255).astype(np.uint8)
        assert ms_ssim_plane(a, b) == ms_ssim_plane(b, a)

    def test_matches_slow_oracle_on_blur(self, rng):
        from scipy import ndimage
        ref = textured_plane(rng, 192, 192)
        dist = np.clip(np.rint(ndimage.uniform_filter(
            ref.astype(float), 5, mode="reflect")), 0, 255).astype(np.uint8)
        fast = ms_ssim_plane(ref, dist)
        slow = slow_ms_ssim(ref, dist)
        assert fast == pytest.approx(slow, abs=1e-9)
        assert fast < 1.0

    def test_small_plane_rejected(self, rng):
        with pytest.raises(ValueError):
            ms_ssim_plane(random_plane(rng, 12, 12), random_plane(rng, 12, 12))

    def test_128_supported(self, rng):
        p = textured_plane(rng, 128, 128)
        assert ms_ssim_plane(p, p) == pytest.approx(1.0, abs=1e-9)
