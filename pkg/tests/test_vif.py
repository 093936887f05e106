import numpy as np
import pytest

from chromavqa.vif import VifConfig, vif_multiscale

from conftest import random_plane, textured_plane


def slow_vif_scales(ref, dist, sigma_nsq=2.0):
    """Brute-force per-scale information ratios, used only as a test oracle.

    Same definition, computed with explicit reflected windows instead of the
    library's separable filtering.
    """
    def gwin(n):
        s = n / 5.0
        t = np.arange(n) - (n - 1) / 2.0
        w = np.exp(-(t * t) / (2 * s * s))
        w = np.outer(w, w)
        return w / w.sum()

    def local_field(x, win):
        n = win.shape[0]
        r = (n - 1) // 2
        xp = np.pad(x, r, mode="symmetric")
        h, w = x.shape
        out = np.empty((h, w))
        for i in range(h):
            for j in range(w):
                out[i, j] = (xp[i:i + n, j:j + n] * win).sum()
        return out

    a = ref.astype(np.float64) - 128.0
    b = dist.astype(np.float64) - 128.0
    scores = []
    for s, size in enumerate((17, 9, 5, 3)):
        win = gwin(size)
        if s > 0:
            a = local_field(a, win)[::2, ::2]
            b = local_field(b, win)[::2, ::2]
        mu_a = local_field(a, win)
        mu_b = local_field(b, win)
        va = np.maximum(local_field(a * a, win) - mu_a ** 2, 0)
        vb = np.maximum(local_field(b * b, win) - mu_b ** 2, 0)
        cov = local_field(a * b, win) - mu_a * mu_b
        g = cov / (va + 1e-10)
        vn = np.maximum(vb - g * cov, 0)
        num = np.log2(1 + g * g * va / (vn + sigma_nsq)).sum()
        den = np.log2(1 + va / sigma_nsq).sum()
        scores.append(num / den if den > 0 else 1.0)
    return scores


class TestIdentity:
    def test_all_scales_one(self, rng):
        p = textured_plane(rng, 96, 96)
        v = vif_multiscale(p, p)
        for s in (v.s0, v.s1, v.s2, v.s3, v.overall):
            assert s == pytest.approx(1.0, abs=1e-9)

    def test_constant_planes(self):
        p = np.full((64, 64), 77, np.uint8)
        v = vif_multiscale(p, p)
        assert (v.s0, v.s1, v.s2, v.s3, v.overall) == (1.0,) * 5


class TestOracle:
    def test_matches_brute_force(self, rng):
        ref = textured_plane(rng, 48, 48)
        noise = rng.uniform(-32, 32, ref.shape)
        dist = np.clip(ref.astype(float) + noise, 0, 255).astype(np.uint8)
        mine = vif_multiscale(ref, dist)
        oracle = slow_vif_scales(ref, dist)
        for got, want in zip((mine.s0, mine.s1, mine.s2, mine.s3), oracle):
            assert got == pytest.approx(want, abs=1e-9)

    def test_coarse_scales_less_damaged(self, rng):
        ref = textured_plane(rng, 128, 128)
        noise = rng.uniform(-32, 32, ref.shape)
        dist = np.clip(ref.astype(float) + noise, 0, 255).astype(np.uint8)
        v = vif_multiscale(ref, dist)
        assert v.s3 > v.s0
        oracle = slow_vif_scales(ref[:48, :48], dist[:48, :48])
        assert oracle[3] > oracle[0]


class TestProperties:
    def test_monotone_in_noise_amplitude(self, rng):
        ref = textured_plane(rng, 96, 96)
        unit = rng.uniform(-1, 1, ref.shape)
        prev = None
        for amp in (4, 8, 16, 32, 64):
            dist = np.clip(ref.astype(float) + amp * unit, 0, 255).astype(np.uint8)
            v = vif_multiscale(ref, dist)
            scales = np.array([v.s0, v.s1, v.s2, v.s3])
            if prev is not None:
                assert np.all(scales <= prev + 1e-9), amp
            prev = scales

    def test_offset_invariance(self, rng):
        base = textured_plane(rng, 64, 64, lo=90, hi=160, noise=5.0)
        base = np.clip(base, 70, 180)  # headroom so offsets cannot wrap
        noisy = np.clip(base.astype(float) + rng.uniform(-10, 10, base.shape),
                        70, 180)
        for off in (-40, 25):
            v0 = vif_multiscale(base, noisy.astype(np.uint8))
            v1 = vif_multiscale((base.astype(float) + off).astype(np.uint8),
                                (noisy + off).astype(np.uint8))
            for a, b in zip((v0.s0, v0.s1, v0.s2, v0.s3),
                            (v1.s0, v1.s1, v1.s2, v1.s3)):
                assert a == pytest.approx(b, abs=1e-9)

    def test_fuzz_no_nan_inf(self, rng):
        shapes = [(32, 32), (33, 47), (64, 32)]
        extremes = [np.zeros, np.ones]
        for _ in range(15):
            h, w = shapes[int(rng.integers(len(shapes)))]
            pick = int(rng.integers(4))
            if pick == 0:
                a = np.zeros((h, w), np.uint8)
            elif pick == 1:
                a = np.full((h, w), 255, np.uint8)
            else:
                a = random_plane(rng, h, w)
            b = random_plane(rng, h, w) if rng.random() < 0.7 else np.full(
                (h, w), int(rng.integers(256)), np.uint8)
            v = vif_multiscale(a, b)
            for s in (v.s0, v.s1, v.s2, v.s3, v.overall):
                assert np.isfinite(s)


class TestContracts:
    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            vif_multiscale(random_plane(rng, 32, 32), random_plane(rng, 32, 33))

    def test_too_small(self, rng):
        with pytest.raises(ValueError, match="too small"):
            vif_multiscale(random_plane(rng, 24, 24), random_plane(rng, 24, 24))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            VifConfig(sigma_noise_sq=0.0)
        with pytest.raises(ValueError):
            VifConfig(window_sizes=(17, 9, 5, 4))
        with pytest.raises(ValueError):
            VifConfig(window_sizes=(17, 9, 5))
