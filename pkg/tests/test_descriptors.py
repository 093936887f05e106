import math

import numpy as np
import pytest

from chromavqa.descriptors import (colorfulness, motion_ti, si_ti_cf,
                                   spatial_information, temporal_information)
from chromavqa.video_io import (PlaneBuffer, RgbFrame, VideoSequence,
                                Yuv420Frame)

from conftest import flat_frame, textured_sequence


def rgb_constant(w, h, r, g, b):
    return RgbFrame(PlaneBuffer(np.full((h, w), r, np.uint8)),
                    PlaneBuffer(np.full((h, w), g, np.uint8)),
                    PlaneBuffer(np.full((h, w), b, np.uint8)))


def seq_of(*frames):
    return VideoSequence(tuple(frames))


class TestMotion:
    def test_static_sequence(self):
        f = flat_frame(8, 8, y=100)
        assert motion_ti(seq_of(f, f, f)) == [0.0, 0.0, 0.0]

    def test_uniform_step(self):
        a = flat_frame(8, 8, y=100)
        b = flat_frame(8, 8, y=101)
        assert motion_ti(seq_of(a, b)) == [0.0, 1.0]

    def test_single_frame(self):
        assert motion_ti(seq_of(flat_frame(8, 8))) == [0.0]


class TestSiTiCf:
    def test_constant_gray_video(self):
        f = flat_frame(16, 16, y=128)
        d = si_ti_cf(seq_of(f, f))
        assert d.si == 0.0
        assert d.ti == 0.0
        assert d.cf == 0.0

    def test_static_checkerboard(self):
        # 4x4 blocks so the Sobel support straddles block edges
        idx = np.add.outer(np.arange(16) // 4, np.arange(16) // 4)
        y = np.where(idx % 2 == 0, 255, 0).astype(np.uint8)
        f = Yuv420Frame(PlaneBuffer(y),
                        PlaneBuffer(np.full((8, 8), 128, np.uint8)),
                        PlaneBuffer(np.full((8, 8), 128, np.uint8)))
        d = si_ti_cf(seq_of(f, f))
        assert d.ti == 0.0
        assert d.si > 0.0

    def test_pure_red_colorfulness(self):
        # sigma terms vanish on constant planes; mu_rg = 255, mu_yb = 127.5
        expected = 0.3 * math.sqrt(255.0 ** 2 + 127.5 ** 2)
        cf = colorfulness(rgb_constant(8, 8, 255, 0, 0))
        assert cf == pytest.approx(expected, abs=1e-12)

    def test_cf_zero_iff_achromatic(self, rng):
        gray = rgb_constant(8, 8, 77, 77, 77)
        assert colorfulness(gray) == 0.0
        tinted = rgb_constant(8, 8, 78, 77, 77)
        assert colorfulness(tinted) > 0.0

    def test_si_ti_luma_offset_invariance(self, rng):
        def mid_frame():
            y = rng.integers(80, 160, (32, 32)).astype(np.uint8)
            c = np.full((16, 16), 128, np.uint8)
            return Yuv420Frame(PlaneBuffer(y), PlaneBuffer(c), PlaneBuffer(c))

        seq = seq_of(*(mid_frame() for _ in range(3)))
        shifted = VideoSequence(tuple(
            Yuv420Frame(PlaneBuffer((f.y.as_float() + 20).astype(np.uint8)),
                        f.cb, f.cr)
            for f in seq))
        assert spatial_information(seq) == pytest.approx(
            spatial_information(shifted), abs=1e-9)
        assert temporal_information(seq) == pytest.approx(
            temporal_information(shifted), abs=1e-9)

    def test_motion_matches_fusion_source(self, rng):
        from chromavqa.fusion import extract_feature_vector
        ref = textured_sequence(rng, 64, 64, 3)
        vecs = extract_feature_vector(ref, ref, 8)
        series = motion_ti(ref)
        assert [v.ti for v in vecs] == series
