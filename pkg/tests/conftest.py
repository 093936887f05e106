import numpy as np
import pytest

from chromavqa.video_io import PlaneBuffer, VideoSequence, Yuv420Frame


def random_plane(rng, h, w):
    return rng.integers(0, 256, (h, w)).astype(np.uint8)


def textured_plane(rng, h, w, block=8, noise=12.0, lo=0.0, hi=255.0):
    """Correlated texture: low-res field upsampled plus fine noise."""
    small = rng.uniform(lo, hi, (max(h // block, 1), max(w // block, 1)))
    big = np.repeat(np.repeat(small, block, axis=0), block, axis=1)[:h, :w]
    if big.shape != (h, w):
        big = np.pad(big, ((0, h - big.shape[0]), (0, w - big.shape[1])),
                     mode="edge")
    big = big + rng.normal(0.0, noise, (h, w))
    return np.clip(np.rint(big), 0, 255).astype(np.uint8)


def textured_frame(rng, w, h, chroma_lo=64.0, chroma_hi=192.0):
    """Frame with textured luma and mid-range chroma structure."""
    return Yuv420Frame(
        PlaneBuffer(textured_plane(rng, h, w)),
        PlaneBuffer(textured_plane(rng, h // 2, w // 2, block=4,
                                   lo=chroma_lo, hi=chroma_hi, noise=6.0)),
        PlaneBuffer(textured_plane(rng, h // 2, w // 2, block=4,
                                   lo=chroma_lo, hi=chroma_hi, noise=6.0)),
    )


def textured_sequence(rng, w, h, n_frames, drift=3.0):
    """Temporally coherent sequence: a base frame plus per-frame jitter."""
    base_y = textured_plane(rng, h, w).astype(np.float64)
    base_cb = textured_plane(rng, h // 2, w // 2, block=4, lo=64, hi=192,
                             noise=6.0).astype(np.float64)
    base_cr = textured_plane(rng, h // 2, w // 2, block=4, lo=64, hi=192,
                             noise=6.0).astype(np.float64)
    frames = []
    for _ in range(n_frames):
        jy = np.clip(base_y + rng.normal(0, drift, base_y.shape), 0, 255)
        jcb = np.clip(base_cb + rng.normal(0, drift, base_cb.shape), 0, 255)
        jcr = np.clip(base_cr + rng.normal(0, drift, base_cr.shape), 0, 255)
        frames.append(Yuv420Frame(
            PlaneBuffer(np.rint(jy).astype(np.uint8)),
            PlaneBuffer(np.rint(jcb).astype(np.uint8)),
            PlaneBuffer(np.rint(jcr).astype(np.uint8)),
        ))
    return VideoSequence(tuple(frames), frame_rate=24.0)


def flat_frame(w, h, y=128, cb=128, cr=128):
    return Yuv420Frame(
        PlaneBuffer(np.full((h, w), y, dtype=np.uint8)),
        PlaneBuffer(np.full((h // 2, w // 2), cb, dtype=np.uint8)),
        PlaneBuffer(np.full((h // 2, w // 2), cr, dtype=np.uint8)),
    )


def y4m_bytes(frames, width, height, rate="24:1", colorspace="C420"):
    header = f"YUV4MPEG2 W{width} H{height} F{rate} {colorspace}\n".encode()
    chunks = [header]
    for f in frames:
        chunks.append(b"FRAME\n")
        chunks.append(bytes(f))
    return b"".join(chunks)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
