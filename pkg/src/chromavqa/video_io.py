"""Raw video ingestion and pixel-domain helpers.

Supports 8-bit YUV4MPEG2 ("y4m") streams with 4:2:0 sampling and headerless
planar YUV420 files with externally supplied dimensions. Also provides BT.709
limited-range conversion to RGB444 and a synthetic chroma degradation used to
simulate coarse chroma quantization without an encoder in the loop.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Optional

import numpy as np


class VideoFormatError(ValueError):
    """Malformed or unsupported input stream."""


def _as_array(samples, width: int, height: int) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.uint8)
    if arr.ndim == 1:
        arr = arr.reshape(height, width)
    if arr.shape != (height, width):
        raise ValueError(
            f"sample buffer shape {arr.shape} does not match {width}x{height}"
        )
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PlaneBuffer:
    """One 8-bit image plane, row-major."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("plane must be a non-empty 2D array")
        if arr.dtype != np.uint8:
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def from_samples(cls, samples, width: int, height: int) -> "PlaneBuffer":
        if width < 1 or height < 1:
            raise ValueError("plane dimensions must be positive")
        return cls(_as_array(samples, width, height))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def as_float(self) -> np.ndarray:
        return self.data.astype(np.float64)


def plane_data(plane) -> np.ndarray:
    """Accept a PlaneBuffer or bare 2D array, return float64 samples."""
    if isinstance(plane, PlaneBuffer):
        return plane.as_float()
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected a 2D plane")
    return arr


@dataclass(frozen=True)
class Yuv420Frame:
    """One video frame: full-resolution luma, half-resolution chroma planes."""

    y: PlaneBuffer
    cb: PlaneBuffer
    cr: PlaneBuffer

    def __post_init__(self):
        w, h = self.y.width, self.y.height
        if w % 2 or h % 2:
            raise ValueError(f"luma dimensions must be even, got {w}x{h}")
        for name, p in (("cb", self.cb), ("cr", self.cr)):
            if (p.width, p.height) != (w // 2, h // 2):
                raise ValueError(
                    f"{name} plane is {p.width}x{p.height}, expected "
                    f"{w // 2}x{h // 2} for {w}x{h} luma"
                )

    @property
    def width(self) -> int:
        return self.y.width

    @property
    def height(self) -> int:
        return self.y.height

    @classmethod
    def from_arrays(cls, y, cb, cr) -> "Yuv420Frame":
        return cls(PlaneBuffer(np.asarray(y)), PlaneBuffer(np.asarray(cb)),
                   PlaneBuffer(np.asarray(cr)))


@dataclass(frozen=True)
class RgbFrame:
    """Full-resolution RGB444 frame, three equal-size 8-bit planes."""

    r: PlaneBuffer
    g: PlaneBuffer
    b: PlaneBuffer

    def __post_init__(self):
        dims = {(p.width, p.height) for p in (self.r, self.g, self.b)}
        if len(dims) != 1:
            raise ValueError("R, G, B planes must share dimensions")


@dataclass(frozen=True)
class VideoSequence:
    """Ordered frames of identical geometry, with optional frame rate."""

    frames: tuple
    frame_rate: Optional[float] = None

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("sequence must contain at least one frame")
        w, h = frames[0].width, frames[0].height
        for f in frames:
            if (f.width, f.height) != (w, h):
                raise ValueError("all frames must share identical dimensions")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __getitem__(self, i) -> Yuv420Frame:
        return self.frames[i]

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height


def _frame_from_planar(buf: bytes, width: int, height: int) -> Yuv420Frame:
    ysize = width * height
    csize = (width // 2) * (height // 2)
    y = np.frombuffer(buf, dtype=np.uint8, count=ysize).reshape(height, width)
    cb = np.frombuffer(buf, dtype=np.uint8, count=csize, offset=ysize)
    cr = np.frombuffer(buf, dtype=np.uint8, count=csize, offset=ysize + csize)
    half = (height // 2, width // 2)
    return Yuv420Frame.from_arrays(y, cb.reshape(half), cr.reshape(half))


_SUPPORTED_C420 = {"420", "420jpeg", "420mpeg2", "420paldv"}


def read_y4m(stream) -> VideoSequence:
    """Parse a YUV4MPEG2 stream into a sequence of 8-bit 4:2:0 frames.

    Only C420-family 8-bit colorspaces are accepted; anything else (including
    10-bit variants) raises VideoFormatError.
    """
    fh = _binary_handle(stream)
    header = _read_line(fh)
    if header is None or not header.startswith(b"YUV4MPEG2"):
        raise VideoFormatError("stream does not start with a YUV4MPEG2 header")

    width = height = None
    frame_rate = None
    colorspace = "420"
    for token in header.split()[1:]:
        tag, val = chr(token[0]), token[1:].decode("ascii", "replace")
        if tag == "W":
            width = int(val)
        elif tag == "H":
            height = int(val)
        elif tag == "F":
            num, _, den = val.partition(":")
            if den and int(den) != 0:
                frame_rate = int(num) / int(den)
        elif tag == "C":
            colorspace = val
    if width is None or height is None:
        raise VideoFormatError("y4m header is missing W or H token")
    if colorspace not in _SUPPORTED_C420:
        raise VideoFormatError(
            f"unsupported colorspace C{colorspace}: only 8-bit 4:2:0 is handled"
        )
    if width % 2 or height % 2:
        raise VideoFormatError("4:2:0 requires even frame dimensions")

    frame_bytes = width * height * 3 // 2
    frames = []
    while True:
        marker = _read_line(fh)
        if marker is None:
            break
        if not marker.startswith(b"FRAME"):
            raise VideoFormatError("expected FRAME marker in y4m stream")
        payload = fh.read(frame_bytes)
        if len(payload) != frame_bytes:
            raise VideoFormatError(
                f"truncated frame payload: expected {frame_bytes} bytes, "
                f"got {len(payload)}"
            )
        frames.append(_frame_from_planar(payload, width, height))
    if not frames:
        raise VideoFormatError("y4m stream contains no frames")
    return VideoSequence(tuple(frames), frame_rate=frame_rate)


def _binary_handle(stream) -> BinaryIO:
    if isinstance(stream, (bytes, bytearray)):
        return io.BytesIO(stream)
    return stream


def _read_line(fh: BinaryIO) -> Optional[bytes]:
    """Read up to a newline; None on clean EOF, error on oversized garbage."""
    chunks = []
    while True:
        c = fh.read(1)
        if not c:
            if chunks:
                raise VideoFormatError("truncated record at end of stream")
            return None
        if c == b"\n":
            return b"".join(chunks)
        chunks.append(c)
        if len(chunks) > 4096:
            raise VideoFormatError("unterminated header line")


def read_raw_yuv(stream, width: int, height: int) -> VideoSequence:
    """Read headerless planar YUV420 frames until end of stream."""
    if width <= 0 or height <= 0 or width % 2 or height % 2:
        raise VideoFormatError(
            f"dimensions must be positive and even, got {width}x{height}"
        )
    data = _binary_handle(stream).read()
    frame_bytes = width * height * 3 // 2
    if len(data) == 0 or len(data) % frame_bytes:
        raise VideoFormatError(
            f"stream length {len(data)} is not a multiple of the "
            f"{frame_bytes}-byte frame size"
        )
    frames = [
        _frame_from_planar(data[off:off + frame_bytes], width, height)
        for off in range(0, len(data), frame_bytes)
    ]
    return VideoSequence(tuple(frames))


def write_raw_yuv(seq: VideoSequence) -> bytes:
    """Serialize a sequence back to headerless planar YUV420 bytes."""
    parts = []
    for f in seq:
        parts.append(f.y.data.tobytes())
        parts.append(f.cb.data.tobytes())
        parts.append(f.cr.data.tobytes())
    return b"".join(parts)


# BT.709 limited range: Y in [16, 235], Cb/Cr in [16, 240].
_Y_GAIN = 255.0 / 219.0
_C_GAIN = 255.0 / 224.0
_KR, _KB = 0.2126, 0.0722
_KG = 1.0 - _KR - _KB
_R_CR = _C_GAIN * 2.0 * (1.0 - _KR)
_B_CB = _C_GAIN * 2.0 * (1.0 - _KB)
_G_CB = -_C_GAIN * 2.0 * (1.0 - _KB) * _KB / _KG
_G_CR = -_C_GAIN * 2.0 * (1.0 - _KR) * _KR / _KG


def yuv420_to_rgb444(frame: Yuv420Frame) -> RgbFrame:
    """Convert to RGB444: nearest-neighbor chroma upsampling, BT.709 limited.

    Outputs are rounded to the nearest integer and clamped to [0, 255].
    """
    y = frame.y.as_float()
    cb = np.repeat(np.repeat(frame.cb.as_float(), 2, axis=0), 2, axis=1)
    cr = np.repeat(np.repeat(frame.cr.as_float(), 2, axis=0), 2, axis=1)

    yp = _Y_GAIN * (y - 16.0)
    cbp = cb - 128.0
    crp = cr - 128.0
    r = yp + _R_CR * crp
    g = yp + _G_CB * cbp + _G_CR * crp
    b = yp + _B_CB * cbp

    def q(x):
        return PlaneBuffer(np.clip(np.rint(x), 0, 255).astype(np.uint8))

    return RgbFrame(q(r), q(g), q(b))


def quantize_plane(plane: np.ndarray, step: int, pivot: float = 128.0) -> np.ndarray:
    """Mid-tread uniform quantizer around a pivot; ties round half-to-even."""
    if step < 1:
        raise ValueError("quantizer step must be >= 1")
    x = plane.astype(np.float64)
    q = np.rint((x - pivot) / step) * step + pivot
    return np.clip(q, 0, 255).astype(np.uint8)


def degrade_chroma(frame: Yuv420Frame, step: int) -> Yuv420Frame:
    """Quantize both chroma planes toward the neutral axis; luma untouched.

    step=1 is the identity; large steps collapse chroma to 128 (desaturation),
    mimicking the energy loss seen under coarse chroma quantization.
    """
    if step < 1:
        raise ValueError("degradation step must be >= 1")
    if step == 1:
        return frame
    return Yuv420Frame(
        frame.y,
        PlaneBuffer(quantize_plane(frame.cb.data, step)),
        PlaneBuffer(quantize_plane(frame.cr.data, step)),
    )


def degrade_chroma_sequence(seq: VideoSequence, step: int) -> VideoSequence:
    return VideoSequence(tuple(degrade_chroma(f, step) for f in seq),
                         frame_rate=seq.frame_rate)
