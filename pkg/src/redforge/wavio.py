"""Minimal PCM WAV reader/writer.

Supports the three encodings the ingestion contract requires: 16-bit and
24-bit integer PCM and 32-bit IEEE float, little-endian RIFF only. Unknown
chunks are skipped. Everything else (compressed formats, WAVE_FORMAT_EXTENSIBLE,
big-endian RIFX) is rejected with a clear error.

Samples are exchanged as float64 in [-1, 1]; integer encodings are scaled by
2**(bits-1).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

_FMT_PCM = 1
_FMT_IEEE_FLOAT = 3


class WavFormatError(ValueError):
    """Raised for files this reader does not understand."""


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a WAV file.

    Returns
    -------
    (samples, sample_rate) : samples has shape [n] for mono or [n, channels].
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            payload = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise WavFormatError(f"{path}: missing fmt/data chunk")
    if len(fmt) < 16:
        raise WavFormatError(f"{path}: truncated fmt chunk")

    audio_format, channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if channels < 1:
        raise WavFormatError(f"{path}: invalid channel count {channels}")

    if audio_format == _FMT_PCM and bits == 16:
        samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    elif audio_format == _FMT_PCM and bits == 24:
        raw = np.frombuffer(payload, dtype=np.uint8)
        raw = raw[: (len(raw) // 3) * 3].reshape(-1, 3).astype(np.int64)
        vals = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        vals = np.where(vals >= 1 << 23, vals - (1 << 24), vals)
        samples = vals.astype(np.float64) / float(1 << 23)
    elif audio_format == _FMT_IEEE_FLOAT and bits == 32:
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    else:
        raise WavFormatError(f"{path}: unsupported format (code {audio_format}, {bits}-bit)")

    if channels > 1:
        samples = samples[: (len(samples) // channels) * channels].reshape(-1, channels)
    return samples, sample_rate


def write_wav(path, samples: np.ndarray, sample_rate: int, encoding: str = "pcm16") -> None:
    """Write mono or multichannel samples as a WAV file.

    ``encoding`` is one of ``pcm16``, ``pcm24``, ``float32``.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim == 1:
        channels = 1
    elif arr.ndim == 2:
        channels = arr.shape[1]
    else:
        raise ValueError(f"samples must be 1-D or 2-D, got shape {arr.shape}")
    flat = arr.reshape(-1)

    if encoding == "pcm16":
        fmt_code, bits = _FMT_PCM, 16
        clipped = np.clip(np.rint(flat * 32768.0), -32768, 32767).astype("<i2")
        payload = clipped.tobytes()
    elif encoding == "pcm24":
        fmt_code, bits = _FMT_PCM, 24
        vals = np.clip(np.rint(flat * float(1 << 23)), -(1 << 23), (1 << 23) - 1).astype(np.int64)
        vals = np.where(vals < 0, vals + (1 << 24), vals)
        b = np.empty((len(vals), 3), dtype=np.uint8)
        b[:, 0] = vals & 0xFF
        b[:, 1] = (vals >> 8) & 0xFF
        b[:, 2] = (vals >> 16) & 0xFF
        payload = b.tobytes()
    elif encoding == "float32":
        fmt_code, bits = _FMT_IEEE_FLOAT, 32
        payload = flat.astype("<f4").tobytes()
    else:
        raise ValueError(f"unknown encoding {encoding!r}")

    block_align = channels * bits // 8
    byte_rate = sample_rate * block_align
    fmt = struct.pack("<HHIIHH", fmt_code, channels, sample_rate, byte_rate, block_align, bits)
    pad = b"\x00" if len(payload) & 1 else b""
    riff_size = 4 + (8 + len(fmt)) + (8 + len(payload) + len(pad))
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", riff_size) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
        fh.write(b"data" + struct.pack("<I", len(payload)) + payload + pad)


def to_mono(samples: np.ndarray) -> np.ndarray:
    """Downmix [n, channels] to [n] by averaging; mono passes through."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim == 1:
        return arr
    return arr.mean(axis=1)
