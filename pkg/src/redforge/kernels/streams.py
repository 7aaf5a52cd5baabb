"""Multi-stream token scheduling: the delay pattern that staggers parallel
codebook streams, its exact inverse, and the lookahead plan that aligns a
slower semantic stream to a faster acoustic stream.

Conventions: pad_id defaults to the first integer outside the codebook range
(``n_codes``); the canonical acoustic delays are (0, 1, 2, 3); the plan entry
for acoustic positions before the lookahead horizon is the BEGIN sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_DELAYS = (0, 1, 2, 3)
BEGIN = -1  # lookahead padding source: a dedicated "begin" embedding slot


@dataclass(frozen=True)
class TokenGrid:
    """A delay-patterned multi-stream integer token matrix."""

    streams: np.ndarray
    delays: tuple[int, ...]
    pad_id: int

    def __post_init__(self):
        arr = np.asarray(self.streams)
        if arr.ndim != 2:
            raise ValueError(f"streams must be 2-D, got shape {arr.shape}")
        object.__setattr__(self, "streams", arr.astype(np.int64))
        object.__setattr__(self, "delays", tuple(int(d) for d in self.delays))
        if len(self.delays) != self.streams.shape[0]:
            raise ValueError("one delay per stream required")
        if any(d < 0 for d in self.delays):
            raise ValueError("delays must be non-negative")

    @property
    def n_streams(self) -> int:
        return self.streams.shape[0]

    @property
    def width(self) -> int:
        return self.streams.shape[1]

    def validate_range(self, n_codes: int) -> None:
        ok = ((self.streams >= 0) & (self.streams < n_codes)) | (self.streams == self.pad_id)
        if not ok.all():
            k, t = np.argwhere(~ok)[0]
            raise ValueError(f"token {self.streams[k, t]} at (stream {k}, pos {t}) out of range")


class GridCorruptionError(ValueError):
    """A delay-patterned grid violates its own pad layout."""


def delay_encode(streams, delays, pad_id: int) -> TokenGrid:
    """Stagger streams: output[k][t] = input[k][t - delay_k], pad elsewhere.

    Output width is T + max(delay).
    """
    arr = np.asarray(streams, dtype=np.int64)
    if arr.ndim != 2:
        raise ValueError(f"streams must be 2-D, got shape {arr.shape}")
    delays = tuple(int(d) for d in delays)
    if len(delays) != arr.shape[0]:
        raise ValueError("one delay per stream required")
    if any(d < 0 for d in delays):
        raise ValueError("delays must be non-negative")
    n, t_len = arr.shape
    width = t_len + (max(delays) if delays else 0)
    out = np.full((n, width), pad_id, dtype=np.int64)
    for k, d in enumerate(delays):
        out[k, d : d + t_len] = arr[k]
    return TokenGrid(streams=out, delays=delays, pad_id=pad_id)


def delay_decode(grid: TokenGrid) -> np.ndarray:
    """Exact inverse of :func:`delay_encode`; raises on pad-layout corruption."""
    max_delay = max(grid.delays) if grid.delays else 0
    t_len = grid.width - max_delay
    if t_len < 0:
        raise GridCorruptionError("grid narrower than its maximum delay")
    out = np.empty((grid.n_streams, t_len), dtype=np.int64)
    for k, d in enumerate(grid.delays):
        row = grid.streams[k]
        data = row[d : d + t_len]
        bad = np.flatnonzero(data == grid.pad_id)
        if bad.size:
            raise GridCorruptionError(
                f"pad token inside data region (stream {k}, pos {int(bad[0]) + d})"
            )
        pad_cells = np.concatenate((row[:d], row[d + t_len :]))
        bad = np.flatnonzero(pad_cells != grid.pad_id)
        if bad.size:
            pos = int(bad[0]) if bad[0] < d else int(bad[0]) + t_len
            raise GridCorruptionError(f"token in mandated pad cell (stream {k}, pos {pos})")
        out[k] = data
    return out


def lookahead_align(semantic_len: int, acoustic_len: int, lookahead: int, upsample: int) -> np.ndarray:
    """Index plan pairing each acoustic position i with semantic frame
    floor((i - lookahead) / upsample), or BEGIN for i < lookahead.

    ``upsample`` is the repetition factor aligning the slower semantic frame
    rate to the acoustic one (2 for 40 ms semantic over 20 ms acoustic frames).
    """
    if lookahead < 0:
        raise ValueError("lookahead must be non-negative")
    if upsample < 1 or int(upsample) != upsample:
        raise ValueError("upsample must be a positive integer")
    if acoustic_len > semantic_len * upsample:
        raise ValueError(
            f"acoustic length {acoustic_len} exceeds upsampled semantic coverage "
            f"({semantic_len} * {upsample})"
        )
    plan = np.empty(acoustic_len, dtype=np.int64)
    for i in range(acoustic_len):
        plan[i] = BEGIN if i < lookahead else (i - lookahead) // upsample
    return plan
