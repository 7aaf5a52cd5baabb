"""Clip&Shuffle: strip short-time content from an utterance before global
embedding extraction by clipping a random span and permuting its 1-second
slices."""

from __future__ import annotations

import numpy as np

from ..validation import check_in_range, check_positive


def clip_and_shuffle(
    frames,
    fraction: float,
    slice_len: float = 1.0,
    seed: int = 0,
    frame_rate: float = 100.0,
) -> np.ndarray:
    """Select a contiguous span covering ``fraction`` of the utterance, cut it
    into ``slice_len``-second slices, and permute them.

    ``frames`` is a [T, D] feature matrix at ``frame_rate`` frames per second
    (default 100, i.e. 10 ms frames). The span start is drawn uniformly and the
    permutation is drawn from the given seed; the trailing partial slice is
    kept intact at its permuted position.
    """
    x = np.asarray(frames, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError(f"frames must be 1-D or 2-D, got shape {x.shape}")
    check_in_range(fraction, 0.25, 0.75, "fraction")
    check_positive(slice_len, "slice_len")
    check_positive(frame_rate, "frame_rate")

    total = len(x)
    slice_frames = max(1, int(round(slice_len * frame_rate)))
    if total < slice_frames:
        raise ValueError(
            f"utterance of {total} frames is shorter than one {slice_frames}-frame slice"
        )

    rng = np.random.default_rng(seed)
    span = max(slice_frames, int(round(fraction * total)))
    span = min(span, total)
    start = int(rng.integers(0, total - span + 1))
    selected = x[start : start + span]

    slices = [selected[lo : lo + slice_frames] for lo in range(0, span, slice_frames)]
    order = rng.permutation(len(slices))
    return np.concatenate([slices[i] for i in order], axis=0)
