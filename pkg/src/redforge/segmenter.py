"""Frame decisions to merged, padded, duration-filtered segments.

The stage order is merge -> extend -> re-merge -> duration filter, so the
published duration bound holds on every emitted segment. Merging coalesces
gaps strictly shorter than the threshold; the re-merge after boundary
extension additionally coalesces intervals that exactly touch (gap <= 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .dsp import FrameSpec, frame_signal
from .validation import as_mono_f64, check_intervals

Interval = tuple[float, float]


@dataclass(frozen=True)
class VadTrack:
    """Frame-wise speech/non-speech decisions."""

    decisions: np.ndarray
    frame_shift: float = 0.025
    asset_duration: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "decisions", np.asarray(self.decisions, dtype=bool))
        if self.frame_shift <= 0:
            raise ValueError("frame_shift must be positive")
        expected = math.ceil(self.asset_duration / self.frame_shift)
        if abs(len(self.decisions) - expected) > 1:
            raise ValueError(
                f"{len(self.decisions)} decisions inconsistent with duration "
                f"{self.asset_duration}s at shift {self.frame_shift}s (expected ~{expected})"
            )


@dataclass(frozen=True)
class SegmentationPolicy:
    """Merging, padding, and duration bounds for emitted segments."""

    merge_gap: float = 1.0
    boundary_pad: float = 0.3
    min_dur: float = 2.0
    max_dur: float = 20.0

    def __post_init__(self):
        for name in ("merge_gap", "boundary_pad", "min_dur", "max_dur"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not self.min_dur < self.max_dur:
            raise ValueError(f"min_dur {self.min_dur} must be < max_dur {self.max_dur}")


def decisions_to_intervals(track: VadTrack) -> list[Interval]:
    """Maximal runs of true frames as [first*shift, (last+1)*shift] intervals."""
    dec = track.decisions
    if len(dec) == 0 or not dec.any():
        return []
    padded = np.concatenate(([False], dec, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    starts, ends = edges[0::2], edges[1::2]
    duration = track.asset_duration if track.asset_duration > 0 else len(dec) * track.frame_shift
    out = []
    for first, stop in zip(starts, ends):
        begin = first * track.frame_shift
        end = min(stop * track.frame_shift, duration)
        if begin < end:
            out.append((begin, end))
    return out


def merge_adjacent(intervals, merge_gap: float) -> list[Interval]:
    """Coalesce consecutive intervals whose silence gap is strictly below ``merge_gap``."""
    ivs = check_intervals(intervals)
    if not ivs:
        return []
    merged = [ivs[0]]
    for start, end in ivs[1:]:
        if start - merged[-1][1] < merge_gap:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def _merge_touching(intervals: list[Interval]) -> list[Interval]:
    # gap <= 0: padding-created overlaps and exact touches become one interval
    if not intervals:
        return []
    merged = [intervals[0]]
    for start, end in intervals[1:]:
        if start - merged[-1][1] <= 0:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


def extend_boundaries(intervals, pad: float, asset_duration: float) -> list[Interval]:
    """Grow each interval by ``pad`` on both sides, clamped to [0, asset_duration]."""
    ivs = check_intervals(intervals)
    padded = [(max(0.0, s - pad), min(asset_duration, e + pad)) for s, e in ivs]
    padded = [(s, e) for s, e in padded if s < e]
    return _merge_touching(padded)


def filter_duration(intervals, policy: SegmentationPolicy):
    """Split intervals into (kept, rejected); bounds are inclusive."""
    kept, rejected = [], []
    for iv in check_intervals(intervals):
        length = iv[1] - iv[0]
        if policy.min_dur <= length <= policy.max_dur:
            kept.append(iv)
        else:
            rejected.append((iv, "duration"))
    return kept, rejected


def segment_track(track: VadTrack, policy: SegmentationPolicy):
    """Full chain: decisions -> merge -> extend -> re-merge -> duration filter."""
    intervals = decisions_to_intervals(track)
    intervals = merge_adjacent(intervals, policy.merge_gap)
    duration = track.asset_duration if track.asset_duration > 0 else len(track.decisions) * track.frame_shift
    intervals = extend_boundaries(intervals, policy.boundary_pad, duration)
    return filter_duration(intervals, policy)


def energy_vad(
    samples,
    spec: FrameSpec | None = None,
    threshold_db: float = 12.0,
    sample_rate: int = 16000,
) -> VadTrack:
    """Baseline energy VAD: a frame is speech iff its power exceeds the noise
    floor (10th-percentile frame power) by ``threshold_db``.

    Frames with exactly zero energy are never speech. The default spec is
    non-overlapping 25 ms rectangular frames.
    """
    x = as_mono_f64(samples)
    if len(x) == 0:
        raise ValueError("cannot run VAD on an empty signal")
    if spec is None:
        spec = FrameSpec.from_seconds(0.025, 0.025, sample_rate, window="rectangular")
    frames = frame_signal(x, spec)
    power = np.mean(frames**2, axis=1)
    floor = np.percentile(power, 10)
    threshold = floor * 10.0 ** (threshold_db / 10.0)
    decisions = power > threshold
    return VadTrack(
        decisions=decisions,
        frame_shift=spec.frame_shift / sample_rate,
        asset_duration=len(x) / sample_rate,
    )


class EnergyVad(BaseEstimator):
    """Estimator facade over :func:`energy_vad` so the VAD composes with
    sklearn-style pipelines and parameter search."""

    def __init__(self, threshold_db: float = 12.0, frame_s: float = 0.025, sample_rate: int = 16000):
        self.threshold_db = threshold_db
        self.frame_s = frame_s
        self.sample_rate = sample_rate

    def fit(self, X=None, y=None):
        return self

    def predict(self, samples) -> np.ndarray:
        return self.track(samples).decisions

    def track(self, samples) -> VadTrack:
        spec = FrameSpec.from_seconds(self.frame_s, self.frame_s, self.sample_rate, window="rectangular")
        return energy_vad(samples, spec, self.threshold_db, self.sample_rate)
