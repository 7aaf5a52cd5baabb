"""Deterministic spectral primitives.

Framing, windowed power spectra, mel filterbank features, and the spectral
roll-off criterion used by the bandwidth filter. All functions are pure and
operate on immutable numpy buffers.

Power spectra are one-sided. ``PowerSpectrum.bins[k]`` holds
``|X[k]|**2 / fft_size`` so an impulse yields a flat spectrum; the energy of
the mirrored negative-frequency half is accounted for by
``PowerSpectrum.total_energy`` and the weighted cumulative sums used by
``rolloff_frequency``, which makes the total exactly Parseval-consistent with
the windowed frame energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import (
    as_mono_f64,
    check_in_range,
    check_positive,
    check_power_of_two,
)

WINDOWS = ("hann", "rectangular")


@dataclass(frozen=True)
class FrameSpec:
    """Analysis framing geometry, in samples."""

    frame_length: int
    frame_shift: int
    window: str = "hann"

    def __post_init__(self):
        check_positive(self.frame_length, "frame_length")
        check_positive(self.frame_shift, "frame_shift")
        if self.frame_shift > self.frame_length:
            raise ValueError(
                f"frame_shift {self.frame_shift} exceeds frame_length {self.frame_length}"
            )
        if self.window not in WINDOWS:
            raise ValueError(f"window must be one of {WINDOWS}, got {self.window!r}")

    @classmethod
    def from_seconds(
        cls, frame_length_s: float, frame_shift_s: float, sample_rate: int, window: str = "hann"
    ) -> "FrameSpec":
        """Build a spec from durations; e.g. 25 ms shift at 16 kHz -> 400 samples."""
        return cls(
            frame_length=int(round(frame_length_s * sample_rate)),
            frame_shift=int(round(frame_shift_s * sample_rate)),
            window=window,
        )

    def window_values(self) -> np.ndarray:
        if self.window == "hann":
            n = np.arange(self.frame_length)
            return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.frame_length)
        return np.ones(self.frame_length)


@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided power spectrum (``fft_size // 2 + 1`` bins)."""

    bins: np.ndarray
    bin_hz: float
    sample_rate: int

    def __post_init__(self):
        if np.any(self.bins < 0):
            raise ValueError("power spectrum bins must be non-negative")

    @property
    def fft_size(self) -> int:
        return 2 * (len(self.bins) - 1)

    def pair_weights(self) -> np.ndarray:
        """Multiplicity of each stored bin in the full two-sided spectrum."""
        w = np.full(len(self.bins), 2.0)
        w[0] = 1.0
        w[-1] = 1.0  # Nyquist bin is unpaired for even fft sizes
        return w

    def total_energy(self) -> float:
        """Time-domain energy of the windowed frame (Parseval identity)."""
        return float(np.dot(self.pair_weights(), self.bins))


def frame_signal(samples, spec: FrameSpec) -> np.ndarray:
    """Slice a mono signal into windowed frames.

    Returns a matrix [n_frames, frame_length] where
    ``n_frames = (len(samples) - frame_length) // frame_shift + 1``.
    """
    x = as_mono_f64(samples)
    n = len(x)
    if n < spec.frame_length:
        raise ValueError(
            f"signal of {n} samples is shorter than one frame ({spec.frame_length})"
        )
    n_frames = (n - spec.frame_length) // spec.frame_shift + 1
    idx = np.arange(spec.frame_length)[None, :] + spec.frame_shift * np.arange(n_frames)[:, None]
    return x[idx] * spec.window_values()[None, :]


def power_spectrum(frames: np.ndarray, fft_size: int, sample_rate: int) -> list[PowerSpectrum]:
    """Per-frame one-sided power spectra.

    ``fft_size`` must be a power of two and at least the frame length; shorter
    frames are zero-padded.
    """
    check_power_of_two(fft_size, "fft_size")
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    if frames.shape[1] > fft_size:
        raise ValueError(f"fft_size {fft_size} < frame length {frames.shape[1]}")
    spectra = np.abs(np.fft.rfft(frames, n=fft_size, axis=1)) ** 2 / fft_size
    bin_hz = sample_rate / fft_size
    return [PowerSpectrum(bins=row, bin_hz=bin_hz, sample_rate=sample_rate) for row in spectra]


def average_power_spectrum(
    samples,
    sample_rate: int,
    frame_length: int = 1024,
    frame_shift: int = 256,
    fft_size: int = 1024,
    window: str = "hann",
) -> PowerSpectrum:
    """Welch-style mean of per-frame power spectra over a whole segment."""
    spec = FrameSpec(frame_length=frame_length, frame_shift=frame_shift, window=window)
    frames = frame_signal(samples, spec)
    per_frame = power_spectrum(frames, fft_size, sample_rate)
    mean_bins = np.mean([ps.bins for ps in per_frame], axis=0)
    return PowerSpectrum(bins=mean_bins, bin_hz=sample_rate / fft_size, sample_rate=sample_rate)


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, fft_size: int, sample_rate: int) -> np.ndarray:
    """Triangular mel filterbank matrix [n_mels, fft_size // 2 + 1]."""
    check_positive(n_mels, "n_mels")
    n_bins = fft_size // 2 + 1
    mel_points = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.arange(n_bins) * (sample_rate / fft_size)
    fb = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, center, hi = hz_points[m], hz_points[m + 1], hz_points[m + 2]
        rising = (bin_freqs - lo) / max(center - lo, 1e-12)
        falling = (hi - bin_freqs) / max(hi - center, 1e-12)
        fb[m] = np.maximum(0.0, np.minimum(rising, falling))
    return fb


LOG_FLOOR = 1e-10


def mel_spectrogram(
    samples,
    spec: FrameSpec,
    n_mels: int,
    sample_rate: int,
    fft_size: int | None = None,
    log: bool = False,
) -> np.ndarray:
    """Mel band energies, one row per frame.

    Linear power by default; ``log=True`` applies a natural log with a 1e-10
    floor.
    """
    if fft_size is None:
        fft_size = _next_pow2(spec.frame_length)
    frames = frame_signal(samples, spec)
    spectra = np.stack([ps.bins for ps in power_spectrum(frames, fft_size, sample_rate)])
    fb = mel_filterbank(n_mels, fft_size, sample_rate)
    mel = spectra @ fb.T
    if log:
        return np.log(np.maximum(mel, LOG_FLOOR))
    return mel


def rolloff_frequency(avg_spectrum: PowerSpectrum, energy_fraction: float) -> float:
    """Lowest bin center frequency holding ``energy_fraction`` of total energy.

    Cumulative sums use conjugate-pair weights so they reflect the full
    two-sided energy; raises on silent (zero-energy) input.
    """
    check_in_range(energy_fraction, 0.0, 1.0, "energy_fraction", lo_open=True)
    weighted = avg_spectrum.pair_weights() * avg_spectrum.bins
    total = float(weighted.sum())
    if total <= 0.0:
        raise ValueError("cannot compute roll-off of a zero-energy spectrum")
    cumulative = np.cumsum(weighted)
    k = int(np.searchsorted(cumulative, energy_fraction * total))
    k = min(k, len(weighted) - 1)
    return k * avg_spectrum.bin_hz


def segment_rolloff(samples, sample_rate: int, energy_fraction: float = 0.995) -> float:
    """Roll-off of a whole segment via the Welch-averaged spectrum.

    Computed at the native sample rate: bandwidth-limited content saved at a
    high rate is exactly what the criterion is meant to catch.
    """
    return rolloff_frequency(average_power_spectrum(samples, sample_rate), energy_fraction)
