"""Vector quantization against a fixed codebook, plus the tokenizer's
composite training loss."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..validation import as_matrix_f64


@dataclass(frozen=True)
class Codebook:
    """A quantizer codebook: 16,384 codewords by default; 40 ms frames for the
    semantic stream, 20 ms for acoustic streams."""

    codewords: np.ndarray
    frame_shift: float = 0.040

    def __post_init__(self):
        object.__setattr__(self, "codewords", as_matrix_f64(self.codewords, "codewords"))
        if len(self.codewords) < 1:
            raise ValueError("codebook must contain at least one codeword")
        if self.frame_shift <= 0:
            raise ValueError("frame_shift must be positive")

    @property
    def n_codes(self) -> int:
        return self.codewords.shape[0]

    @property
    def dim(self) -> int:
        return self.codewords.shape[1]


def vq_quantize(inputs, codebook: Codebook) -> tuple[np.ndarray, np.ndarray, float]:
    """Nearest-codeword quantization.

    Returns (indices, quantized vectors, vq_loss) where each index is the
    argmin Euclidean distance (lowest index on ties) and vq_loss is the mean
    squared error between inputs and their selected codewords.
    """
    x = as_matrix_f64(inputs, "inputs")
    if x.shape[1] != codebook.dim:
        raise ValueError(f"input dim {x.shape[1]} != codebook dim {codebook.dim}")
    indices = np.empty(len(x), dtype=np.int64)
    # direct per-pair differences; chunked so large codebooks stay in cache
    step = max(1, 2_000_000 // max(1, codebook.n_codes * codebook.dim))
    for lo in range(0, len(x), step):
        hi = min(lo + step, len(x))
        d2 = np.sum((x[lo:hi, None, :] - codebook.codewords[None, :, :]) ** 2, axis=2)
        indices[lo:hi] = d2.argmin(axis=1)
    quantized = codebook.codewords[indices]
    l_vq = float(np.mean((x - quantized) ** 2)) if x.size else 0.0
    return indices, quantized, l_vq


@dataclass(frozen=True)
class LossWeights:
    """Weights of the composite tokenizer loss; defaults are the published
    configuration (1, 1000, 1)."""

    vq: float = 1.0
    semantic: float = 1000.0
    acoustic: float = 1.0

    def __post_init__(self):
        if self.vq < 0 or self.semantic < 0 or self.acoustic < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class LossBreakdown:
    vq: float
    semantic: float
    acoustic: float
    combined: float


def composite_loss(l_vq: float, l_s: float, l_a: float, weights: LossWeights = LossWeights()) -> LossBreakdown:
    """Weighted sum of the quantization, semantic-feature, and acoustic-feature losses."""
    if l_vq < 0 or l_s < 0 or l_a < 0:
        raise ValueError("component losses must be non-negative")
    combined = weights.vq * l_vq + weights.semantic * l_s + weights.acoustic * l_a
    return LossBreakdown(vq=l_vq, semantic=l_s, acoustic=l_a, combined=combined)
