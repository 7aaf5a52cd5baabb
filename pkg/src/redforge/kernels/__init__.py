"""Deterministic model math: vector quantization, Clip&Shuffle, multi-stream
token scheduling, and flow-matching kernels."""

from .clipshuffle import clip_and_shuffle
from .flow import (
    ConditionFeature,
    FlowKernelParams,
    OdeDivergedError,
    cfg_combine,
    fm_loss,
    integrate_ode,
    ot_field,
    ot_path,
)
from .streams import (
    BEGIN,
    DEFAULT_DELAYS,
    GridCorruptionError,
    TokenGrid,
    delay_decode,
    delay_encode,
    lookahead_align,
)
from .vq import Codebook, LossBreakdown, LossWeights, composite_loss, vq_quantize

__all__ = [
    "BEGIN",
    "Codebook",
    "ConditionFeature",
    "DEFAULT_DELAYS",
    "FlowKernelParams",
    "GridCorruptionError",
    "LossBreakdown",
    "LossWeights",
    "OdeDivergedError",
    "TokenGrid",
    "cfg_combine",
    "clip_and_shuffle",
    "composite_loss",
    "delay_decode",
    "delay_encode",
    "fm_loss",
    "integrate_ode",
    "lookahead_align",
    "ot_field",
    "ot_path",
    "vq_quantize",
]
