"""Final-stage data filters: speech quality, bandwidth, transcription confidence.

Boundary semantics are exact and deliberate: quality and bandwidth use a
strict "higher than" comparison (a record AT the threshold is rejected),
confidence rejects only values strictly below the threshold (a record AT the
threshold is kept). A rejected record carries the first failing reason in
filter order (quality, bandwidth, confidence); the summary additionally counts
every failed criterion separately.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .corpus import SegmentRecord, StageTally
from .validation import check_in_range, check_positive

FILTER_ORDER = (("quality", "mos_score"), ("bandwidth", "rolloff_hz"), ("confidence", "asr_confidence"))


class MissingMetricError(ValueError):
    """A record reached the filter stage without a required metric."""


@dataclass(frozen=True)
class FilterThresholds:
    mos_min: float = 3.3
    rolloff_min_hz: float = 7000.0
    asr_conf_min: float = 0.8

    def __post_init__(self):
        check_in_range(self.mos_min, 1.0, 5.0, "mos_min")
        check_positive(self.rolloff_min_hz, "rolloff_min_hz")
        check_in_range(self.asr_conf_min, 0.0, 1.0, "asr_conf_min")

    def failures(self, record: SegmentRecord) -> list[str]:
        """All criteria the record fails, in filter order."""
        failed = []
        if not record.mos_score > self.mos_min:
            failed.append("quality")
        if not record.rolloff_hz > self.rolloff_min_hz:
            failed.append("bandwidth")
        if not record.asr_confidence >= self.asr_conf_min:
            failed.append("confidence")
        return failed


def apply_filters(
    records, thresholds: FilterThresholds
) -> tuple[list[SegmentRecord], list[SegmentRecord]]:
    """Partition records into (kept, rejected); rejected records carry the
    first failing reason. Records missing a metric raise rather than being
    silently dropped."""
    for record in records:
        for reason, metric in FILTER_ORDER:
            if getattr(record, metric) is None:
                raise MissingMetricError(f"segment {record.segment_id} is missing {metric}")
    kept, rejected = [], []
    for record in records:
        failed = thresholds.failures(record)
        if failed:
            rejected.append(replace(record, reject_reason=failed[0]))
        else:
            kept.append(record)
    return kept, rejected


def summarize(
    kept, rejected, stage_name: str = "filter", thresholds: FilterThresholds | None = None
) -> dict:
    """Funnel stage entry plus per-reason breakdowns.

    ``reason_counts`` uses the recorded first reason and partitions the
    rejected set; ``failure_diagnostics`` counts every criterion each record
    failed against ``thresholds``, so its totals may overlap.
    """
    if thresholds is None:
        thresholds = FilterThresholds()
    kept, rejected = list(kept), list(rejected)
    kept_hours = sum(r.duration for r in kept) / 3600.0
    removed_hours = sum(r.duration for r in rejected) / 3600.0
    reason_counts: dict[str, int] = {}
    for record in rejected:
        reason_counts[record.reject_reason] = reason_counts.get(record.reject_reason, 0) + 1
    diagnostics: dict[str, int] = {reason: 0 for reason, _ in FILTER_ORDER}
    for record in rejected:
        for reason in thresholds.failures(record):
            diagnostics[reason] += 1
    tally = StageTally(
        stage_name=stage_name,
        input_hours=kept_hours + removed_hours,
        kept_hours=kept_hours,
        input_count=len(kept) + len(rejected),
        kept_count=len(kept),
    )
    return {
        "tally": tally,
        "reason_counts": reason_counts,
        "failure_diagnostics": diagnostics,
    }
