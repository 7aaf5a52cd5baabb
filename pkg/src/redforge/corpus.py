"""Canonical data model and manifest persistence for every pipeline stage.

Manifests are UTF-8 line-delimited JSON, one record per line, snake_case
keys in a stable order, optional fields omitted rather than null. Times are
serialized as float seconds rounded to 6 decimal places. Record ids are
content-derived so re-runs are idempotent.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

STAGE_STATES = ("ingested", "enhanced", "segmented", "clustered", "transcribed", "filtered")

REJECT_REASONS = (
    "duration",
    "multi_speaker",
    "centroid_outlier",
    "quality",
    "bandwidth",
    "confidence",
)


class ManifestError(ValueError):
    """Raised for malformed manifest content or invariant violations."""


def asset_id_for(path: str, byte_length: int) -> str:
    return hashlib.sha256(f"{path}:{byte_length}".encode("utf-8")).hexdigest()[:16]


def segment_id_for(asset_id: str, start: float, end: float) -> str:
    return hashlib.sha256(f"{asset_id}:{start:.6f}:{end:.6f}".encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class AudioAsset:
    """An ingested audio file plus provenance and stage state."""

    asset_id: str
    path: str
    sample_rate: int
    num_samples: int
    channel_count: int = 1
    stage_state: str = "ingested"

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ManifestError(f"asset {self.asset_id}: sample_rate must be positive")
        if self.num_samples < 0:
            raise ManifestError(f"asset {self.asset_id}: num_samples must be non-negative")
        if self.stage_state not in STAGE_STATES:
            raise ManifestError(f"asset {self.asset_id}: unknown stage_state {self.stage_state!r}")

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate

    def advance(self, new_state: str) -> "AudioAsset":
        """Move to a later stage state; transitions are monotone."""
        if new_state not in STAGE_STATES:
            raise ManifestError(f"unknown stage_state {new_state!r}")
        if STAGE_STATES.index(new_state) <= STAGE_STATES.index(self.stage_state):
            raise ManifestError(
                f"asset {self.asset_id}: cannot move from {self.stage_state} to {new_state}"
            )
        return replace(self, stage_state=new_state)

    def to_json_dict(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "path": self.path,
            "sample_rate": self.sample_rate,
            "num_samples": self.num_samples,
            "channel_count": self.channel_count,
            "stage_state": self.stage_state,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "AudioAsset":
        return cls(
            asset_id=obj["asset_id"],
            path=obj["path"],
            sample_rate=int(obj["sample_rate"]),
            num_samples=int(obj["num_samples"]),
            channel_count=int(obj.get("channel_count", 1)),
            stage_state=obj.get("stage_state", "ingested"),
        )


# Serialization order for SegmentRecord fields. Optional fields are omitted
# when None; unknown keys from older/newer producers ride along in `extras`.
_SEGMENT_REQUIRED = ("segment_id", "asset_id", "start", "end", "multi_speaker")
_SEGMENT_OPTIONAL = (
    "speaker_id",
    "transcript",
    "asr_confidence",
    "mos_score",
    "rolloff_hz",
    "reject_reason",
)


@dataclass(frozen=True)
class SegmentRecord:
    """A time interval within an asset with transcript, speaker, and quality annotations."""

    segment_id: str
    asset_id: str
    start: float
    end: float
    multi_speaker: bool = False
    speaker_id: int | None = None
    transcript: str | None = None
    asr_confidence: float | None = None
    mos_score: float | None = None
    rolloff_hz: float | None = None
    reject_reason: str | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.start < self.end):
            raise ManifestError(
                f"segment {self.segment_id}: invalid interval [{self.start}, {self.end}]"
            )
        if self.asr_confidence is not None and not 0.0 <= self.asr_confidence <= 1.0:
            raise ManifestError(
                f"segment {self.segment_id}: asr_confidence {self.asr_confidence} outside [0, 1]"
            )
        if self.mos_score is not None and not 1.0 <= self.mos_score <= 5.0:
            raise ManifestError(
                f"segment {self.segment_id}: mos_score {self.mos_score} outside [1, 5]"
            )
        if self.reject_reason is not None and self.reject_reason not in REJECT_REASONS:
            raise ManifestError(
                f"segment {self.segment_id}: unknown reject_reason {self.reject_reason!r}"
            )

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def rejected(self) -> bool:
        return self.reject_reason is not None

    def to_json_dict(self) -> dict:
        out = {
            "segment_id": self.segment_id,
            "asset_id": self.asset_id,
            "start": round(self.start, 6),
            "end": round(self.end, 6),
            "multi_speaker": self.multi_speaker,
        }
        for key in _SEGMENT_OPTIONAL:
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        for key in sorted(self.extras):
            out[key] = self.extras[key]
        return out

    @classmethod
    def from_json_dict(cls, obj: dict) -> "SegmentRecord":
        obj = dict(obj)
        try:
            kwargs = {
                "segment_id": obj.pop("segment_id"),
                "asset_id": obj.pop("asset_id"),
                "start": float(obj.pop("start")),
                "end": float(obj.pop("end")),
                "multi_speaker": bool(obj.pop("multi_speaker", False)),
            }
        except KeyError as exc:
            raise ManifestError(f"missing required field {exc.args[0]}") from exc
        except (TypeError, ValueError) as exc:
            raise ManifestError(f"bad field value: {exc}") from exc
        for key in _SEGMENT_OPTIONAL:
            if key in obj:
                kwargs[key] = obj.pop(key)
        return cls(extras=obj, **kwargs)


def write_manifest(records, destination) -> int:
    """Write records (SegmentRecord or AudioAsset) as JSONL; returns lines written."""
    destination = Path(destination)
    if not destination.parent.is_dir():
        raise ManifestError(f"destination directory {destination.parent} does not exist")
    count = 0
    with open(destination, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_json_dict(), ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")
            count += 1
    return count


def _read_jsonl(source, parse_obj):
    source = Path(source)
    if not source.is_file():
        raise ManifestError(f"manifest {source} does not exist")
    records = []
    with open(source, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                records.append(parse_obj(obj))
            except (json.JSONDecodeError, ManifestError, TypeError, ValueError) as exc:
                raise ManifestError(f"{source}:{lineno}: {exc}") from exc
    return records


def read_manifest(source) -> list[SegmentRecord]:
    """Parse a segment manifest, validating every record invariant."""
    return _read_jsonl(source, SegmentRecord.from_json_dict)


def read_asset_manifest(source) -> list[AudioAsset]:
    return _read_jsonl(source, AudioAsset.from_json_dict)


HOURS_TOLERANCE = 1e-6


@dataclass(frozen=True)
class StageTally:
    """Kept/removed accounting of a single pipeline stage."""

    stage_name: str
    input_hours: float
    kept_hours: float
    input_count: int
    kept_count: int

    def __post_init__(self):
        if self.kept_hours > self.input_hours + HOURS_TOLERANCE or self.kept_hours < 0:
            raise ValueError(
                f"stage {self.stage_name}: kept_hours {self.kept_hours} "
                f"outside [0, input_hours={self.input_hours}]"
            )
        if not 0 <= self.kept_count <= self.input_count:
            raise ValueError(f"stage {self.stage_name}: kept_count outside [0, input_count]")

    @classmethod
    def from_removed(
        cls, stage_name: str, input_hours: float, removed_hours: float,
        input_count: int, removed_count: int,
    ) -> "StageTally":
        return cls(
            stage_name=stage_name,
            input_hours=input_hours,
            kept_hours=input_hours - removed_hours,
            input_count=input_count,
            kept_count=input_count - removed_count,
        )

    @property
    def removed_hours(self) -> float:
        return self.input_hours - self.kept_hours

    @property
    def removed_count(self) -> int:
        return self.input_count - self.kept_count

    def to_json_dict(self) -> dict:
        return {
            "stage_name": self.stage_name,
            "input_hours": self.input_hours,
            "kept_hours": self.kept_hours,
            "removed_hours": self.removed_hours,
            "input_count": self.input_count,
            "kept_count": self.kept_count,
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "StageTally":
        return cls(
            stage_name=obj["stage_name"],
            input_hours=float(obj["input_hours"]),
            kept_hours=float(obj["kept_hours"]),
            input_count=int(obj["input_count"]),
            kept_count=int(obj["kept_count"]),
        )


@dataclass(frozen=True)
class FunnelReport:
    """Per-stage kept/removed accounting, chained in pipeline order."""

    stages: tuple[StageTally, ...]

    @property
    def overall_keep_rate(self) -> float:
        if not self.stages or self.stages[0].input_hours == 0:
            return 0.0
        return self.stages[-1].kept_hours / self.stages[0].input_hours

    def to_json_doc(self) -> str:
        doc = {
            "stages": [s.to_json_dict() for s in self.stages],
            "overall_keep_rate": self.overall_keep_rate,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json_doc(cls, text: str) -> "FunnelReport":
        doc = json.loads(text)
        return build_funnel([StageTally.from_json_dict(s) for s in doc["stages"]])

    def to_table(self) -> str:
        """Aligned-column text table, hours to 3 decimals."""
        headers = ("stage", "input_h", "kept_h", "removed_h", "input_n", "kept_n", "keep_rate")
        rows = [headers]
        for s in self.stages:
            rate = s.kept_hours / s.input_hours if s.input_hours > 0 else 0.0
            rows.append(
                (
                    s.stage_name,
                    f"{s.input_hours:.3f}",
                    f"{s.kept_hours:.3f}",
                    f"{s.removed_hours:.3f}",
                    str(s.input_count),
                    str(s.kept_count),
                    f"{rate:.4f}",
                )
            )
        widths = [max(len(r[i]) for r in rows) for i in range(len(headers))]
        lines = ["  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row)) for row in rows]
        return "\n".join(lines)


def build_funnel(stage_logs) -> FunnelReport:
    """Chain per-stage tallies into a FunnelReport.

    Stages must be supplied in pipeline order; each stage's input hours must
    equal the previous stage's kept hours within 1e-6.
    """
    stages = tuple(stage_logs)
    for prev, cur in zip(stages, stages[1:]):
        if abs(cur.input_hours - prev.kept_hours) > HOURS_TOLERANCE:
            raise ValueError(
                f"stage {cur.stage_name}: input_hours {cur.input_hours} does not chain "
                f"from {prev.stage_name} kept_hours {prev.kept_hours}"
            )
    return FunnelReport(stages=stages)
