"""Speaker clustering: cosine k-means with iterative centroid merging,
per-chunk speaker attribution, multi-speaker detection, and centroid-distance
outlier filtering.

Determinism rules, fixed so identical (inputs, seed) give byte-identical
models: k-means++ seeding from the provided seed; assignment ties go to the
lowest cluster index; empty clusters are reseeded with the point farthest from
its centroid; merging always takes the most-similar pair above the threshold
with ties broken by the lowest (id_a, id_b) pair; every centroid is the
unit-normalized sum of its member embeddings accumulated in ascending row
order.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .validation import as_matrix_f64, check_positive

Key = str | int


@dataclass(frozen=True)
class Chunk:
    """A fixed-length window of a segment used for speaker attribution."""

    segment_id: str
    chunk_index: int
    start: float
    end: float

    @property
    def chunk_id(self) -> str:
        return f"{self.segment_id}#{self.chunk_index:04d}"


def chunk_segments(segments, chunk_len: float = 3.0, chunk_hop: float = 1.5) -> list[Chunk]:
    """Cover each (segment_id, start, end) triple with overlapping chunks.

    A segment of length L yields ``ceil(max(0, L - chunk_len) / chunk_hop) + 1``
    chunks; segments shorter than ``chunk_len`` yield one chunk clipped to the
    segment.
    """
    check_positive(chunk_len, "chunk_len")
    check_positive(chunk_hop, "chunk_hop")
    chunks = []
    for segment_id, start, end in segments:
        length = end - start
        if length <= 0:
            raise ValueError(f"segment {segment_id}: non-positive length")
        overflow = max(0.0, length - chunk_len)
        count = int(math.ceil(overflow / chunk_hop - 1e-9)) + 1
        for i in range(count):
            c_start = start + i * chunk_hop
            c_end = min(c_start + chunk_len, end)
            chunks.append(Chunk(segment_id=segment_id, chunk_index=i, start=c_start, end=c_end))
    return chunks


def unit_rows(x: np.ndarray) -> np.ndarray:
    """Normalize matrix rows to unit L2 norm, rejecting zero rows."""
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0):
        raise ValueError("embedding with zero norm")
    return x / norms[:, None]


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return float(np.dot(a, b) / denom)


def _centroid_of(unit: np.ndarray, rows: list[int]) -> np.ndarray:
    # ascending-row-order sum, then normalize: keeps merge order float-exact
    total = np.zeros(unit.shape[1])
    for r in sorted(rows):
        total = total + unit[r]
    norm = np.linalg.norm(total)
    if norm == 0:
        # antipodal members cancelled; fall back to the first member's direction
        return unit[sorted(rows)[0]].copy()
    return total / norm


@dataclass(frozen=True)
class ClusterModel:
    """Centroids, assignments, and merge history of one clustering run."""

    centroid_ids: tuple[int, ...]
    centroids: np.ndarray
    assignments: dict[Key, int]
    merge_log: tuple[tuple[int, int, float], ...]
    params: dict
    distortion_history: tuple[float, ...] = ()
    embeddings: np.ndarray | None = field(default=None, repr=False, compare=False)
    keys: tuple[Key, ...] = field(default=(), repr=False, compare=False)

    def centroid_for(self, centroid_id: int) -> np.ndarray:
        return self.centroids[self.centroid_ids.index(centroid_id)]

    def max_pairwise_similarity(self) -> float:
        m = len(self.centroid_ids)
        if m < 2:
            return -1.0
        best = -1.0
        for i in range(m):
            for j in range(i + 1, m):
                best = max(best, float(np.dot(self.centroids[i], self.centroids[j])))
        return best

    def to_json(self) -> str:
        doc = {
            "centroid_ids": list(self.centroid_ids),
            "centroids": [list(map(float, row)) for row in self.centroids],
            "assignments": {str(k): v for k, v in self.assignments.items()},
            "merge_log": [[a, b, s] for a, b, s in self.merge_log],
            "params": self.params,
            "distortion_history": list(self.distortion_history),
        }
        return json.dumps(doc, sort_keys=True)


def _kmeanspp_init(unit: np.ndarray, k: int, rng: np.random.Generator) -> list[int]:
    n = len(unit)
    chosen = [int(rng.integers(n))]
    d2 = np.sum((unit - unit[chosen[0]]) ** 2, axis=1)
    while len(chosen) < k:
        total = float(d2.sum())
        if total <= 0.0:
            # remaining points coincide with chosen centers
            leftover = next(i for i in range(n) if i not in set(chosen))
            nxt = leftover
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, np.sum((unit - unit[nxt]) ** 2, axis=1))
    return chosen


def kmeans(
    embeddings,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-6,
    keys=None,
) -> ClusterModel:
    """Cosine k-means on the unit sphere, deterministic given the seed.

    Embeddings are unit-normalized; centroids stay unit-norm. The recorded
    per-iteration distortion (sum of squared distances to assigned centroids)
    is non-increasing.
    """
    x = as_matrix_f64(embeddings, "embeddings")
    n = len(x)
    if n == 0:
        raise ValueError("cannot cluster an empty embedding set")
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of embeddings ({n})")
    if keys is None:
        keys = tuple(range(n))
    else:
        keys = tuple(keys)
        if len(keys) != n:
            raise ValueError("keys length must match embeddings")

    unit = unit_rows(x)
    rng = np.random.default_rng(seed)
    centers = unit[_kmeanspp_init(unit, k, rng)].copy()

    labels = np.zeros(n, dtype=int)
    history: list[float] = []
    for _ in range(max_iters):
        d2 = np.sum((unit[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = d2.argmin(axis=1)
        # reseed empty clusters with the farthest-from-centroid point
        for cid in range(k):
            if not np.any(labels == cid):
                dist_own = d2[np.arange(n), labels]
                steal = int(dist_own.argmax())
                labels[steal] = cid
                centers[cid] = unit[steal]
        new_centers = np.stack(
            [_centroid_of(unit, list(np.flatnonzero(labels == cid))) for cid in range(k)]
        )
        history.append(float(np.sum((unit - new_centers[labels]) ** 2)))
        movement = float(np.max(np.linalg.norm(new_centers - centers, axis=1)))
        centers = new_centers
        if movement < tol:
            break

    return ClusterModel(
        centroid_ids=tuple(range(k)),
        centroids=centers,
        assignments={keys[i]: int(labels[i]) for i in range(n)},
        merge_log=(),
        params={"k_init": k, "max_iters": max_iters, "tol": tol, "seed": seed},
        distortion_history=tuple(history),
        embeddings=x,
        keys=keys,
    )


def merge_clusters(model: ClusterModel, merge_threshold: float = 0.8) -> ClusterModel:
    """Iteratively merge the most-similar centroid pair while any pair exceeds
    the threshold; merged centroids are recomputed from raw member embeddings."""
    if model.embeddings is None:
        raise ValueError("model does not carry embeddings; re-run kmeans with them attached")
    unit = unit_rows(model.embeddings)
    members: dict[int, list[int]] = {cid: [] for cid in model.centroid_ids}
    for row, key in enumerate(model.keys):
        members[model.assignments[key]].append(row)
    centroids = {cid: _centroid_of(unit, rows) if rows else model.centroid_for(cid)
                 for cid, rows in members.items()}

    log = list(model.merge_log)
    while True:
        live = sorted(centroids)
        best_sim, best_pair = -2.0, None
        for i, a in enumerate(live):
            for b in live[i + 1 :]:
                sim = float(np.dot(centroids[a], centroids[b]))
                if sim > best_sim:
                    best_sim, best_pair = sim, (a, b)
        if best_pair is None or best_sim <= merge_threshold:
            break
        a, b = best_pair
        members[a] = members[a] + members[b]
        del members[b], centroids[b]
        centroids[a] = _centroid_of(unit, members[a])
        log.append((a, b, best_sim))

    live = sorted(centroids)
    row_to_cid = {}
    for cid in live:
        for row in members[cid]:
            row_to_cid[row] = cid
    params = dict(model.params)
    params["merge_threshold"] = merge_threshold
    return replace(
        model,
        centroid_ids=tuple(live),
        centroids=np.stack([centroids[cid] for cid in live]),
        assignments={model.keys[row]: row_to_cid[row] for row in range(len(model.keys))},
        merge_log=tuple(log),
        params=params,
    )


@dataclass(frozen=True)
class SpeakerDecision:
    speaker_id: int | None
    multi_speaker: bool
    cluster_ids: tuple[int, ...]


def attribute_speakers(model: ClusterModel, chunks: list[Chunk]) -> dict[str, SpeakerDecision]:
    """Per-segment speaker decision: the unique cluster of its chunks, or a
    multi-speaker flag when chunks map to two or more clusters."""
    by_segment: dict[str, list[int]] = {}
    for chunk in chunks:
        if chunk.chunk_id not in model.assignments:
            raise ValueError(f"chunk {chunk.chunk_id} has no cluster assignment")
        by_segment.setdefault(chunk.segment_id, []).append(model.assignments[chunk.chunk_id])
    decisions = {}
    for segment_id, cids in by_segment.items():
        if not cids:
            raise ValueError(f"segment {segment_id} has zero chunks")
        unique = tuple(sorted(set(cids)))
        if len(unique) == 1:
            decisions[segment_id] = SpeakerDecision(unique[0], False, unique)
        else:
            decisions[segment_id] = SpeakerDecision(None, True, unique)
    return decisions


def filter_outliers(
    model: ClusterModel,
    speaker_by_segment: dict[str, int],
    outlier_threshold: float = 0.6,
) -> tuple[list[str], list[str]]:
    """Split segment ids into (kept, rejected): a segment is an outlier when
    the cosine similarity between its mean chunk embedding and its speaker
    centroid falls below the threshold."""
    if model.embeddings is None:
        raise ValueError("model does not carry embeddings")
    unit = unit_rows(model.embeddings)
    rows_by_segment: dict[str, list[int]] = {}
    for row, key in enumerate(model.keys):
        segment_id = str(key).split("#")[0]
        rows_by_segment.setdefault(segment_id, []).append(row)
    kept, rejected = [], []
    for segment_id, speaker_id in speaker_by_segment.items():
        rows = rows_by_segment.get(segment_id)
        if not rows:
            raise ValueError(f"segment {segment_id} has no chunk embeddings in the model")
        mean_vec = unit[sorted(rows)].mean(axis=0)
        sim = cosine_similarity(mean_vec, model.centroid_for(speaker_id))
        (kept if sim >= outlier_threshold else rejected).append(segment_id)
    return kept, rejected


class SpeakerClusterer(BaseEstimator):
    """sklearn-style estimator over k-means + merge.

    ``fit`` learns centroids from chunk embeddings; ``predict`` assigns new
    embeddings to the nearest centroid by cosine similarity. ``n_clusters``
    may be "auto" (one cluster seed per ~20 chunks, at least 2).
    """

    def __init__(
        self,
        n_clusters="auto",
        merge_threshold: float = 0.8,
        outlier_threshold: float = 0.6,
        max_iters: int = 100,
        tol: float = 1e-6,
        seed: int = 0,
    ):
        self.n_clusters = n_clusters
        self.merge_threshold = merge_threshold
        self.outlier_threshold = outlier_threshold
        self.max_iters = max_iters
        self.tol = tol
        self.seed = seed

    def _resolve_k(self, n: int) -> int:
        if self.n_clusters == "auto":
            return min(n, max(2, round(n / 20))) if n > 1 else 1
        return int(self.n_clusters)

    def fit(self, X, y=None, keys=None):
        x = as_matrix_f64(X)
        model = kmeans(
            x, self._resolve_k(len(x)), seed=self.seed,
            max_iters=self.max_iters, tol=self.tol, keys=keys,
        )
        model = merge_clusters(model, self.merge_threshold)
        params = dict(model.params)
        params["outlier_threshold"] = self.outlier_threshold
        self.model_ = replace(model, params=params)
        self.cluster_ids_ = self.model_.centroid_ids
        self.cluster_centers_ = self.model_.centroids
        self.labels_ = np.array([self.model_.assignments[k] for k in self.model_.keys])
        return self

    def predict(self, X) -> np.ndarray:
        unit = unit_rows(as_matrix_f64(X))
        sims = unit @ self.cluster_centers_.T
        return np.array([self.cluster_ids_[i] for i in sims.argmax(axis=1)])

    def fit_predict(self, X, y=None, keys=None) -> np.ndarray:
        return self.fit(X, y=y, keys=keys).labels_


_CACHE_MAGIC = b"RFEC"
_CACHE_VERSION = 1


def save_embedding_cache(path, keys, matrix: np.ndarray) -> None:
    """Binary chunk-embedding cache: magic, version, dimension, count, the
    row-major little-endian float32 matrix, then length-prefixed UTF-8 keys."""
    mat = np.ascontiguousarray(np.asarray(matrix, dtype="<f4"))
    keys = [str(k) for k in keys]
    if mat.ndim != 2 or len(keys) != mat.shape[0]:
        raise ValueError("matrix must be 2-D with one key per row")
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<III", _CACHE_VERSION, mat.shape[1], mat.shape[0]))
        fh.write(mat.tobytes())
        for key in keys:
            raw = key.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)


def load_embedding_cache(path) -> tuple[list[str], np.ndarray]:
    data = Path(path).read_bytes()
    if data[:4] != _CACHE_MAGIC:
        raise ValueError(f"{path}: not an embedding cache file")
    version, dim, count = struct.unpack_from("<III", data, 4)
    if version != _CACHE_VERSION:
        raise ValueError(f"{path}: unsupported cache version {version}")
    offset = 16
    matrix = np.frombuffer(data, dtype="<f4", count=dim * count, offset=offset).reshape(count, dim)
    offset += 4 * dim * count
    keys = []
    for _ in range(count):
        (length,) = struct.unpack_from("<I", data, offset)
        offset += 4
        keys.append(data[offset : offset + length].decode("utf-8"))
        offset += length
    return keys, matrix.astype(np.float64)
