"""Cascaded selection between a primary (A) and a secondary (B) prediction stream.

Every (frame, object) pair is classified by comparing the two streams:

* ``miss_a`` / ``miss_b``: one stream has a valid mask and the named one does not;
* ``wrong``: both masks are valid but their IoU is at or below ``iou_threshold``;
* ``agree``: anything else.

Per video the rules are applied in priority order. If more than
``miss_frame_threshold`` frames show a miss, the stream that kept producing
masks wins and nothing else is looked at. Otherwise, if more than
``wrong_frame_threshold`` frames are ``wrong``, the contour counts of both
streams on those frames decide: the stream with fewer fragmented
(high-noise) frames wins. Otherwise stream A is kept.

Stream A plays the role of the stable long-video tracker and is the default;
stream B is the complementary model.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .contours import ContourMode, ContourStats, count_contours
from .masks import DimensionMismatchError, LabelMap, VideoPrediction, iou, object_ids


class Source(str, Enum):
    A = "A"
    B = "B"


class Reason(str, Enum):
    MISS_TRACKING = "miss_tracking"
    WRONG_TRACKING_NOISE = "wrong_tracking_noise"
    DEFAULT = "default"


class Kind(str, Enum):
    AGREE = "agree"
    MISS_A = "miss_a"
    MISS_B = "miss_b"
    WRONG = "wrong"


class Granularity(str, Enum):
    VIDEO = "video"
    OBJECT = "object"


@dataclass(frozen=True)
class CascadeParams:
    iou_threshold: float = 0.1
    miss_frame_threshold: int = 10
    wrong_frame_threshold: int = 10
    contour_noise_threshold: int = 6
    min_pixels: int = 1
    granularity: Granularity = Granularity.VIDEO
    contour_mode: ContourMode = ContourMode.WITH_HOLES

    def __post_init__(self):
        object.__setattr__(self, "granularity", Granularity(self.granularity))
        object.__setattr__(self, "contour_mode", ContourMode(self.contour_mode))
        if not 0.0 <= self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold must be in [0, 1], got {self.iou_threshold}")
        for name in ("miss_frame_threshold", "wrong_frame_threshold",
                     "contour_noise_threshold", "min_pixels"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")

    def to_dict(self) -> dict:
        return {
            "iou_threshold": self.iou_threshold,
            "miss_frame_threshold": self.miss_frame_threshold,
            "wrong_frame_threshold": self.wrong_frame_threshold,
            "contour_noise_threshold": self.contour_noise_threshold,
            "min_pixels": self.min_pixels,
            "granularity": self.granularity.value,
            "contour_mode": self.contour_mode.value,
        }


@dataclass(frozen=True)
class DisagreementRecord:
    frame_index: int
    object_id: int
    kind: Kind
    iou: float

    def to_dict(self) -> dict:
        return {"frame": self.frame_index, "object": self.object_id,
                "kind": self.kind.value, "iou": self.iou}


@dataclass(frozen=True)
class CascadeDecision:
    source: Source
    reason: Reason
    miss_count_a: int = 0
    miss_count_b: int = 0
    wrong_count: int = 0
    noise_frames_a: int = 0
    noise_frames_b: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["source"] = self.source.value
        d["reason"] = self.reason.value
        return d


@dataclass(frozen=True)
class FusionReport:
    video_id: str
    decision: CascadeDecision
    per_frame: Tuple[DisagreementRecord, ...]
    parameters: CascadeParams
    # Only filled in object granularity; there these decisions drive the output.
    object_decisions: Dict[int, CascadeDecision] = field(default_factory=dict)


def _check_pair(a: VideoPrediction, b: VideoPrediction) -> Tuple[int, int]:
    if not a.frames and not b.frames:
        raise ValueError("both prediction streams are empty")
    shapes = {v.shape for v in (a, b) if v.frames}
    if len(shapes) > 1:
        sa, sb = a.shape, b.shape
        raise DimensionMismatchError(f"stream shapes differ: A {sa} vs B {sb}")
    return shapes.pop()


def aligned_frames(a: VideoPrediction, b: VideoPrediction):
    """Yield (index, labels_a, labels_b) over the union of frame indices.

    A frame absent from one stream is an all-background frame for that stream.
    """
    shape = _check_pair(a, b)
    da, db = a.as_dict(), b.as_dict()
    empty = np.zeros(shape, dtype=np.uint8)
    for idx in sorted(set(da) | set(db)):
        la = da[idx].labels if idx in da else empty
        lb = db[idx].labels if idx in db else empty
        yield idx, la, lb


def classify_pair(ma: np.ndarray, mb: np.ndarray, params: CascadeParams) -> Tuple[Kind, float]:
    valid_a = int(np.count_nonzero(ma)) >= params.min_pixels
    valid_b = int(np.count_nonzero(mb)) >= params.min_pixels
    value = iou(ma, mb)
    if valid_b and not valid_a:
        return Kind.MISS_A, value
    if valid_a and not valid_b:
        return Kind.MISS_B, value
    if valid_a and valid_b and value <= params.iou_threshold:
        return Kind.WRONG, value
    return Kind.AGREE, value


def classify_frames(a: VideoPrediction, b: VideoPrediction,
                    params: CascadeParams = CascadeParams()) -> List[DisagreementRecord]:
    ids = sorted(set(object_ids(a)) | set(object_ids(b)))
    records = []
    for idx, la, lb in aligned_frames(a, b):
        for oid in ids:
            kind, value = classify_pair(la == oid, lb == oid, params)
            records.append(DisagreementRecord(idx, oid, kind, value))
    return records


def frames_of_kind(records: Iterable[DisagreementRecord], kind: Kind) -> set:
    return {r.frame_index for r in records if r.kind is kind}


def _noise_frames(stats: Iterable[ContourStats], frames: set, objects: Optional[set],
                  threshold: int) -> int:
    noisy = set()
    for s in stats:
        if s.frame_index not in frames:
            continue
        if objects is not None and s.object_id not in objects:
            continue
        if s.total_contours > threshold:
            noisy.add(s.frame_index)
    return len(noisy)


def decide(records: Sequence[DisagreementRecord],
           noise_a: Iterable[ContourStats] = (),
           noise_b: Iterable[ContourStats] = (),
           params: CascadeParams = CascadeParams()) -> CascadeDecision:
    """Apply the miss-tracking rule, then the wrong-tracking rule, then the default.

    Counts are over distinct frames: a frame counts once however many of its
    objects trigger a condition. Contour statistics are only consulted when
    the wrong-tracking rule is reached, and only for the objects that appear
    in ``records``.
    """
    miss_a = len(frames_of_kind(records, Kind.MISS_A))
    miss_b = len(frames_of_kind(records, Kind.MISS_B))
    wrong_frames = frames_of_kind(records, Kind.WRONG)
    counts = dict(miss_count_a=miss_a, miss_count_b=miss_b, wrong_count=len(wrong_frames))

    if max(miss_a, miss_b) > params.miss_frame_threshold:
        # A missing favours B; with both over the limit the smaller miss count wins.
        source = Source.B if miss_a > miss_b else Source.A
        return CascadeDecision(source, Reason.MISS_TRACKING, **counts)

    if len(wrong_frames) > params.wrong_frame_threshold:
        objects = {r.object_id for r in records}
        na = _noise_frames(noise_a, wrong_frames, objects, params.contour_noise_threshold)
        nb = _noise_frames(noise_b, wrong_frames, objects, params.contour_noise_threshold)
        source = Source.B if nb < na else Source.A
        return CascadeDecision(source, Reason.WRONG_TRACKING_NOISE, noise_frames_a=na,
                               noise_frames_b=nb, **counts)

    return CascadeDecision(Source.A, Reason.DEFAULT, **counts)


def contour_stats(v: VideoPrediction, frames: Iterable[int], objects: Iterable[int],
                  mode: ContourMode = ContourMode.WITH_HOLES) -> List[ContourStats]:
    """Contour counts of ``v`` for the given frames and objects (absent frames are empty)."""
    by_index = v.as_dict()
    objects = sorted(objects)
    out = []
    for idx in sorted(frames):
        lm = by_index.get(idx)
        for oid in objects:
            if lm is None:
                out.append(ContourStats(oid, idx, 0, 0))
            else:
                out.append(count_contours(lm.labels == oid, oid, idx, mode))
    return out


def noise_statistics(a: VideoPrediction, b: VideoPrediction,
                     records: Sequence[DisagreementRecord],
                     params: CascadeParams) -> Tuple[List[ContourStats], List[ContourStats]]:
    """Contour counts for both streams on the frames flagged ``wrong``."""
    wrong = frames_of_kind(records, Kind.WRONG)
    objects = {r.object_id for r in records}
    return (contour_stats(a, wrong, objects, params.contour_mode),
            contour_stats(b, wrong, objects, params.contour_mode))


def noise_by_object(stats: Iterable[ContourStats], threshold: int) -> Dict[int, int]:
    """Per-object number of high-noise frames, for inspection."""
    counts: Dict[int, int] = defaultdict(int)
    for s in stats:
        counts[s.object_id] += int(s.total_contours > threshold)
    return dict(sorted(counts.items()))


def decide_video(a: VideoPrediction, b: VideoPrediction, records: Sequence[DisagreementRecord],
                 params: CascadeParams) -> CascadeDecision:
    na, nb = noise_statistics(a, b, records, params)
    return decide(records, na, nb, params)


def decide_objects(a: VideoPrediction, b: VideoPrediction, records: Sequence[DisagreementRecord],
                   params: CascadeParams) -> Dict[int, CascadeDecision]:
    by_object: Dict[int, List[DisagreementRecord]] = defaultdict(list)
    for r in records:
        by_object[r.object_id].append(r)
    return {oid: decide_video(a, b, recs, params) for oid, recs in sorted(by_object.items())}


def _compose(a: VideoPrediction, b: VideoPrediction,
             choice: Mapping[int, Source]) -> VideoPrediction:
    frames = []
    for idx, la, lb in aligned_frames(a, b):
        out = np.zeros_like(la)
        # Ascending ids; a later id overwrites an earlier one where they overlap.
        for oid in sorted(choice):
            src = la if choice[oid] is Source.A else lb
            out[src == oid] = oid
        frames.append((idx, LabelMap(out)))
    return VideoPrediction(a.video_id, tuple(frames))


def _whole(chosen: VideoPrediction, other: VideoPrediction) -> VideoPrediction:
    """The chosen stream, padded with empty frames where only ``other`` has one."""
    if set(other.frame_indices) <= set(chosen.frame_indices):
        return chosen
    frames = [(idx, LabelMap(lc)) for idx, lc, _ in aligned_frames(chosen, other)]
    return VideoPrediction(chosen.video_id, tuple(frames))


def fuse(a: VideoPrediction, b: VideoPrediction,
         params: CascadeParams = CascadeParams()) -> Tuple[VideoPrediction, FusionReport]:
    """Select between the two streams and return the fused stream plus its report."""
    records = classify_frames(a, b, params)
    decision = decide_video(a, b, records, params)
    video_id = a.video_id or b.video_id
    object_decisions: Dict[int, CascadeDecision] = {}

    if params.granularity is Granularity.VIDEO:
        fused = _whole(a, b) if decision.source is Source.A else _whole(b, a)
    else:
        object_decisions = decide_objects(a, b, records, params)
        fused = _compose(a, b, {oid: d.source for oid, d in object_decisions.items()})

    fused = replace(fused, video_id=video_id)
    report = FusionReport(video_id, decision, tuple(records), params, object_decisions)
    return fused, report
