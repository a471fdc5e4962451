"""Region similarity (J), boundary accuracy (F) and their mean (J&F).

The definitions follow the DAVIS protocol: J is the IoU with the ground truth,
F is the F-measure of boundary pixels matched within a distance tolerance that
defaults to ``ceil(0.008 * image diagonal)``. Sequence scores average each
object track over its evaluated frames, then average the tracks; dataset
scores average every object track of every video.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from .masks import DimensionMismatchError, MaskLike, VideoPrediction, as_bits, object_ids, overlap_counts

BOUNDARY_FRACTION = 0.008


class AlignmentError(ValueError):
    pass


def region_j(pred: MaskLike, gt: MaskLike) -> float:
    inter, union = overlap_counts(pred, gt)
    if union == 0:
        return 1.0
    return inter / union


def boundary_pixels(m: MaskLike) -> np.ndarray:
    """Foreground pixels with a background 4-neighbour; the image edge counts as background."""
    bits = as_bits(m)
    padded = np.pad(bits, 1, constant_values=False)
    interior = (padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:])
    return bits & ~interior


def default_tolerance(shape: Tuple[int, int]) -> int:
    return int(math.ceil(BOUNDARY_FRACTION * math.hypot(*shape)))


def disk(radius: int) -> np.ndarray:
    """Footprint of every offset within Euclidean distance ``radius``."""
    r = int(radius)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return yy * yy + xx * xx <= r * r


def matched_counts(src: np.ndarray, dst: np.ndarray, tolerance: int) -> int:
    """How many ``src`` pixels lie within ``tolerance`` of some ``dst`` pixel."""
    if not src.any() or not dst.any():
        return 0
    if tolerance == 0:
        near = dst
    else:
        near = ndimage.binary_dilation(dst, structure=disk(tolerance))
    return int(np.count_nonzero(src & near))


def f_measure(matched_pred: int, n_pred: int, matched_gt: int, n_gt: int) -> float:
    if n_pred == 0 and n_gt == 0:
        return 1.0
    if n_pred == 0 or n_gt == 0:
        return 0.0
    precision = matched_pred / n_pred
    recall = matched_gt / n_gt
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def boundary_f(pred: MaskLike, gt: MaskLike, tolerance_px: Optional[int] = None) -> float:
    pb, gb = as_bits(pred), as_bits(gt)
    if pb.shape != gb.shape:
        raise DimensionMismatchError(f"mask shapes differ: {pb.shape} vs {gb.shape}")
    if tolerance_px is None:
        tolerance_px = default_tolerance(pb.shape)
    if tolerance_px < 0:
        raise ValueError(f"tolerance must be >= 0, got {tolerance_px}")
    bp, bg = boundary_pixels(pb), boundary_pixels(gb)
    return f_measure(matched_counts(bp, bg, tolerance_px), int(np.count_nonzero(bp)),
                     matched_counts(bg, bp, tolerance_px), int(np.count_nonzero(bg)))


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


@dataclass
class MetricScores:
    j_mean: float
    f_mean: float
    jf: float
    per_object: Dict[Hashable, Tuple[float, float]]
    per_video: Dict[str, Tuple[float, float, float]] = field(default_factory=dict)
    per_frame: Optional[Dict[Hashable, List[Tuple[int, float, float]]]] = None

    @classmethod
    def from_objects(cls, per_object: Dict[Hashable, Tuple[float, float]], **extra) -> "MetricScores":
        if not per_object:
            raise ValueError("no object tracks to score")
        j = _mean([jf[0] for jf in per_object.values()])
        f = _mean([jf[1] for jf in per_object.values()])
        return cls(j, f, (j + f) / 2, per_object, **extra)

    def to_dict(self) -> dict:
        def key(k):
            return "/".join(str(p) for p in k) if isinstance(k, tuple) else str(k)

        return {
            "global": {"J": self.j_mean, "F": self.f_mean, "JF": self.jf},
            "per_video": {v: {"J": j, "F": f, "JF": jf} for v, (j, f, jf) in sorted(self.per_video.items())},
            "per_object": {key(k): {"J": j, "F": f} for k, (j, f) in self.per_object.items()},
        }


def check_alignment(pred: VideoPrediction, gt: VideoPrediction) -> None:
    if pred.frame_indices != gt.frame_indices:
        missing = sorted(set(gt.frame_indices) - set(pred.frame_indices))
        extra = sorted(set(pred.frame_indices) - set(gt.frame_indices))
        raise AlignmentError(
            f"video {gt.video_id!r}: frame mismatch ({len(pred)} predicted vs {len(gt)} "
            f"ground-truth frames; missing {missing[:5]}, unexpected {extra[:5]})"
        )
    if pred.shape != gt.shape:
        raise AlignmentError(f"video {gt.video_id!r}: predicted frames are {pred.shape}, "
                             f"ground truth is {gt.shape}")


def score_video(pred: VideoPrediction, gt: VideoPrediction, tolerance_px: Optional[int] = None,
                include_first: bool = False, keep_frames: bool = False) -> MetricScores:
    """Score one video. Objects are the identifiers present in the ground truth."""
    check_alignment(pred, gt)
    pairs = list(zip(pred.frames, gt.frames))
    if not include_first:
        pairs = pairs[1:]
    if not pairs:
        raise AlignmentError(f"video {gt.video_id!r}: no frames left to evaluate")
    objects = object_ids(gt)
    if not objects:
        raise AlignmentError(f"video {gt.video_id!r}: ground truth contains no objects")

    per_object = {}
    per_frame = {} if keep_frames else None
    for oid in objects:
        rows = []
        for (idx, p), (_, g) in pairs:
            pm, gm = p.labels == oid, g.labels == oid
            rows.append((idx, region_j(pm, gm), boundary_f(pm, gm, tolerance_px)))
        per_object[oid] = (_mean([r[1] for r in rows]), _mean([r[2] for r in rows]))
        if per_frame is not None:
            per_frame[oid] = rows
    scores = MetricScores.from_objects(per_object, per_frame=per_frame)
    scores.per_video[gt.video_id] = (scores.j_mean, scores.f_mean, scores.jf)
    return scores


def score_dataset(pairs: Sequence[Tuple[VideoPrediction, VideoPrediction]],
                  tolerance_px: Optional[int] = None, include_first: bool = False) -> MetricScores:
    """Object-mean over every track of every video."""
    if not pairs:
        raise ValueError("no videos to score")
    per_object = {}
    per_video = {}
    for pred, gt in pairs:
        s = score_video(pred, gt, tolerance_px, include_first)
        per_video[gt.video_id] = (s.j_mean, s.f_mean, s.jf)
        for oid, jf in s.per_object.items():
            per_object[(gt.video_id, oid)] = jf
    return MetricScores.from_objects(per_object, per_video=per_video)
