"""Cascaded selection between two video object segmentation streams, plus J/F scoring."""

__version__ = "0.1.0"

from .cascade import (CascadeDecision, CascadeParams, DisagreementRecord, FusionReport, Granularity,
                      Kind, Reason, Source, classify_frames, decide, fuse)
from .contours import ContourStats, count_contours, is_high_noise
from .masks import BinaryMask, LabelMap, VideoPrediction, binary_mask, iou, is_valid, object_ids
from .metrics import MetricScores, boundary_f, region_j, score_dataset, score_video

__all__ = [
    "BinaryMask", "CascadeDecision", "CascadeParams", "ContourStats", "DisagreementRecord",
    "FusionReport", "Granularity", "Kind", "LabelMap", "MetricScores", "Reason", "Source",
    "VideoPrediction", "binary_mask", "boundary_f", "classify_frames", "count_contours", "decide",
    "fuse", "iou", "is_high_noise", "is_valid", "object_ids", "region_j", "score_dataset",
    "score_video",
]
