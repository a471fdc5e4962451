"""Label maps, binary masks and per-video prediction containers.

A ``LabelMap`` holds one frame of a multi-object segmentation: every pixel is
an object identifier, 0 meaning background. Identifiers are capped at 255 so
that every map fits in an 8-bit indexed PNG.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence, Tuple, Union

import numpy as np

MAX_OBJECT_ID = 255


class DimensionMismatchError(ValueError):
    pass


class IdentifierRangeError(ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LabelMap:
    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError(f"label map must be a non-empty 2-D grid, got shape {arr.shape}")
        if arr.dtype.kind not in "iub":
            raise TypeError(f"label map must hold integers, got dtype {arr.dtype}")
        if arr.size and (arr.min() < 0 or arr.max() > MAX_OBJECT_ID):
            raise IdentifierRangeError(
                f"object identifiers must lie in [0, {MAX_OBJECT_ID}], "
                f"got range [{int(arr.min())}, {int(arr.max())}]"
            )
        object.__setattr__(self, "labels", _frozen(arr.astype(np.uint8, copy=True)))

    @classmethod
    def zeros(cls, height: int, width: int) -> "LabelMap":
        return cls(np.zeros((height, width), dtype=np.uint8))

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.labels.shape

    def ids(self) -> set:
        present = np.unique(self.labels)
        return {int(i) for i in present if i != 0}

    def __eq__(self, other):
        if not isinstance(other, LabelMap):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BinaryMask:
    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 2:
            raise ValueError(f"binary mask must be 2-D, got shape {arr.shape}")
        object.__setattr__(self, "bits", _frozen(arr.astype(bool, copy=True)))

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.bits.shape

    def area(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    __hash__ = None


MaskLike = Union[BinaryMask, np.ndarray]


def as_bits(m: MaskLike) -> np.ndarray:
    """Boolean view of a mask, accepting raw arrays for convenience."""
    if isinstance(m, BinaryMask):
        return m.bits
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
    return arr.astype(bool, copy=False)


@dataclass(frozen=True)
class VideoPrediction:
    """One model's label maps for one video, ordered by frame index."""

    video_id: str
    frames: Tuple[Tuple[int, LabelMap], ...] = field(default=())

    def __post_init__(self):
        frames = tuple((int(i), m) for i, m in self.frames)
        prev = None
        shape = None
        for idx, lm in frames:
            if not isinstance(lm, LabelMap):
                raise TypeError(f"frame {idx}: expected LabelMap, got {type(lm).__name__}")
            if idx < 0:
                raise ValueError(f"frame index must be non-negative, got {idx}")
            if prev is not None and idx <= prev:
                raise ValueError(
                    f"frame indices must be strictly increasing ({prev} then {idx})"
                )
            if shape is None:
                shape = lm.shape
            elif lm.shape != shape:
                raise DimensionMismatchError(
                    f"frame {idx} has shape {lm.shape}, expected {shape}"
                )
            prev = idx
        object.__setattr__(self, "frames", frames)

    @classmethod
    def from_arrays(cls, video_id: str, arrays: Sequence[np.ndarray],
                    indices: Iterable[int] | None = None) -> "VideoPrediction":
        if indices is None:
            indices = range(len(arrays))
        return cls(video_id, tuple((i, LabelMap(a)) for i, a in zip(indices, arrays)))

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[Tuple[int, LabelMap]]:
        return iter(self.frames)

    @property
    def frame_indices(self) -> Tuple[int, ...]:
        return tuple(i for i, _ in self.frames)

    @property
    def shape(self) -> Tuple[int, int] | None:
        return self.frames[0][1].shape if self.frames else None

    def as_dict(self) -> dict:
        return dict(self.frames)

    def stack(self) -> np.ndarray:
        """All frames as a (T, H, W) uint8 array."""
        return np.stack([lm.labels for _, lm in self.frames])


def object_ids(v: VideoPrediction) -> list:
    """Ascending list of nonzero identifiers present anywhere in ``v``."""
    seen = set()
    for _, lm in v.frames:
        seen |= lm.ids()
    return sorted(seen)


def binary_mask(m: LabelMap, object_id: int) -> BinaryMask:
    if object_id == 0:
        raise ValueError("background is not an object")
    if object_id < 0:
        raise ValueError(f"object identifier must be positive, got {object_id}")
    return BinaryMask(m.labels == object_id)


def is_valid(m: MaskLike, min_pixels: int = 1) -> bool:
    if min_pixels < 1:
        raise ValueError(f"min_pixels must be >= 1, got {min_pixels}")
    return int(np.count_nonzero(as_bits(m))) >= min_pixels


def overlap_counts(a: MaskLike, b: MaskLike) -> Tuple[int, int]:
    """(intersection, union) pixel counts as exact integers."""
    ab, bb = as_bits(a), as_bits(b)
    if ab.shape != bb.shape:
        raise DimensionMismatchError(f"mask shapes differ: {ab.shape} vs {bb.shape}")
    inter = int(np.count_nonzero(ab & bb))
    union = int(np.count_nonzero(ab | bb))
    return inter, union


def iou(a: MaskLike, b: MaskLike) -> float:
    """Intersection over union; two empty masks agree perfectly (1.0)."""
    inter, union = overlap_counts(a, b)
    if union == 0:
        return 1.0
    return inter / union
