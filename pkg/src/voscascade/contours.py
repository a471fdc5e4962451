"""Contour counting used as the fragmentation (noise) signal.

A contour is a closed boundary curve. Each 8-connected foreground component
contributes one external contour, and each 4-connected background region that
does not reach the image border contributes one hole contour. This is the
same hierarchy a two-level ``findContours`` pass produces.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from .masks import MaskLike, as_bits

EIGHT = np.ones((3, 3), dtype=bool)
FOUR = ndimage.generate_binary_structure(2, 1)


class ContourMode(str, Enum):
    WITH_HOLES = "with-holes"
    EXTERNAL_ONLY = "external-only"


@dataclass(frozen=True)
class ContourStats:
    object_id: int
    frame_index: int
    external_contours: int
    hole_contours: int

    @property
    def total_contours(self) -> int:
        return self.external_contours + self.hole_contours


def count_components(bits: np.ndarray, connectivity: int = 8) -> int:
    structure = EIGHT if connectivity == 8 else FOUR
    _, n = ndimage.label(bits, structure=structure)
    return int(n)


def count_holes(bits: np.ndarray) -> int:
    """Number of 4-connected background regions enclosed by foreground."""
    if not bits.any():
        return 0
    # A one-pixel background frame merges every border-touching region into one.
    padded = np.pad(~bits, 1, constant_values=True)
    labels, n = ndimage.label(padded, structure=FOUR)
    return int(n) - 1


def count_contours(m: MaskLike, object_id: int = 0, frame_index: int = 0,
                   mode: ContourMode | str = ContourMode.WITH_HOLES) -> ContourStats:
    bits = as_bits(m)
    mode = ContourMode(mode)
    external = count_components(bits, 8)
    holes = count_holes(bits) if mode is ContourMode.WITH_HOLES else 0
    return ContourStats(object_id, frame_index, external, holes)


def is_high_noise(m: MaskLike, threshold: int = 6,
                  mode: ContourMode | str = ContourMode.WITH_HOLES) -> bool:
    if threshold < 1:
        raise ValueError(f"threshold must be >= 1, got {threshold}")
    return count_contours(m, mode=mode).total_contours > threshold
