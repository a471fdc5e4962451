"""Reading and writing mask sequences and JSON reports.

On disk a sequence is ``<root>/<video_id>/<stem>.png`` where every PNG is an
8-bit palette image whose pixel values are object identifiers, as in the
DAVIS / MOSE annotation releases. Frame indices come from the numeric stems.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, List

import numpy as np
from PIL import Image

from .masks import MAX_OBJECT_ID, IdentifierRangeError, LabelMap, VideoPrediction

SCHEMA_VERSION = 1
_STEM = re.compile(r"^\d+$")


class MaskIOError(Exception):
    def __init__(self, message: str, path: Path | str | None = None):
        self.path = Path(path) if path is not None else None
        super().__init__(f"{message}: {path}" if path is not None else message)


class NoFramesError(MaskIOError):
    pass


class FrameReadError(MaskIOError):
    pass


class NotIndexedError(MaskIOError):
    pass


class FrameSizeError(MaskIOError):
    pass


class DuplicateFrameError(MaskIOError):
    pass


class FrameNameError(MaskIOError):
    pass


def davis_palette() -> List[int]:
    """The 256-entry bit-interleaved colour map used by DAVIS annotations."""
    palette = []
    for i in range(256):
        r = g = b = 0
        c = i
        for j in range(8):
            r |= ((c >> 0) & 1) << (7 - j)
            g |= ((c >> 1) & 1) << (7 - j)
            b |= ((c >> 2) & 1) << (7 - j)
            c >>= 3
        palette.extend((r, g, b))
    return palette


_PALETTE = davis_palette()


@dataclass(frozen=True)
class SequenceLayout:
    root: Path
    video_id: str
    digits: int = 5
    extension: str = ".png"

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))

    @property
    def directory(self) -> Path:
        return self.root / self.video_id

    def frame_path(self, index: int) -> Path:
        return self.directory / f"{index:0{self.digits}d}{self.extension}"


def list_frames(directory: Path | str, extension: str = ".png") -> List[tuple]:
    """(index, path) pairs sorted by the numeric stem."""
    directory = Path(directory)
    found = {}
    for p in directory.iterdir():
        if not p.is_file() or p.suffix.lower() != extension:
            continue
        if not _STEM.match(p.stem):
            raise FrameNameError("frame file name is not a numeric stem", p)
        idx = int(p.stem)
        if idx in found:
            raise DuplicateFrameError(
                f"frame index {idx} also provided by {found[idx].name}", p
            )
        found[idx] = p
    return sorted(found.items())


def read_label_map(path: Path | str) -> LabelMap:
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            arr = np.array(im)
    except (OSError, SyntaxError, ValueError) as exc:
        raise FrameReadError(f"cannot decode image ({exc})", path) from exc
    if mode != "P":
        raise NotIndexedError(f"expected an 8-bit indexed palette image, got mode {mode!r}", path)
    return LabelMap(arr)


def read_sequence(layout: SequenceLayout) -> VideoPrediction:
    directory = layout.directory
    if not directory.is_dir():
        raise NoFramesError("sequence directory does not exist", directory)
    entries = list_frames(directory, layout.extension)
    if not entries:
        raise NoFramesError("no frames found", directory)
    frames = []
    shape = None
    for idx, path in entries:
        lm = read_label_map(path)
        if shape is None:
            shape = lm.shape
        elif lm.shape != shape:
            raise FrameSizeError(
                f"frame is {lm.width}x{lm.height}, expected {shape[1]}x{shape[0]}", path
            )
        frames.append((idx, lm))
    return VideoPrediction(layout.video_id, tuple(frames))


def write_label_map(lm: LabelMap, path: Path | str) -> None:
    labels = np.asarray(lm.labels)
    if labels.size and int(labels.max()) > MAX_OBJECT_ID:
        raise IdentifierRangeError(f"identifier {int(labels.max())} does not fit in 8 bits")
    h, w = labels.shape
    im = Image.frombytes("P", (w, h), np.ascontiguousarray(labels, dtype=np.uint8).tobytes())
    im.putpalette(_PALETTE)
    im.save(path, format="PNG")


def write_sequence(v: VideoPrediction, layout: SequenceLayout) -> None:
    directory = layout.directory
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise MaskIOError(f"cannot create output directory ({exc})", directory) from exc
    for idx, lm in v.frames:
        path = layout.frame_path(idx)
        try:
            write_label_map(lm, path)
        except OSError as exc:
            raise MaskIOError(f"cannot write frame ({exc})", path) from exc


def dumps_json(doc: Any) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def write_json(doc: Any, path: Path | str) -> None:
    """Write JSON through a temporary file so readers never see a partial file."""
    path = Path(path)
    text = dumps_json(doc)
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    except OSError as exc:
        raise MaskIOError(f"cannot write ({exc})", path) from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise MaskIOError(f"cannot write ({exc})", path) from exc


def report_to_dict(report) -> dict:
    """JSON document for a FusionReport."""
    doc = {
        "schema": SCHEMA_VERSION,
        "video_id": report.video_id,
        "parameters": report.parameters.to_dict(),
        "decision": report.decision.to_dict(),
        "records": [r.to_dict() for r in sorted(report.per_frame, key=lambda r: (r.frame_index, r.object_id))],
    }
    if report.object_decisions:
        doc["object_decisions"] = {
            str(oid): d.to_dict() for oid, d in sorted(report.object_decisions.items())
        }
    return doc


def write_report(report, path: Path | str) -> None:
    write_json(report_to_dict(report), path)
