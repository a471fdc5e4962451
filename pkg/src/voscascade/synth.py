"""Deterministic synthetic videos with scripted tracker failures.

Objects are axis-aligned rectangles, so every IoU and contour count in a
generated fixture can be worked out from the script by hand. A script renders
a ground-truth stream plus two prediction streams (A and B) that equal the
ground truth except where injections apply:

``dropout``
    the object is erased from the target stream.
``displacement``
    the rectangle is translated far enough that its IoU with the true
    rectangle is at most 0.1.
``fragmentation``
    the rectangle is replaced by ``pieces`` separate square blocks laid on a
    lattice inside it, giving exactly ``pieces`` external contours.

Script JSON::

    {"video_id": "v0", "length": 20, "canvas": [64, 48], "seed": 0,
     "objects": [{"id": 1, "start": [4, 4, 10, 8], "velocity": [1, 0]},
                 {"id": 2, "rects": [[40, 30, 6, 6], null, ...]}],
     "injections": [{"target": "A", "kind": "dropout", "object": 1, "frames": [3, 15]}]}

``frames`` is a half-open range ``[start, stop)``. A file may also hold
``{"videos": [script, ...]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .masks import MAX_OBJECT_ID, LabelMap, VideoPrediction

Rect = Tuple[int, int, int, int]  # x, y, width, height

KINDS = ("dropout", "displacement", "fragmentation")
MAX_DISPLACED_IOU = 0.1


class ScriptError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectTrack:
    object_id: int
    rects: Tuple[Optional[Rect], ...]


@dataclass(frozen=True)
class Injection:
    target: str
    kind: str
    object_id: int
    start: int
    stop: int
    offset: Optional[Tuple[int, int]] = None
    pieces: int = 8
    block: int = 2

    def covers(self, frame: int) -> bool:
        return self.start <= frame < self.stop


@dataclass(frozen=True)
class FailureScript:
    video_id: str
    length: int
    canvas: Tuple[int, int]  # width, height
    objects: Tuple[ObjectTrack, ...]
    injections: Tuple[Injection, ...] = ()
    seed: int = 0

    def __post_init__(self):
        validate(self)


def rect_iou(r: Rect, s: Rect) -> float:
    ix = max(0, min(r[0] + r[2], s[0] + s[2]) - max(r[0], s[0]))
    iy = max(0, min(r[1] + r[3], s[1] + s[3]) - max(r[1], s[1]))
    inter = ix * iy
    union = r[2] * r[3] + s[2] * s[3] - inter
    return inter / union


def _inside(r: Rect, canvas: Tuple[int, int]) -> bool:
    x, y, w, h = r
    return w >= 1 and h >= 1 and x >= 0 and y >= 0 and x + w <= canvas[0] and y + h <= canvas[1]


def lattice_capacity(rect: Rect, block: int) -> int:
    _, _, w, h = rect
    return ((w + 1) // (block + 1)) * ((h + 1) // (block + 1))


def validate(script: FailureScript) -> None:
    if script.length < 1:
        raise ScriptError(f"{script.video_id}: length must be >= 1")
    width, height = script.canvas
    if width < 1 or height < 1:
        raise ScriptError(f"{script.video_id}: canvas must be positive, got {script.canvas}")
    tracks = {}
    for track in script.objects:
        if not 1 <= track.object_id <= MAX_OBJECT_ID:
            raise ScriptError(f"{script.video_id}: object id {track.object_id} out of range")
        if track.object_id in tracks:
            raise ScriptError(f"{script.video_id}: object id {track.object_id} declared twice")
        if len(track.rects) != script.length:
            raise ScriptError(f"{script.video_id}: object {track.object_id} has "
                              f"{len(track.rects)} rectangles for {script.length} frames")
        for i, r in enumerate(track.rects):
            if r is not None and not _inside(r, script.canvas):
                raise ScriptError(f"{script.video_id}: object {track.object_id} frame {i}: "
                                  f"rectangle {list(r)} leaves the {width}x{height} canvas")
        tracks[track.object_id] = track
    for inj in script.injections:
        where = f"{script.video_id}: {inj.kind} injection on {inj.target}"
        if inj.target not in ("A", "B"):
            raise ScriptError(f"{where}: target must be 'A' or 'B'")
        if inj.kind not in KINDS:
            raise ScriptError(f"{where}: unknown kind, expected one of {KINDS}")
        if inj.object_id not in tracks:
            raise ScriptError(f"{where}: unknown object {inj.object_id}")
        if not 0 <= inj.start < inj.stop <= script.length:
            raise ScriptError(f"{where}: frame range [{inj.start}, {inj.stop}) outside "
                              f"[0, {script.length})")
        if inj.kind == "fragmentation" and (inj.pieces < 1 or inj.block < 1):
            raise ScriptError(f"{where}: pieces and block must be >= 1")
        for frame in range(inj.start, inj.stop):
            rect = tracks[inj.object_id].rects[frame]
            if rect is None:
                continue
            if inj.kind == "displacement":
                displaced_rect(rect, script.canvas, inj.offset, where=f"{where}, frame {frame}")
            elif inj.kind == "fragmentation" and lattice_capacity(rect, inj.block) < inj.pieces:
                raise ScriptError(f"{where}, frame {frame}: rectangle {list(rect)} holds at most "
                                  f"{lattice_capacity(rect, inj.block)} blocks of size {inj.block}")


def displaced_rect(rect: Rect, canvas: Tuple[int, int], offset: Optional[Tuple[int, int]] = None,
                   where: str = "displacement") -> Rect:
    """Translate ``rect`` so that it overlaps its original position by IoU <= 0.1.

    Without an explicit offset the rectangle is moved by its own width or
    height (right, left, down, up: the first that stays on the canvas), which
    makes the two positions disjoint.
    """
    x, y, w, h = rect
    if offset is not None:
        candidates = [tuple(offset)]
    else:
        candidates = [(w, 0), (-w, 0), (0, h), (0, -h)]
    for dx, dy in candidates:
        moved = (x + dx, y + dy, w, h)
        if not _inside(moved, canvas):
            continue
        if rect_iou(rect, moved) > MAX_DISPLACED_IOU:
            raise ScriptError(f"{where}: offset {(dx, dy)} keeps IoU "
                              f"{rect_iou(rect, moved):.3f} above {MAX_DISPLACED_IOU}")
        return moved
    raise ScriptError(f"{where}: no displacement of {list(rect)} fits on the canvas")


def fragment_blocks(rect: Rect, pieces: int, block: int, rng: np.random.Generator) -> List[Rect]:
    """``pieces`` blocks on a lattice of pitch ``block + 1`` inside ``rect``.

    The one-pixel gaps keep every block its own 8-connected component.
    """
    x, y, w, h = rect
    pitch = block + 1
    cols, rows = (w + 1) // pitch, (h + 1) // pitch
    cells = rng.choice(cols * rows, size=pieces, replace=False)
    return [(x + (c % cols) * pitch, y + (c // cols) * pitch, block, block) for c in sorted(cells)]


def _paint(canvas: np.ndarray, rect: Rect, value: int) -> None:
    x, y, w, h = rect
    canvas[y:y + h, x:x + w] = value


def _shapes(script: FailureScript, stream: str, frame: int, track: ObjectTrack) -> List[Rect]:
    rect = track.rects[frame]
    if rect is None:
        return []
    active = [inj for inj in script.injections
              if inj.target == stream and inj.object_id == track.object_id and inj.covers(frame)]
    kinds = {inj.kind: inj for inj in active}
    if "dropout" in kinds:
        return []
    if "displacement" in kinds:
        rect = displaced_rect(rect, script.canvas, kinds["displacement"].offset)
    if "fragmentation" in kinds:
        inj = kinds["fragmentation"]
        rng = np.random.default_rng([script.seed, frame, track.object_id, ord(stream)])
        return fragment_blocks(rect, inj.pieces, inj.block, rng)
    return [rect]


def render(script: FailureScript, stream: Optional[str] = None) -> VideoPrediction:
    """Render the ground truth (``stream=None``) or prediction stream ``"A"``/``"B"``."""
    width, height = script.canvas
    frames = []
    for frame in range(script.length):
        canvas = np.zeros((height, width), dtype=np.uint8)
        for track in sorted(script.objects, key=lambda t: t.object_id):
            if stream is None:
                shapes = [track.rects[frame]] if track.rects[frame] is not None else []
            else:
                shapes = _shapes(script, stream, frame, track)
            for r in shapes:
                _paint(canvas, r, track.object_id)
        frames.append((frame, LabelMap(canvas)))
    return VideoPrediction(script.video_id, tuple(frames))


def generate(script: FailureScript) -> Tuple[VideoPrediction, VideoPrediction, VideoPrediction]:
    """(ground truth, stream A, stream B) for ``script``."""
    return render(script), render(script, "A"), render(script, "B")


def _rect(value, where: str) -> Optional[Rect]:
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) != 4 or not all(isinstance(v, int) for v in value):
        raise ScriptError(f"{where}: rectangle must be [x, y, width, height] integers, got {value!r}")
    return tuple(value)


def _track(obj: dict, length: int, where: str) -> ObjectTrack:
    if "id" not in obj:
        raise ScriptError(f"{where}: missing 'id'")
    if "rects" in obj:
        rects = tuple(_rect(r, f"{where}.rects[{i}]") for i, r in enumerate(obj["rects"]))
    elif "start" in obj:
        x, y, w, h = _rect(obj["start"], f"{where}.start")
        dx, dy = obj.get("velocity", (0, 0))
        first, stop = obj.get("frames", (0, length))
        rects = tuple((x + dx * (i - first), y + dy * (i - first), w, h) if first <= i < stop else None
                      for i in range(length))
    else:
        raise ScriptError(f"{where}: needs either 'rects' or 'start'")
    return ObjectTrack(int(obj["id"]), rects)


def script_from_dict(doc: dict) -> FailureScript:
    where = f"script {doc.get('video_id', '?')!r}"
    try:
        length = int(doc["length"])
        canvas = tuple(int(v) for v in doc["canvas"])
        objects = tuple(_track(o, length, f"{where}.objects[{i}]") for i, o in enumerate(doc["objects"]))
        injections = []
        for i, inj in enumerate(doc.get("injections", [])):
            start, stop = inj["frames"]
            offset = inj.get("offset")
            injections.append(Injection(
                target=inj["target"], kind=inj["kind"], object_id=int(inj["object"]),
                start=int(start), stop=int(stop),
                offset=tuple(offset) if offset is not None else None,
                pieces=int(inj.get("pieces", 8)), block=int(inj.get("block", 2)),
            ))
        return FailureScript(str(doc["video_id"]), length, canvas, objects, tuple(injections),
                             int(doc.get("seed", 0)))
    except KeyError as exc:
        raise ScriptError(f"{where}: missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScriptError):
            raise
        raise ScriptError(f"{where}: {exc}") from None


def load_scripts(path: Path | str) -> List[FailureScript]:
    """Parse a script file. JSON syntax errors propagate as ``json.JSONDecodeError``."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    docs = doc["videos"] if isinstance(doc, dict) and "videos" in doc else [doc]
    if not isinstance(docs, list) or not all(isinstance(d, dict) for d in docs):
        raise ScriptError("script file must hold an object or {\"videos\": [objects]}")
    scripts = [script_from_dict(d) for d in docs]
    ids = [s.video_id for s in scripts]
    if len(set(ids)) != len(ids):
        raise ScriptError("duplicate video_id in script file")
    return scripts
