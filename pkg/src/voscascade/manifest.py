"""Training manifest merging annotated sequences with pseudo-labelled ones.

Both roots use the DAVIS/MOSE layout::

    <root>/JPEGImages/<video_id>/<stem>.jpg
    <root>/Annotations/<video_id>/<stem>.png

Pseudo labels are taken as they are: validation only checks that the mask
sequence decodes and, for pseudo-labelled videos, that every frame image has
a mask. Content quality is never inspected.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple

from .maskio import SCHEMA_VERSION, MaskIOError, SequenceLayout, read_sequence, write_json
from .masks import object_ids

FRAMES_DIR = "JPEGImages"
MASKS_DIR = "Annotations"
SOURCES = ("annotated", "pseudo")
IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png"}


class ManifestCollisionError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    video_id: str
    frames_dir: str
    masks_dir: str
    source: str
    frame_count: int
    object_count: int


@dataclass
class DatasetManifest:
    entries: List[ManifestEntry] = field(default_factory=list)
    failures: List[dict] = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"schema": SCHEMA_VERSION, **asdict(e)}, sort_keys=True) for e in self.entries]
        return "".join(line + "\n" for line in lines)


def _video_dirs(root: Path) -> List[str]:
    masks = root / MASKS_DIR
    if not masks.is_dir():
        return []
    return sorted(p.name for p in masks.iterdir() if p.is_dir() and not p.name.startswith("."))


def _frame_stems(directory: Path) -> List[str]:
    return sorted(p.stem for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _entry(root: Path, video_id: str, source: str) -> ManifestEntry:
    frames_dir = root / FRAMES_DIR / video_id
    masks_dir = root / MASKS_DIR / video_id
    if not frames_dir.is_dir():
        raise MaskIOError("frame directory missing", frames_dir)
    seq = read_sequence(SequenceLayout(root / MASKS_DIR, video_id))
    if source == "pseudo":
        have = {int(i) for i in seq.frame_indices}
        missing = [s for s in _frame_stems(frames_dir) if not s.isdigit() or int(s) not in have]
        if missing:
            raise MaskIOError(f"{len(missing)} frame(s) without a pseudo-label mask "
                              f"(first: {missing[0]})", masks_dir)
    return ManifestEntry(video_id, str(frames_dir), str(masks_dir), source,
                         len(seq), len(object_ids(seq)))


def build_manifest(annotated_root: Path | str, pseudo_root: Path | str) -> DatasetManifest:
    roots = {"annotated": Path(annotated_root), "pseudo": Path(pseudo_root)}
    for source, root in roots.items():
        if not root.is_dir():
            raise FileNotFoundError(f"{source} root does not exist: {root}")
    videos = {source: _video_dirs(root) for source, root in roots.items()}
    clash = sorted(set(videos["annotated"]) & set(videos["pseudo"]))
    if clash:
        raise ManifestCollisionError(
            f"video_id present in both roots: {', '.join(clash)}")

    manifest = DatasetManifest()
    for source in SOURCES:
        for video_id in videos[source]:
            try:
                manifest.entries.append(_entry(roots[source], video_id, source))
            except MaskIOError as exc:
                manifest.failures.append({"video_id": video_id, "source": source, "error": str(exc)})
    return manifest


@dataclass
class SourceStats:
    videos: int = 0
    objects: int = 0
    masks: int = 0


def manifest_stats(m: DatasetManifest) -> Dict[str, dict]:
    """Videos, object tracks and object masks per source plus a total.

    ``masks`` counts (frame, object) occurrences, re-read from the mask files.
    """
    stats = {source: SourceStats() for source in SOURCES}
    for e in m.entries:
        masks_dir = Path(e.masks_dir)
        seq = read_sequence(SequenceLayout(masks_dir.parent, masks_dir.name))
        s = stats[e.source]
        s.videos += 1
        s.objects += len(object_ids(seq))
        s.masks += sum(len(lm.ids()) for _, lm in seq.frames)
    total = SourceStats(*(sum(getattr(s, f) for s in stats.values()) for f in ("videos", "objects", "masks")))
    out = {source: asdict(s) for source, s in stats.items()}
    out["total"] = asdict(total)
    return out


def write_manifest(m: DatasetManifest, path: Path | str) -> Tuple[Path, Path]:
    """Write ``manifest.jsonl`` content to ``path`` and the failures next to it."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(m.to_jsonl(), encoding="utf-8")
    tmp.replace(path)
    errors_path = path.with_name("manifest_errors.json")
    write_json({"schema": SCHEMA_VERSION, "errors": m.failures}, errors_path)
    return path, errors_path
