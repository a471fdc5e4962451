"""Command-line entry point: ``voscascade {fuse,evaluate,diagnose,synth,manifest}``.

Exit codes: 0 success, 1 validation failure (bad inputs, unscoreable videos,
collisions), 2 usage error (bad flags, missing roots or output parent).
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, Optional

from . import __version__
from .cascade import (CascadeParams, Granularity, classify_frames, decide_objects, decide_video,
                      fuse, noise_by_object, noise_statistics)
from .contours import ContourMode
from .manifest import ManifestCollisionError, build_manifest, manifest_stats, write_manifest
from .maskio import (SCHEMA_VERSION, MaskIOError, SequenceLayout, dumps_json, read_sequence,
                     write_json, write_report, write_sequence)
from .metrics import MetricScores, score_video
from .synth import ScriptError, generate, load_scripts

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2
THREADS_ENV = "VOSCASCADE_THREADS"

STREAMS_HELP = """\
Stream A is the primary model (typically a stable long-video tracker) and is
kept unless a rule fires. Stream B is the secondary model."""


class UsageError(Exception):
    pass


def _err(msg: str) -> None:
    print(f"voscascade: {msg}", file=sys.stderr)


def video_dirs(root: Path) -> List[str]:
    return sorted(p.name for p in root.iterdir() if p.is_dir() and not p.name.startswith("."))


def _existing_dir(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_dir():
        raise UsageError(f"{what} is not a directory: {p}")
    return p


def _output_dir(path: str) -> Path:
    p = Path(path)
    parent = p.resolve().parent
    if not parent.is_dir():
        raise UsageError(f"parent of output directory does not exist: {parent}")
    if p.exists() and not p.is_dir():
        raise UsageError(f"output path exists and is not a directory: {p}")
    p.mkdir(exist_ok=True)
    return p


def _output_file(path: Optional[str]) -> Optional[Path]:
    if path is None:
        return None
    p = Path(path)
    if not p.resolve().parent.is_dir():
        raise UsageError(f"parent of output file does not exist: {p.resolve().parent}")
    return p


def resolve_threads(value: Optional[int]) -> int:
    if value is None:
        env = os.environ.get(THREADS_ENV)
        if env is None:
            return 1
        try:
            value = int(env)
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if value < 1:
        raise UsageError(f"thread count must be >= 1, got {value}")
    return value


def run_pool(fn: Callable, items: Iterable, threads: int) -> list:
    items = list(items)
    if threads == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def publish_dir(build: Callable[[Path], None], final: Path) -> None:
    """Build a directory under a temporary name, then move it into place."""
    tmp = Path(tempfile.mkdtemp(prefix=f".{final.name}.", dir=final.parent))
    try:
        build(tmp)
        if final.exists():
            shutil.rmtree(final)
        os.replace(tmp, final)
    finally:
        if tmp.exists():
            shutil.rmtree(tmp)


def params_from_args(args) -> CascadeParams:
    try:
        return CascadeParams(
            iou_threshold=args.iou_threshold,
            miss_frame_threshold=args.miss_frames,
            wrong_frame_threshold=args.wrong_frames,
            contour_noise_threshold=args.noise_contours,
            min_pixels=args.min_pixels,
            granularity=args.granularity,
            contour_mode=args.contours,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# fuse ----------------------------------------------------------------------

def _fuse_one(video_id: str, root_a: Path, root_b: Path, out: Path,
              in_a: bool, in_b: bool, params: CascadeParams) -> dict:
    try:
        if in_a and in_b:
            a = read_sequence(SequenceLayout(root_a, video_id))
            b = read_sequence(SequenceLayout(root_b, video_id))
            fused, report = fuse(a, b, params)
            publish_dir(lambda tmp: write_sequence(fused, SequenceLayout(tmp.parent, tmp.name)),
                        out / video_id)
            write_report(report, out / f"{video_id}.json")
            entry = {"status": "fused", **report.decision.to_dict()}
            if report.object_decisions:
                entry["object_sources"] = {str(k): d.source.value
                                           for k, d in sorted(report.object_decisions.items())}
            return entry
        root, tag = (root_a, "A") if in_a else (root_b, "B")
        read_sequence(SequenceLayout(root, video_id))
        publish_dir(lambda tmp: shutil.copytree(root / video_id, tmp, dirs_exist_ok=True),
                    out / video_id)
        return {"status": f"copied_from_{tag}", "source": tag}
    except (MaskIOError, ValueError, OSError) as exc:
        return {"status": "error", "error": str(exc)}


def cmd_fuse(args) -> int:
    root_a = _existing_dir(args.pred_a, "stream A root")
    root_b = _existing_dir(args.pred_b, "stream B root")
    params = params_from_args(args)
    threads = resolve_threads(args.threads)
    out = _output_dir(args.out)

    va, vb = set(video_dirs(root_a)), set(video_dirs(root_b))
    videos = sorted(va | vb)
    results = run_pool(lambda v: _fuse_one(v, root_a, root_b, out, v in va, v in vb, params),
                       videos, threads)
    per_video = dict(zip(videos, results))
    errors = [{"video_id": v, "error": r["error"]} for v, r in per_video.items() if r["status"] == "error"]
    summary = {
        "schema": SCHEMA_VERSION,
        "parameters": params.to_dict(),
        "videos": per_video,
        "only_in_a": sorted(va - vb),
        "only_in_b": sorted(vb - va),
        "errors": errors,
    }
    write_json(summary, out / "summary.json")
    for e in errors:
        _err(f"{e['video_id']}: {e['error']}")
    fused = sum(r["status"] == "fused" for r in results)
    print(f"fused {fused} video(s), copied {len(va ^ vb)}, errors {len(errors)} -> {out}")
    return EXIT_INVALID if errors else EXIT_OK


# evaluate ------------------------------------------------------------------

def _score_one(video_id: str, pred_root: Path, gt_root: Path, args):
    try:
        gt = read_sequence(SequenceLayout(gt_root, video_id))
        if not (pred_root / video_id).is_dir():
            raise MaskIOError("prediction missing for video", pred_root / video_id)
        pred = read_sequence(SequenceLayout(pred_root, video_id))
        return score_video(pred, gt, args.tolerance, args.include_first_frame)
    except (MaskIOError, ValueError) as exc:
        return exc


def cmd_evaluate(args) -> int:
    pred_root = _existing_dir(args.pred, "prediction root")
    gt_root = _existing_dir(args.gt, "ground-truth root")
    threads = resolve_threads(args.threads)
    output = _output_file(args.output)
    if args.tolerance is not None and args.tolerance < 0:
        raise UsageError("--boundary-tolerance must be >= 0")

    videos = video_dirs(gt_root)
    results = run_pool(lambda v: _score_one(v, pred_root, gt_root, args), videos, threads)
    per_object, per_video, errors = {}, {}, []
    for video_id, res in zip(videos, results):
        if isinstance(res, Exception):
            errors.append({"video_id": video_id, "error": str(res)})
            continue
        per_video[video_id] = (res.j_mean, res.f_mean, res.jf)
        for oid, jf in res.per_object.items():
            per_object[(video_id, oid)] = jf

    doc = {"schema": SCHEMA_VERSION, "errors": errors}
    if per_object:
        doc.update(MetricScores.from_objects(per_object, per_video=per_video).to_dict())
    else:
        doc.update({"global": None, "per_video": {}, "per_object": {}})
    text = dumps_json(doc)
    sys.stdout.write(text)
    if output is not None:
        write_json(doc, output)
    for e in errors:
        _err(f"{e['video_id']}: {e['error']}")
    return EXIT_INVALID if errors or not per_object else EXIT_OK


# diagnose ------------------------------------------------------------------

def _diagnose_one(video_id: str, root_a: Path, root_b: Path, params: CascadeParams) -> dict:
    try:
        a = read_sequence(SequenceLayout(root_a, video_id))
        b = read_sequence(SequenceLayout(root_b, video_id))
        records = classify_frames(a, b, params)
        decision = decide_video(a, b, records, params)
        na, nb = noise_statistics(a, b, records, params)
        entry = {
            "decision": decision.to_dict(),
            "noise_by_object": {
                "A": {str(k): v for k, v in noise_by_object(na, params.contour_noise_threshold).items()},
                "B": {str(k): v for k, v in noise_by_object(nb, params.contour_noise_threshold).items()},
            },
            "records": [r.to_dict() for r in records],
        }
        if params.granularity is Granularity.OBJECT:
            entry["object_decisions"] = {str(k): d.to_dict()
                                         for k, d in decide_objects(a, b, records, params).items()}
        return entry
    except (MaskIOError, ValueError) as exc:
        return {"error": str(exc)}


def cmd_diagnose(args) -> int:
    root_a = _existing_dir(args.pred_a, "stream A root")
    root_b = _existing_dir(args.pred_b, "stream B root")
    params = params_from_args(args)
    threads = resolve_threads(args.threads)
    output = _output_file(args.output)

    va, vb = set(video_dirs(root_a)), set(video_dirs(root_b))
    if args.video:
        if args.video not in va or args.video not in vb:
            _err(f"video {args.video!r} is not present in both roots")
            return EXIT_INVALID
        videos = [args.video]
    else:
        videos = sorted(va & vb)
    results = run_pool(lambda v: _diagnose_one(v, root_a, root_b, params), videos, threads)
    doc = {
        "schema": SCHEMA_VERSION,
        "parameters": params.to_dict(),
        "videos": dict(zip(videos, results)),
        "only_in_a": [] if args.video else sorted(va - vb),
        "only_in_b": [] if args.video else sorted(vb - va),
    }
    sys.stdout.write(dumps_json(doc))
    if output is not None:
        write_json(doc, output)
    failed = [v for v, r in doc["videos"].items() if "error" in r]
    for v in failed:
        _err(f"{v}: {doc['videos'][v]['error']}")
    return EXIT_INVALID if failed else EXIT_OK


# synth ---------------------------------------------------------------------

STREAM_DIRS = ("gt", "predA", "predB")


def cmd_synth(args) -> int:
    script_path = Path(args.script)
    if not script_path.is_file():
        raise UsageError(f"script file not found: {script_path}")
    out = _output_dir(args.out)
    try:
        scripts = load_scripts(script_path)
    except json.JSONDecodeError as exc:
        _err(f"{script_path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}")
        return EXIT_INVALID
    except ScriptError as exc:
        _err(f"{script_path}: {exc}")
        return EXIT_INVALID

    for name in STREAM_DIRS:
        (out / name).mkdir(exist_ok=True)
    for script in scripts:
        streams = generate(script)
        for name, stream in zip(STREAM_DIRS, streams):
            publish_dir(lambda tmp, s=stream: write_sequence(s, SequenceLayout(tmp.parent, tmp.name)),
                        out / name / script.video_id)
    print(f"generated {len(scripts)} video(s) -> {out}")
    return EXIT_OK


# manifest ------------------------------------------------------------------

def cmd_manifest(args) -> int:
    annotated = _existing_dir(args.annotated, "annotated root")
    pseudo = _existing_dir(args.pseudo, "pseudo-label root")
    out_path = _output_file(args.out)
    try:
        m = build_manifest(annotated, pseudo)
    except ManifestCollisionError as exc:
        _err(str(exc))
        return EXIT_INVALID
    manifest_path, errors_path = write_manifest(m, out_path)
    stats = manifest_stats(m)
    sys.stdout.write(dumps_json({"schema": SCHEMA_VERSION, "stats": stats}))
    for f in m.failures:
        _err(f"skipped {f['source']} video {f['video_id']}: {f['error']}")
    return EXIT_OK


# parser --------------------------------------------------------------------

def _add_cascade_flags(p: argparse.ArgumentParser) -> None:
    d = CascadeParams()
    g = p.add_argument_group("cascade parameters")
    g.add_argument("--iou-threshold", type=float, default=d.iou_threshold,
                   help="IoU at or below which two valid masks disagree (default %(default)s)")
    g.add_argument("--miss-frames", type=int, default=d.miss_frame_threshold,
                   help="miss-tracking fires when more frames than this miss (default %(default)s)")
    g.add_argument("--wrong-frames", type=int, default=d.wrong_frame_threshold,
                   help="wrong-tracking fires when more frames than this disagree (default %(default)s)")
    g.add_argument("--noise-contours", type=int, default=d.contour_noise_threshold,
                   help="a mask with more contours than this is high-noise (default %(default)s)")
    g.add_argument("--min-pixels", type=int, default=d.min_pixels,
                   help="pixels needed for a mask to count as valid (default %(default)s)")
    g.add_argument("--granularity", choices=[g.value for g in Granularity], default=d.granularity.value,
                   help="select one stream per video or per object track (default %(default)s)")
    g.add_argument("--contours", choices=[m.value for m in ContourMode], default=d.contour_mode.value,
                   help="whether hole boundaries count as contours (default %(default)s)")


def _add_threads(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voscascade",
        description="Cascaded fusion and J/F evaluation of video object segmentation masks.",
        epilog=STREAMS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="fuse two prediction roots video by video",
                       description="Fuse two prediction roots. " + STREAMS_HELP)
    p.add_argument("pred_a", help="root of stream A (primary) masks, one directory per video")
    p.add_argument("pred_b", help="root of stream B (secondary) masks")
    p.add_argument("out", help="output root; fused masks, <video>.json reports and summary.json")
    _add_cascade_flags(p)
    _add_threads(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("evaluate", help="score predictions against ground truth (J, F, J&F)")
    p.add_argument("pred", help="prediction root")
    p.add_argument("gt", help="ground-truth root")
    p.add_argument("--output", "-o", help="also write the scores JSON here")
    p.add_argument("--boundary-tolerance", dest="tolerance", type=int, default=None,
                   help="boundary match distance in pixels (default: ceil(0.008 * diagonal))")
    p.add_argument("--include-first-frame", action="store_true",
                   help="score the first frame too (it is the given prompt in semi-supervised VOS)")
    _add_threads(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("diagnose", help="report disagreement statistics without fusing",
                       description="Report per-frame disagreement records and the decision "
                                   "the cascade would take. " + STREAMS_HELP)
    p.add_argument("pred_a")
    p.add_argument("pred_b")
    p.add_argument("--video", help="only report this video")
    p.add_argument("--output", "-o", help="also write the JSON dump here")
    _add_cascade_flags(p)
    _add_threads(p)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("synth", help="render a failure script into gt/, predA/ and predB/")
    p.add_argument("script", help="JSON failure script")
    p.add_argument("out", help="output root")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("manifest", help="merge annotated and pseudo-labelled sequences")
    p.add_argument("annotated", help="root with JPEGImages/ and Annotations/ of annotated videos")
    p.add_argument("pseudo", help="root with JPEGImages/ and Annotations/ of pseudo-labelled videos")
    p.add_argument("out", help="manifest path (JSON lines); manifest_errors.json goes next to it")
    p.set_defaults(func=cmd_manifest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
