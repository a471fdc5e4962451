import json

import numpy as np
import pytest
from PIL import Image

from voscascade.cascade import CascadeParams, Source, fuse
from voscascade.maskio import (DuplicateFrameError, FrameReadError, FrameSizeError, NoFramesError,
                               NotIndexedError, SequenceLayout, davis_palette, read_sequence,
                               report_to_dict, write_report, write_sequence)
from voscascade.masks import IdentifierRangeError, VideoPrediction


def random_video(rng, vid="v", n=5, shape=(64, 64), max_id=4):
    frames = [rng.integers(0, max_id + 1, size=shape, dtype=np.uint8) for _ in range(n)]
    return VideoPrediction.from_arrays(vid, frames)


def save_png(path, arr):
    h, w = arr.shape
    im = Image.frombytes("P", (w, h), arr.astype(np.uint8).tobytes())
    im.putpalette(davis_palette())
    im.save(path)


def test_read_five_frames(tmp_path):
    rng = np.random.default_rng(0)
    v = random_video(rng)
    write_sequence(v, SequenceLayout(tmp_path, "v"))
    assert sorted(p.name for p in (tmp_path / "v").iterdir()) == [f"{i:05d}.png" for i in range(5)]
    back = read_sequence(SequenceLayout(tmp_path, "v"))
    assert back.frame_indices == (0, 1, 2, 3, 4)
    assert back == v


def test_dimension_mismatch_names_file(tmp_path):
    d = tmp_path / "v"
    d.mkdir()
    save_png(d / "00000.png", np.zeros((64, 64)))
    save_png(d / "00001.png", np.zeros((32, 32)))
    with pytest.raises(FrameSizeError) as err:
        read_sequence(SequenceLayout(tmp_path, "v"))
    assert err.value.path.name == "00001.png"


def test_empty_directory(tmp_path):
    (tmp_path / "v").mkdir()
    with pytest.raises(NoFramesError, match="no frames found"):
        read_sequence(SequenceLayout(tmp_path, "v"))


def test_non_indexed_image(tmp_path):
    d = tmp_path / "v"
    d.mkdir()
    Image.fromarray(np.zeros((4, 4, 3), np.uint8)).save(d / "00000.png")
    with pytest.raises(NotIndexedError) as err:
        read_sequence(SequenceLayout(tmp_path, "v"))
    assert err.value.path == d / "00000.png"


def test_unreadable_file(tmp_path):
    d = tmp_path / "v"
    d.mkdir()
    (d / "00000.png").write_bytes(b"not a png")
    with pytest.raises(FrameReadError):
        read_sequence(SequenceLayout(tmp_path, "v"))


def test_duplicate_index(tmp_path):
    d = tmp_path / "v"
    d.mkdir()
    save_png(d / "0.png", np.zeros((4, 4)))
    save_png(d / "00000.png", np.zeros((4, 4)))
    with pytest.raises(DuplicateFrameError):
        read_sequence(SequenceLayout(tmp_path, "v"))


def test_indices_from_stems_not_listing(tmp_path):
    d = tmp_path / "v"
    d.mkdir()
    for idx in (10, 2, 7):
        save_png(d / f"{idx}.png", np.full((3, 3), idx))
    v = read_sequence(SequenceLayout(tmp_path, "v"))
    assert v.frame_indices == (2, 7, 10)
    assert [int(lm.labels[0, 0]) for _, lm in v.frames] == [2, 7, 10]


def test_identifier_out_of_range():
    with pytest.raises(IdentifierRangeError):
        VideoPrediction.from_arrays("v", [np.full((2, 2), 300)])


def test_all_background(tmp_path):
    v = VideoPrediction.from_arrays("v", [np.zeros((5, 6), np.uint8)] * 2)
    write_sequence(v, SequenceLayout(tmp_path, "v"))
    for p in (tmp_path / "v").iterdir():
        with Image.open(p) as im:
            assert im.mode == "P"
            assert not np.array(im).any()


def test_full_identifier_range_round_trip(tmp_path):
    arr = np.arange(256, dtype=np.uint8).reshape(16, 16)
    v = VideoPrediction.from_arrays("v", [arr])
    write_sequence(v, SequenceLayout(tmp_path, "v"))
    assert read_sequence(SequenceLayout(tmp_path, "v")) == v


def test_palette():
    p = davis_palette()
    assert len(p) == 768
    assert p[:9] == [0, 0, 0, 128, 0, 0, 0, 128, 0]


def _report(records_equal=True):
    a = VideoPrediction.from_arrays("vid", [np.pad(np.ones((2, 2), np.uint8), 2)] * 3)
    b = a if records_equal else VideoPrediction.from_arrays("vid", [np.zeros((6, 6), np.uint8)] * 3)
    return fuse(a, b, CascadeParams())[1]


def test_report_schema(tmp_path):
    write_report(_report(), tmp_path / "r.json")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["schema"] == 1
    assert doc["video_id"] == "vid"
    assert set(doc["parameters"]) >= {"iou_threshold", "miss_frame_threshold", "wrong_frame_threshold",
                                      "contour_noise_threshold", "min_pixels", "granularity"}
    assert set(doc["decision"]) == {"source", "reason", "miss_count_a", "miss_count_b", "wrong_count",
                                    "noise_frames_a", "noise_frames_b"}
    assert doc["records"][0] == {"frame": 0, "object": 1, "kind": "agree", "iou": 1.0}


def test_report_source_b(tmp_path):
    # 12 frames where A has nothing and B has the object.
    b = VideoPrediction.from_arrays("vid", [np.pad(np.ones((2, 2), np.uint8), 2)] * 12)
    a = VideoPrediction.from_arrays("vid", [np.zeros((6, 6), np.uint8)] * 12)
    _, report = fuse(a, b)
    assert report.decision.source is Source.B
    write_report(report, tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["decision"]["source"] == "B"


def test_report_empty_records(tmp_path):
    v = VideoPrediction.from_arrays("vid", [np.zeros((4, 4), np.uint8)] * 2)
    _, report = fuse(v, v)
    assert report.per_frame == ()
    write_report(report, tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["records"] == []


def test_report_deterministic(tmp_path):
    write_report(_report(False), tmp_path / "a.json")
    write_report(_report(False), tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    assert report_to_dict(_report(False))["records"] == sorted(
        report_to_dict(_report(False))["records"], key=lambda r: (r["frame"], r["object"]))
