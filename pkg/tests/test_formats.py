import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from areamatch.bench import SceneParams, gen_scene
from areamatch.formats import (
    FormatError,
    decode_rle_counts,
    dumps,
    graph_from_json,
    graph_to_json,
    load_segmentation,
    parse_segmentation,
    rle_to_bbox,
    segmentation_to_json,
    write_atomic,
)
from areamatch.geometry import Rect
from areamatch.graph import build_area_graph, check_invariants


def mask_counts(mask: np.ndarray) -> list[int]:
    """Column-major run lengths starting with a run of zeros."""
    flat = mask.T.reshape(-1)
    counts, val, run = [], False, 0
    for v in flat:
        if bool(v) != val:
            counts.append(run)
            val, run = not val, 0
        run += 1
    counts.append(run)
    return counts


def coco_string(counts: list[int]) -> str:
    """Compressed-string encoder following the public COCO mask API."""
    out = []
    for i, c in enumerate(counts):
        x = c - counts[i - 2] if i > 2 else c
        more = True
        while more:
            ch = x & 0x1F
            x >>= 5
            more = (x != -1) if (ch & 0x10) else (x != 0)
            if more:
                ch |= 0x20
            out.append(chr(ch + 48))
    return "".join(out)


def bbox_of(mask):
    ys, xs = np.nonzero(mask)
    return Rect(xs.min(), ys.min(), xs.max() + 1, ys.max() + 1)


def test_rle_list_counts():
    mask = np.zeros((6, 8), dtype=bool)
    mask[1:4, 2:7] = True
    rle = {"size": [6, 8], "counts": mask_counts(mask)}
    assert rle_to_bbox(rle) == Rect(2, 1, 7, 4)


def test_rle_empty_mask():
    assert rle_to_bbox({"size": [4, 4], "counts": [16]}) is None


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2**31 - 1))
def test_rle_string_round_trip(h, w, seed):
    rng = np.random.default_rng(seed)
    mask = rng.random((h, w)) < rng.uniform(0.05, 0.9)
    counts = mask_counts(mask)
    assert decode_rle_counts(coco_string(counts)) == counts
    rle = {"size": [h, w], "counts": coco_string(counts)}
    if mask.any():
        assert rle_to_bbox(rle) == bbox_of(mask)
    else:
        assert rle_to_bbox(rle) is None


def test_rle_large_counts():
    counts = [0, 5000, 3, 70000, 1]
    assert decode_rle_counts(coco_string(counts)) == counts


def test_parse_segmentation_clips_and_skips():
    d = {"image": {"width": 100, "height": 50},
         "areas": [{"id": "a", "bbox": [-5, -5, 40, 60]},
                   {"id": "b", "bbox": [10, 10, 10, 20]},
                   {"id": "c", "bbox": [5, 5, 25, 25]}]}
    seg = parse_segmentation(d)
    assert seg.ids == ["a", "c"]
    assert seg.rects[0] == Rect(0, 0, 40, 50)


def test_parse_segmentation_errors():
    with pytest.raises(FormatError):
        parse_segmentation({"areas": []})
    with pytest.raises(FormatError):
        parse_segmentation({"image": {"width": 10, "height": 10}, "areas": [{"id": "x"}]})


def test_malformed_json(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    with pytest.raises(FormatError):
        load_segmentation(f)


def test_segmentation_round_trip(tmp_path):
    scene = gen_scene(1, SceneParams(distractors=1))
    seg = scene.segmentation(0)
    f = tmp_path / "seg.json"
    f.write_text(dumps(segmentation_to_json(seg)))
    back = load_segmentation(f)
    assert back.rects == seg.rects and back.ids == seg.ids


def test_graph_dump_round_trip():
    scene = gen_scene(4, SceneParams(translation=0.1))
    g = build_area_graph(scene.areas0, scene.dims0)
    d = json.loads(dumps(graph_to_json(g)))
    back = graph_from_json(d)
    assert graph_to_json(back) == graph_to_json(g)
    assert check_invariants(back) == []


def test_graph_dump_invalid():
    with pytest.raises(FormatError):
        graph_from_json({"nodes": []})


def test_write_atomic_replaces_and_leaves_no_temp(tmp_path):
    p = tmp_path / "sub" / "out.json"
    write_atomic(p, "one")
    write_atomic(p, "two")
    assert p.read_text() == "two"
    assert [x.name for x in p.parent.iterdir()] == ["out.json"]
