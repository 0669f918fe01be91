"""JSON file formats: segmentation input, graph dumps, atomic writes.

Segmentation input::

    {"image": {"width": W, "height": H},
     "areas": [{"id": "a0", "bbox": [x0, y0, x1, y1]},
               {"id": "a1", "mask_rle": {"size": [H, W], "counts": ...}}]}

``counts`` is COCO run-length encoding, either a list of ints or the
compressed string form, column-major. Masks are reduced to bounding boxes.

Graph dump::

    {"config": {...graph config...},
     "nodes": [{"id": 0, "rect": [...], "level": 0, "origin": "segmentation",
                "source_ids": ["a0"]}],
     "inclusion_edges": [[parent, child], ...],
     "adjacency_edges": [[a, b], ...]}
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import GeometryError, ImageDims, LevelThresholds, Rect
from .graph import AreaGraph, AreaNode, EdgeKind, GraphConfig


class FormatError(ValueError):
    pass


@dataclass
class SegmentationInput:
    dims: ImageDims
    rects: list[Rect]
    ids: list[str]


def decode_rle_counts(counts) -> list[int]:
    if isinstance(counts, list):
        return [int(c) for c in counts]
    # COCO compressed string: 5-bit groups, continuation bit 0x20, delta coded
    out: list[int] = []
    s = counts.encode() if isinstance(counts, str) else counts
    p = 0
    while p < len(s):
        x, k, more = 0, 0, True
        while more:
            c = s[p] - 48
            x |= (c & 0x1F) << (5 * k)
            more = bool(c & 0x20)
            p += 1
            k += 1
            if not more and (c & 0x10):
                x |= -1 << (5 * k)
        if len(out) > 2:
            x += out[-2]
        out.append(x)
    return out


def rle_to_bbox(rle: dict) -> Rect | None:
    h, w = rle["size"]
    counts = decode_rle_counts(rle["counts"])
    flat = np.zeros(h * w, dtype=bool)
    pos, val = 0, False
    for c in counts:
        if val:
            flat[pos:pos + c] = True
        pos += c
        val = not val
    mask = flat.reshape((w, h)).T  # column-major
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        return None
    return Rect(float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1))


def parse_segmentation(data: dict) -> SegmentationInput:
    try:
        img = data["image"]
        dims = ImageDims(float(img["width"]), float(img["height"]))
        rects, ids = [], []
        for k, area in enumerate(data.get("areas", [])):
            aid = str(area.get("id", k))
            if "bbox" in area:
                x0, y0, x1, y1 = (float(v) for v in area["bbox"])
                if not (x0 < x1 and y0 < y1):
                    continue  # degenerate
                rect = Rect(max(0.0, x0), max(0.0, y0), min(dims.width, x1), min(dims.height, y1))
            elif "mask_rle" in area:
                rect = rle_to_bbox(area["mask_rle"])
                if rect is None:
                    continue
            else:
                raise FormatError(f"area {aid} has neither bbox nor mask_rle")
            rects.append(rect)
            ids.append(aid)
    except (KeyError, TypeError, GeometryError) as exc:
        raise FormatError(f"invalid segmentation: {exc}") from exc
    return SegmentationInput(dims, rects, ids)


def load_segmentation(path) -> SegmentationInput:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: malformed JSON: {exc}") from exc
    return parse_segmentation(data)


def segmentation_to_json(seg: SegmentationInput) -> dict:
    return {"image": {"width": seg.dims.width, "height": seg.dims.height},
            "areas": [{"id": i, "bbox": r.as_list()} for r, i in zip(seg.rects, seg.ids)]}


def graph_to_json(g: AreaGraph) -> dict:
    c = g.cfg
    return {
        "config": {"t_s": c.t_s, "t_r": c.t_r, "thresholds": list(c.thresholds.tl),
                   "delta_l": c.delta_l, "delta_h": c.delta_h,
                   "work_width": c.work_dims.width, "work_height": c.work_dims.height,
                   "seed": c.seed},
        "nodes": [{"id": n.id, "rect": n.rect.as_list(), "level": n.level, "origin": n.origin,
                   "source_ids": list(n.source_ids)} for n in sorted(g.nodes.values(), key=lambda n: n.id)],
        "inclusion_edges": sorted([list(e) for e in g.inclusion_edges]),
        "adjacency_edges": sorted([list(e) for e in g.adjacency_edges]),
    }


def graph_from_json(d: dict) -> AreaGraph:
    try:
        c = d["config"]
        cfg = GraphConfig(t_s=c["t_s"], t_r=c["t_r"], thresholds=LevelThresholds(tuple(c["thresholds"])),
                          delta_l=c["delta_l"], delta_h=c["delta_h"],
                          work_dims=ImageDims(c["work_width"], c["work_height"]), seed=c.get("seed", 0))
        g = AreaGraph(cfg)
        for n in d["nodes"]:
            g.add_node(AreaNode(int(n["id"]), Rect(*n["rect"]), int(n["level"]), n.get("origin", "segmentation"),
                                tuple(n.get("source_ids", ()))))
        for p, ch in d["inclusion_edges"]:
            g.add_edge(int(p), int(ch), EdgeKind.INCLUSION)
        for a, b in d["adjacency_edges"]:
            g.add_edge(int(a), int(b), EdgeKind.ADJACENCY)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"invalid graph dump: {exc}") from exc
    return g


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_atomic(path, text: str) -> None:
    """Write via a temp file in the destination directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
