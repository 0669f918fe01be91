"""Synthetic scene pairs with known correspondence, and area-matching metrics."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .formats import SegmentationInput
from .geometry import ImageDims, Rect, iou, link_score, overlap_rect, overlap_size
from .pipeline import AreaMatch, MatchResult, match_pair
from .similarity import GroundTruthProvider, ScaleTranslation

AMP_THRESHOLDS = (0.6, 0.7, 0.8)
THREADS_ENV = "AREAMATCH_THREADS"

# side-length ranges per level, kept away from the level thresholds
LEVEL_SIDES = {0: (85.0, 105.0), 1: (150.0, 200.0), 2: (260.0, 300.0)}


class GenerationError(RuntimeError):
    pass


@dataclass
class SceneParams:
    n_areas: int = 6
    scale_range: tuple[float, float] = (1.0, 1.0)
    translation: float = 0.0  # max |t| as a fraction of the image width / height
    distractors: int = 0
    dims0: tuple[float, float] = (640.0, 480.0)
    dims1: tuple[float, float] = (640.0, 480.0)
    min_visible: float = 0.6
    max_tries: int = 500
    max_restarts: int = 50

    def __post_init__(self):
        lo, hi = self.scale_range
        if not 0.5 <= lo <= hi <= 2:
            raise ValueError("scale range must lie within [0.5, 2]")
        if self.translation < 0 or self.n_areas < 0 or self.distractors < 0:
            raise ValueError("negative scene parameter")


@dataclass
class SyntheticScene:
    seed: int
    dims0: ImageDims
    dims1: ImageDims
    transform: ScaleTranslation
    areas0: list[Rect]
    areas1: list[Rect]
    ids0: list[str]
    ids1: list[str]
    gt_pairs: list[tuple[str, str]] = field(default_factory=list)

    def segmentation(self, side: int) -> SegmentationInput:
        if side == 0:
            return SegmentationInput(self.dims0, list(self.areas0), list(self.ids0))
        return SegmentationInput(self.dims1, list(self.areas1), list(self.ids1))

    def swapped(self) -> "SyntheticScene":
        return SyntheticScene(self.seed, self.dims1, self.dims0, self.transform.inverse(),
                              list(self.areas1), list(self.areas0), list(self.ids1), list(self.ids0),
                              [(b, a) for a, b in self.gt_pairs])

    def to_json(self) -> dict:
        t = self.transform
        return {
            "seed": self.seed,
            "image0": {"width": self.dims0.width, "height": self.dims0.height},
            "image1": {"width": self.dims1.width, "height": self.dims1.height},
            "transform": {"scale": t.scale, "tx": t.tx, "ty": t.ty},
            "areas0": [{"id": i, "bbox": r.as_list()} for i, r in zip(self.ids0, self.areas0)],
            "areas1": [{"id": i, "bbox": r.as_list()} for i, r in zip(self.ids1, self.areas1)],
            "gt_pairs": [list(p) for p in self.gt_pairs],
        }

    @classmethod
    def from_json(cls, d: dict) -> "SyntheticScene":
        t = d["transform"]
        return cls(
            int(d.get("seed", 0)),
            ImageDims(d["image0"]["width"], d["image0"]["height"]),
            ImageDims(d["image1"]["width"], d["image1"]["height"]),
            ScaleTranslation(float(t["scale"]), float(t["tx"]), float(t["ty"])),
            [Rect(*a["bbox"]) for a in d["areas0"]],
            [Rect(*a["bbox"]) for a in d["areas1"]],
            [str(a["id"]) for a in d["areas0"]],
            [str(a["id"]) for a in d["areas1"]],
            [(str(a), str(b)) for a, b in d.get("gt_pairs", [])],
        )


def _random_rect(rng: np.random.Generator, level: int, dims: ImageDims) -> Rect:
    lo, hi = LEVEL_SIDES[level]
    side = rng.uniform(lo, hi)
    ar = rng.uniform(0.75, 1.0 / 0.75)
    w, h = side * math.sqrt(ar), side / math.sqrt(ar)
    w, h = min(w, dims.width), min(h, dims.height)
    x0 = rng.uniform(0, dims.width - w)
    y0 = rng.uniform(0, dims.height - h)
    return Rect(x0, y0, x0 + w, y0 + h)


def _compatible(r: Rect, others: list[Rect]) -> bool:
    """Disjoint-ish, or nested with a clear size gap (object parts)."""
    for o in others:
        ls = link_score(r, o)
        if ls <= 0.1:
            continue
        small, big = (r, o) if r.size() < o.size() else (o, r)
        if big.contains(small) and small.size() <= 0.5 * big.size():
            continue
        return False
    return True


def _visible_fraction(r: Rect, t: ScaleTranslation, dims: ImageDims) -> float:
    m = t.apply(r)
    return overlap_size(m, dims.rect()) / m.size()


def _place_areas(rng, levels, n_distractors, t, d0, d1, p):
    """One placement attempt; largest first so small areas can nest in placed ones.

    Returns (areas0, areas1, distractors0, distractors1) or None on failure.
    """
    areas0: list[Rect] = []
    areas1: list[Rect] = []
    for level in levels:
        for _ in range(p.max_tries):
            r = _random_rect(rng, level, d0)
            if not _compatible(r, areas0) or _visible_fraction(r, t, d1) < p.min_visible:
                continue
            r1 = overlap_rect(t.apply(r), d1.rect())
            if r1 is None or not _compatible(r1, areas1):
                continue
            areas0.append(r)
            areas1.append(r1)
            break
        else:
            return None
    all0, all1 = list(areas0), list(areas1)
    extra: tuple[list[Rect], list[Rect]] = ([], [])
    tinv = t.inverse()
    for _ in range(n_distractors):
        for side, dims, own, other, tr in ((0, d0, all0, all1, t), (1, d1, all1, all0, tinv)):
            for _ in range(p.max_tries):
                r = _random_rect(rng, 0, dims)
                m = tr.apply(r)
                if _compatible(r, own) and all(overlap_size(m, o) == 0 for o in other):
                    own.append(r)
                    extra[side].append(r)
                    break
            else:
                return None
    return areas0, areas1, extra[0], extra[1]


def gen_scene(seed: int, params: SceneParams | None = None) -> SyntheticScene:
    """Deterministic scene pair: areas in image 0, transformed + clipped copies in image 1.

    The scale acts about the image-0 center. Distractors are added to each
    image where they have no counterpart at all in the other image.
    """
    p = params or SceneParams()
    rng = np.random.default_rng(seed)
    d0, d1 = ImageDims(*p.dims0), ImageDims(*p.dims1)
    s = float(rng.uniform(*p.scale_range))
    tx = float(rng.uniform(-p.translation, p.translation)) * d0.width
    ty = float(rng.uniform(-p.translation, p.translation)) * d0.height
    cx, cy = d0.width / 2, d0.height / 2
    # center of image 0 goes to the center of image 1, then shifted
    t = ScaleTranslation(s, d1.width / 2 - s * cx + tx, d1.height / 2 - s * cy + ty)
    levels = sorted((k % 3 for k in range(p.n_areas)), reverse=True)
    for _ in range(p.max_restarts):
        placed = _place_areas(rng, levels, p.distractors, t, d0, d1, p)
        if placed is not None:
            break
    else:
        raise GenerationError(f"could not place {p.n_areas} areas and "
                              f"{p.distractors} distractors for seed {seed}")
    areas0, areas1, extra0, extra1 = placed
    ids = [f"a{k}" for k in range(len(areas0))]
    ids0 = ids + [f"d0_{k}" for k in range(len(extra0))]
    ids1 = ids + [f"d1_{k}" for k in range(len(extra1))]
    return SyntheticScene(seed, d0, d1, t, areas0 + extra0, areas1 + extra1, ids0, ids1,
                          [(i, i) for i in ids])


def overlap_ratio(rect0: Rect, rect1: Rect, scene: SyntheticScene) -> float:
    """IoU of the two rects in image 1, both restricted to the co-visible region."""
    t = scene.transform
    covis = overlap_rect(t.apply(scene.dims0.rect()), scene.dims1.rect())
    if covis is None:
        return 0.0
    a = overlap_rect(t.apply(rect0), covis)
    b = overlap_rect(rect1, covis)
    if a is None or b is None:
        return 0.0
    return iou(a, b)


@dataclass
class MatchMetrics:
    aor: float
    amp: dict[float, float]
    area_num: float
    empty: bool = False

    def to_json(self) -> dict:
        return {"aor": self.aor, "amp": {f"{t:.1f}": v for t, v in self.amp.items()},
                "area_num": self.area_num, "empty": self.empty}


def score(matches: list[AreaMatch], scene: SyntheticScene,
          thresholds: tuple[float, ...] = AMP_THRESHOLDS) -> MatchMetrics:
    if not matches:
        return MatchMetrics(0.0, {t: 0.0 for t in thresholds}, 0.0, empty=True)
    ratios = [overlap_ratio(m.rect0, m.rect1, scene) for m in matches]
    amp = {t: sum(r >= t for r in ratios) / len(ratios) for t in thresholds}
    return MatchMetrics(float(np.mean(ratios)), amp, float(len(matches)))


def run_scene(scene: SyntheticScene, cfg: PipelineConfig | None = None) -> MatchResult:
    cfg = cfg or PipelineConfig()
    provider = GroundTruthProvider(scene.transform)
    return match_pair(scene.segmentation(0), scene.segmentation(1), provider, cfg)


def _bench_one(seed: int, params: SceneParams, cfg: PipelineConfig) -> dict:
    scene = gen_scene(seed, params)
    on = run_scene(scene, replace(cfg, prune=True))
    off = run_scene(scene, replace(cfg, prune=False))
    m = score(on.pairs, scene)
    return {
        "seed": seed,
        "metrics": m.to_json(),
        "calls_pruned": on.matrix.provider_calls,
        "calls_dense": off.matrix.provider_calls,
        "same_matches": on.node_pairs() == off.node_pairs(),
    }


def _mean_std(values: list[float]) -> dict:
    a = np.asarray(values, dtype=float)
    if len(a) == 0:
        return {"mean": 0.0, "std": 0.0}
    return {"mean": float(a.mean()), "std": float(a.std())}


def bench(seeds: list[int], params: SceneParams | None = None,
          cfg: PipelineConfig | None = None, threads: int | None = None) -> dict:
    """Run the pipeline on generated scenes with and without pruning."""
    params = params or SceneParams()
    cfg = cfg or PipelineConfig()
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(lambda s: _bench_one(s, params, cfg), seeds))
    else:
        rows = [_bench_one(s, params, cfg) for s in seeds]
    summary = {
        "aor": _mean_std([r["metrics"]["aor"] for r in rows]),
        "amp": {f"{t:.1f}": _mean_std([r["metrics"]["amp"][f"{t:.1f}"] for r in rows])
                for t in AMP_THRESHOLDS},
        "area_num": _mean_std([r["metrics"]["area_num"] for r in rows]),
        "calls_pruned": _mean_std([r["calls_pruned"] for r in rows]),
        "calls_dense": _mean_std([r["calls_dense"] for r in rows]),
        "pruning_never_costlier": all(r["calls_pruned"] <= r["calls_dense"] for r in rows),
    }
    return {"seeds": list(seeds), "params": _params_json(params), "summary": summary, "per_seed": rows}


def _params_json(p: SceneParams) -> dict:
    return {"n_areas": p.n_areas, "scale_range": list(p.scale_range), "translation": p.translation,
            "distractors": p.distractors, "dims0": list(p.dims0), "dims1": list(p.dims1),
            "min_visible": p.min_visible}


def report_table(report: dict) -> str:
    """Plain-text summary with the usual area-matching columns."""
    s = report["summary"]

    def pm(d, scale=100.0):
        return f"{d['mean'] * scale:6.2f} ± {d['std'] * scale:5.2f}"

    header = f"{'AOR':>15} {'AMP@0.6':>15} {'AMP@0.7':>15} {'AMP@0.8':>15} {'AreaNum':>15}"
    row = " ".join([pm(s["aor"]), pm(s["amp"]["0.6"]), pm(s["amp"]["0.7"]), pm(s["amp"]["0.8"]),
                    pm(s["area_num"], 1.0)])
    calls = (f"provider calls: pruned {s['calls_pruned']['mean']:.1f}, "
             f"dense {s['calls_dense']['mean']:.1f}")
    return "\n".join([header, row, calls, ""])


# ---------------------------------------------------------------------------
# optional rendering for the NCC provider

def render_scene(scene: SyntheticScene, seed: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Textured grayscale images: image 1 is image 0 warped by the transform.

    Each area gets its own noise texture; image-1 distractors are painted
    with fresh texture so they have no counterpart in image 0.
    """
    rng = np.random.default_rng(scene.seed if seed is None else seed)
    w0, h0 = int(scene.dims0.width), int(scene.dims0.height)
    img0 = rng.uniform(60, 100, size=(h0, w0))
    for r in scene.areas0:
        x0, y0, x1, y1 = (int(round(v)) for v in r.as_list())
        img0[y0:y1, x0:x1] = rng.uniform(0, 255, size=(max(0, y1 - y0), max(0, x1 - x0)))
    w1, h1 = int(scene.dims1.width), int(scene.dims1.height)
    inv = scene.transform.inverse()
    ys, xs = np.mgrid[0:h1, 0:w1]
    sx = inv.scale * (xs + 0.5) + inv.tx - 0.5
    sy = inv.scale * (ys + 0.5) + inv.ty - 0.5
    inside = (sx >= 0) & (sx <= w0 - 1) & (sy >= 0) & (sy <= h0 - 1)
    img1 = rng.uniform(60, 100, size=(h1, w1))
    xi = np.clip(np.rint(sx).astype(int), 0, w0 - 1)
    yi = np.clip(np.rint(sy).astype(int), 0, h0 - 1)
    img1[inside] = img0[yi[inside], xi[inside]]
    gt_ids1 = {b for _, b in scene.gt_pairs}
    for r, rid in zip(scene.areas1, scene.ids1):
        if rid in gt_ids1:
            continue
        x0, y0, x1, y1 = (int(round(v)) for v in r.as_list())
        img1[y0:y1, x0:x1] = rng.uniform(0, 255, size=(max(0, y1 - y0), max(0, x1 - x0)))
    return img0, img1


def write_pgm(path, img: np.ndarray) -> None:
    a = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    h, w = a.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + a.tobytes())
