"""End-to-end area matching for an image pair."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .config import PipelineConfig
from .formats import SegmentationInput
from .geometry import Crop, ImageDims, Rect, crop_with_aspect, iou, link_score, rect_to_pixels
from .graph import AreaGraph, build_area_graph
from .mrf import build_instance, graph_cut
from .refine import RefinedMatch, collect_and_fuse, e_global, select_best
from .similarity import AreaRef, OrientedView, ProviderError, SimilarityMatrix, SimilarityProvider

log = logging.getLogger(__name__)


@dataclass
class AreaMatch:
    node0: int
    node1: int
    e_g: float
    rect0: Rect
    rect1: Rect
    crop0: Crop | None = None
    crop1: Crop | None = None

    def to_json(self) -> dict:
        d = {"src_node": self.node0, "dst_node": self.node1, "e_g": self.e_g,
             "rect0": self.rect0.as_list(), "rect1": self.rect1.as_list()}
        if self.crop0 is not None and self.crop1 is not None:
            d.update(crop0=rect_to_pixels(self.crop0.rect), crop1=rect_to_pixels(self.crop1.rect),
                     crop0_clamped=self.crop0.clamped, crop1_clamped=self.crop1.clamped)
        return d


@dataclass
class MatchResult:
    pairs: list[AreaMatch]
    g0: AreaGraph
    g1: AreaGraph
    matrix: SimilarityMatrix
    diagnostics: dict = field(default_factory=dict)

    def node_pairs(self) -> set[tuple[int, int]]:
        return {(m.node0, m.node1) for m in self.pairs}

    def to_json(self) -> dict:
        return {"pairs": [m.to_json() for m in self.pairs], "diagnostics": self.diagnostics}


def match_direction(g_src: AreaGraph, g_tgt: AreaGraph, sim, cfg: PipelineConfig,
                    diagnostics: list | None = None) -> dict[int, RefinedMatch]:
    """Match every source-level node of `g_src` into `g_tgt`.

    `sim(src_node, tgt_node)` reads the shared similarity matrix. Sources
    without a match are omitted; provider failures skip that source only.
    """
    out: dict[int, RefinedMatch] = {}
    rects = {i: n.rect for i, n in g_tgt.nodes.items()}
    for src in g_src.at_level(cfg.source_level):
        entry: dict = {"src": src}
        try:
            inst = build_instance(g_tgt, src, sim, cfg.lam)
            labels = graph_cut(inst)
            cands = [nid for nid, x in zip(inst.node_ids, labels) if x == 1]
            energies = {h: e_global(src, h, g_src, g_tgt, sim, cfg.energy) for h in cands}
        except ProviderError as exc:
            log.warning("source %d skipped: %s", src, exc)
            entry["error"] = str(exc)
            if diagnostics is not None:
                diagnostics.append(entry)
            continue
        best = select_best(energies, cfg.energy)
        entry.update(candidates=cands, energies={str(h): e for h, e in energies.items()}, best=best)
        if best is not None:
            out[src] = collect_and_fuse(src, best, energies, rects, cfg.energy)
            entry["contributors"] = sorted(out[src].contributors)
        if diagnostics is not None:
            diagnostics.append(entry)
    return out


def counterpart(g: AreaGraph, node: int, level: int) -> int | None:
    """Source-level node of `g` best covering `node` (itself when already at `level`)."""
    if g.nodes[node].level == level:
        return node
    r = g.nodes[node].rect
    best, key = None, None
    for m in g.at_level(level):
        rm = g.nodes[m].rect
        ls = link_score(r, rm)
        if ls <= 0:
            continue
        k = (-ls, -iou(r, rm), m)
        if key is None or k < key:
            best, key = m, k
    return best


def consistent(u: int, h: int, g_src: AreaGraph, g_tgt: AreaGraph,
               backward: dict[int, RefinedMatch], cfg: PipelineConfig) -> bool:
    """Forward pair (u -> h) is confirmed by matching back from h's counterpart."""
    v = counterpart(g_tgt, h, cfg.source_level)
    if v is None or v not in backward:
        return False
    back = backward[v].best
    if back == u:
        return True
    return iou(g_src.nodes[back].rect, g_src.nodes[u].rect) >= cfg.consistency_iou


def _to_native(r: Rect, work: ImageDims, native: ImageDims) -> Rect:
    return r.scaled(native.width / work.width, native.height / work.height)


def _graph_key(g: AreaGraph) -> tuple:
    return tuple(sorted((n.level, tuple(n.rect.as_list())) for n in g.nodes.values()))


def match_graphs(g0: AreaGraph, g1: AreaGraph, dims0: ImageDims, dims1: ImageDims,
                 provider: SimilarityProvider, cfg: PipelineConfig) -> MatchResult:
    work = cfg.graph.work_dims

    def ref0(i: int) -> AreaRef:
        return AreaRef(i, _to_native(g0.nodes[i].rect, work, dims0))

    def ref1(j: int) -> AreaRef:
        return AreaRef(j, _to_native(g1.nodes[j].rect, work, dims1))

    matrix = SimilarityMatrix(g0, g1, provider, cfg.t_as, cfg.prune, ref0, ref1)
    fwd_diag: list = []
    bwd_diag: list = []

    def run_forward():
        return match_direction(g0, g1, OrientedView(matrix, True).sim, cfg, fwd_diag)

    def run_backward():
        return match_direction(g1, g0, OrientedView(matrix, False).sim, cfg, bwd_diag)

    # Canonical order keeps pruning state, hence results, independent of input order.
    if _graph_key(g0) <= _graph_key(g1):
        fwd = run_forward()
        bwd = run_backward()
    else:
        bwd = run_backward()
        fwd = run_forward()

    found: dict[tuple[int, int], dict] = {}
    for u, m in fwd.items():
        if consistent(u, m.best, g0, g1, bwd, cfg):
            found.setdefault((u, m.best), {})["fwd"] = m
    for v, m in bwd.items():
        if consistent(v, m.best, g1, g0, fwd, cfg):
            found.setdefault((m.best, v), {})["bwd"] = m

    pairs = []
    for (n0, n1), d in sorted(found.items()):
        f, b = d.get("fwd"), d.get("bwd")
        rect0 = b.fused_rect if b else g0.nodes[n0].rect
        rect1 = f.fused_rect if f else g1.nodes[n1].rect
        e_g = max(m.e_g for m in (f, b) if m is not None)
        pairs.append(AreaMatch(n0, n1, e_g, _to_native(rect0, work, dims0),
                               _to_native(rect1, work, dims1)))
    emit_crops(pairs, dims0, dims1, cfg)
    diagnostics = {
        "forward": fwd_diag,
        "backward": bwd_diag,
        "provider_calls": matrix.provider_calls,
        "pruned_cells": matrix.pruned_count,
        "nodes": [len(g0), len(g1)],
    }
    return MatchResult(pairs, g0, g1, matrix, diagnostics)


def emit_crops(matches: list[AreaMatch], dims0: ImageDims, dims1: ImageDims,
               cfg: PipelineConfig) -> list[AreaMatch]:
    for m in matches:
        m.crop0 = crop_with_aspect(m.rect0, cfg.crop_aspect, cfg.spread, dims0)
        m.crop1 = crop_with_aspect(m.rect1, cfg.crop_aspect, cfg.spread, dims1)
    return matches


def match_pair(seg0: SegmentationInput, seg1: SegmentationInput,
               provider: SimilarityProvider, cfg: PipelineConfig | None = None) -> MatchResult:
    cfg = cfg or PipelineConfig()
    g0 = build_area_graph(seg0.rects, seg0.dims, cfg.graph, seg0.ids)
    g1 = build_area_graph(seg1.rects, seg1.dims, cfg.graph, seg1.ids)
    return match_graphs(g0, g1, seg0.dims, seg1.dims, provider, cfg)
