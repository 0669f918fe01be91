"""Area Graph construction: pre-processing, link prediction and completion."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, Sequence

from .cluster import cluster_orphans
from .geometry import (
    ABOVE_RANGE,
    BELOW_RANGE,
    ImageDims,
    LevelThresholds,
    Rect,
    center_distance,
    expand_to_level,
    fuse,
    level_of,
    link_score,
)


class EdgeKind(enum.Enum):
    INCLUSION = "inclusion"
    ADJACENCY = "adjacency"
    NONE = "none"


@dataclass(frozen=True)
class GraphConfig:
    t_s: float = 80**2
    t_r: float = 4.0
    thresholds: LevelThresholds = field(default_factory=LevelThresholds)
    delta_l: float = 0.1
    delta_h: float = 0.8
    work_dims: ImageDims = field(default_factory=lambda: ImageDims(640, 480))
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.delta_l < self.delta_h <= 1:
            raise ValueError("need 0 <= delta_l < delta_h <= 1")
        if self.t_s != self.thresholds.tl[0]:
            raise ValueError("t_s must equal the level-0 threshold")
        if self.t_r < 1:
            raise ValueError("t_r must be >= 1")

    @property
    def num_levels(self) -> int:
        return self.thresholds.num_levels


@dataclass(frozen=True)
class AreaNode:
    id: int
    rect: Rect
    level: int
    origin: str = "segmentation"  # or "completion"
    source_ids: tuple[str, ...] = ()


def node_level(rect: Rect, cfg: GraphConfig) -> int:
    lvl = level_of(rect, cfg.thresholds)
    if lvl == ABOVE_RANGE:
        return cfg.num_levels - 1
    if lvl == BELOW_RANGE:
        raise ValueError(f"rect {rect.as_list()} is below the minimal level size")
    return lvl


class AreaGraph:
    """Nodes plus directed inclusion edges (parent, child) and undirected adjacency."""

    def __init__(self, cfg: GraphConfig | None = None):
        self.cfg = cfg or GraphConfig()
        self.nodes: dict[int, AreaNode] = {}
        self.inclusion_edges: set[tuple[int, int]] = set()
        self.adjacency_edges: set[tuple[int, int]] = set()
        self._parents: dict[int, set[int]] = {}
        self._children: dict[int, set[int]] = {}
        self._neighbours: dict[int, set[int]] = {}

    def __len__(self):
        return len(self.nodes)

    def add_node(self, node: AreaNode) -> None:
        if node.id in self.nodes:
            raise ValueError(f"duplicate node id {node.id}")
        self.nodes[node.id] = node
        self._parents[node.id] = set()
        self._children[node.id] = set()
        self._neighbours[node.id] = set()

    def add_edge(self, a: int, b: int, kind: EdgeKind) -> None:
        """Add an edge; for INCLUSION, `a` is the parent."""
        if kind is EdgeKind.INCLUSION:
            self.inclusion_edges.add((a, b))
            self._children[a].add(b)
            self._parents[b].add(a)
        elif kind is EdgeKind.ADJACENCY:
            self.adjacency_edges.add((min(a, b), max(a, b)))
            self._neighbours[a].add(b)
            self._neighbours[b].add(a)

    def link(self, new_id: int) -> None:
        """Connect a node to every other node by link prediction."""
        node = self.nodes[new_id]
        for other in self.nodes.values():
            if other.id == new_id:
                continue
            kind, parent = predict_edge(node, other, self.cfg)
            if kind is EdgeKind.INCLUSION:
                child = other.id if parent == new_id else new_id
                self.add_edge(parent, child, kind)
            elif kind is EdgeKind.ADJACENCY:
                self.add_edge(new_id, other.id, kind)

    def next_id(self) -> int:
        return max(self.nodes, default=-1) + 1

    def parents(self, i: int) -> set[int]:
        return self._parents[i]

    def children(self, i: int) -> set[int]:
        return self._children[i]

    def neighbours(self, i: int) -> set[int]:
        return self._neighbours[i]

    def next_level_children(self, i: int) -> list[int]:
        lvl = self.nodes[i].level
        return sorted(c for c in self._children[i] if self.nodes[c].level == lvl - 1)

    def mrf_edges(self) -> list[tuple[int, int]]:
        """Adjacency plus inclusion edges, as sorted undirected pairs."""
        pairs = set(self.adjacency_edges)
        pairs.update((min(a, b), max(a, b)) for a, b in self.inclusion_edges)
        return sorted(pairs)

    def at_level(self, level: int) -> list[int]:
        return sorted(i for i, n in self.nodes.items() if n.level == level)

    def level_counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for n in self.nodes.values():
            out[n.level] = out.get(n.level, 0) + 1
        return dict(sorted(out.items()))


def predict_edge(a: AreaNode, b: AreaNode, cfg: GraphConfig) -> tuple[EdgeKind, int | None]:
    """Classify the pair by link score; for inclusion also return the parent id.

    The larger rect is the parent; on equal sizes the smaller id is the child.
    """
    if a.id == b.id:
        raise ValueError("self-edge requested")
    delta = link_score(a.rect, b.rect)
    if delta >= cfg.delta_h:
        sa, sb = a.rect.size(), b.rect.size()
        if sa != sb:
            parent = a.id if sa > sb else b.id
        else:
            parent = max(a.id, b.id)
        return EdgeKind.INCLUSION, parent
    if delta > cfg.delta_l:
        return EdgeKind.ADJACENCY, None
    return EdgeKind.NONE, None


def _passes(r: Rect, cfg: GraphConfig) -> bool:
    return r.size() >= cfg.t_s and r.aspect() <= cfg.t_r


def preprocess(areas: Sequence[Rect], cfg: GraphConfig,
               source_ids: Sequence[str] | None = None) -> list[AreaNode]:
    """Screen out small / elongated areas, fusing each into its nearest candidate.

    Repeats until a pass filters nothing. Filtered areas with no candidate
    left to fuse into are dropped.
    """
    if source_ids is None:
        source_ids = [str(i) for i in range(len(areas))]
    cands: list[tuple[Rect, tuple[str, ...]]] = [(r, (s,)) for r, s in zip(areas, source_ids)]
    while True:
        keep = [c for c in cands if _passes(c[0], cfg)]
        dropped = [c for c in cands if not _passes(c[0], cfg)]
        if not dropped or not keep:
            cands = keep
            break
        for rect, ids in dropped:
            j = min(range(len(keep)), key=lambda k: (center_distance(rect, keep[k][0]), k))
            krect, kids = keep[j]
            keep[j] = (fuse(krect, rect), kids + ids)
        cands = keep
    return [AreaNode(i, r, node_level(r, cfg), "segmentation", ids)
            for i, (r, ids) in enumerate(cands)]


def build_initial_graph(nodes: Iterable[AreaNode], cfg: GraphConfig) -> AreaGraph:
    g = AreaGraph(cfg)
    for n in nodes:
        g.add_node(n)
    ids = sorted(g.nodes)
    for x, i in enumerate(ids):
        for j in ids[x + 1:]:
            kind, parent = predict_edge(g.nodes[i], g.nodes[j], cfg)
            if kind is EdgeKind.INCLUSION:
                g.add_edge(parent, j if parent == i else i, kind)
            elif kind is EdgeKind.ADJACENCY:
                g.add_edge(i, j, kind)
    return g


def _add_completion_node(g: AreaGraph, rect: Rect) -> int:
    for n in g.nodes.values():
        if n.rect == rect:
            return n.id
    nid = g.next_id()
    g.add_node(AreaNode(nid, rect, node_level(rect, g.cfg), "completion"))
    g.link(nid)
    return nid


def _raise_to_level(rect: Rect, level: int, cfg: GraphConfig) -> Rect:
    """Expand `rect` to at least the lower bound of `level` if it is smaller."""
    target = cfg.thresholds.lower_bound(level)
    if rect.size() >= target:
        return rect
    return expand_to_level(rect, target, cfg.work_dims)


def complete_graph(g: AreaGraph) -> AreaGraph:
    """Generate parent nodes for orphans, level by level, in place.

    Orphans of one level are clustered by center. Inside a multi-node cluster
    every not-yet-fused node is fused with its nearest cluster neighbour; a
    singleton is expanded to the next level's lower bound. Each generated
    rect becomes a new node linked to all others. Top-level nodes need no
    parent, so levels 0..L-2 are processed.
    """
    cfg = g.cfg
    for level in range(cfg.num_levels - 1):
        orphans = [i for i in g.at_level(level) if not g.parents(i)]
        if not orphans:
            continue
        labels = cluster_orphans([g.nodes[i].rect.center() for i in orphans], cfg.seed)
        for lab in sorted(set(labels.tolist())):
            members = [orphans[k] for k in range(len(orphans)) if labels[k] == lab]
            if len(members) >= 2:
                fused: set[int] = set()
                for v in members:
                    if v in fused:
                        continue
                    rv = g.nodes[v].rect
                    n = min((m for m in members if m != v),
                            key=lambda m: (center_distance(rv, g.nodes[m].rect), m))
                    rect = _raise_to_level(fuse(rv, g.nodes[n].rect), level + 1, cfg)
                    _add_completion_node(g, rect)
                    fused.update((v, n))
            else:
                v = members[0]
                rect = _raise_to_level(g.nodes[v].rect, level + 1, cfg)
                _add_completion_node(g, rect)
    return g


def dedup_rects(rects: Sequence[Rect], ids: Sequence[str]) -> tuple[list[Rect], list[str]]:
    seen: set[Rect] = set()
    out_r, out_i = [], []
    for r, i in zip(rects, ids):
        if r in seen:
            continue
        seen.add(r)
        out_r.append(r)
        out_i.append(i)
    return out_r, out_i


def build_area_graph(rects: Sequence[Rect], native: ImageDims, cfg: GraphConfig | None = None,
                     ids: Sequence[str] | None = None) -> AreaGraph:
    """Rescale native rects into the working frame, then preprocess, link and complete."""
    cfg = cfg or GraphConfig()
    if ids is None:
        ids = [str(i) for i in range(len(rects))]
    sx = cfg.work_dims.width / native.width
    sy = cfg.work_dims.height / native.height
    rects, ids = dedup_rects(rects, ids)
    work = [r.scaled(sx, sy) for r in rects]
    nodes = preprocess(work, cfg, ids)
    return complete_graph(build_initial_graph(nodes, cfg))


def check_invariants(g: AreaGraph) -> list[str]:
    """Return a list of violated invariants (empty when the graph is sound)."""
    cfg = g.cfg
    problems: list[str] = []
    top = cfg.num_levels - 1
    bounds = cfg.work_dims.rect()
    for n in g.nodes.values():
        if not bounds.contains(n.rect):
            problems.append(f"node {n.id} outside working image")
        if n.rect.size() < cfg.t_s:
            problems.append(f"node {n.id} below minimal size")
        if n.level != node_level(n.rect, cfg):
            problems.append(f"node {n.id} has wrong level {n.level}")
        if n.level < top and not g.parents(n.id):
            problems.append(f"orphan node {n.id} at level {n.level}")
    seen_pairs: set[tuple[int, int]] = set()
    for a, b in list(g.inclusion_edges) + list(g.adjacency_edges):
        if a == b:
            problems.append(f"self edge on {a}")
        key = (min(a, b), max(a, b))
        if key in seen_pairs:
            problems.append(f"multiple edges between {key}")
        seen_pairs.add(key)
    for p, c in g.inclusion_edges:
        if link_score(g.nodes[p].rect, g.nodes[c].rect) < cfg.delta_h:
            problems.append(f"inclusion edge {p}->{c} below delta_h")
    ts = TopologicalSorter({i: g.parents(i) for i in g.nodes})
    try:
        ts.prepare()
    except CycleError:
        problems.append("inclusion edges contain a cycle")
    ids = sorted(g.nodes)
    for x, i in enumerate(ids):
        for j in ids[x + 1:]:
            kind, parent = predict_edge(g.nodes[i], g.nodes[j], cfg)
            key = (i, j)
            if kind is EdgeKind.INCLUSION:
                child = j if parent == i else i
                ok = (parent, child) in g.inclusion_edges
            elif kind is EdgeKind.ADJACENCY:
                ok = key in g.adjacency_edges
            else:
                ok = key not in seen_pairs
            if not ok:
                problems.append(f"edge between {i} and {j} disagrees with link prediction")
    return problems
