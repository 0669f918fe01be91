"""Global matching energy over graph-cut candidates and weighted area fusion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .geometry import Rect

RELATIONS = ("parent", "children", "neighbour")


@dataclass(frozen=True)
class EnergyParams:
    mu: float = 4.0
    alpha: float = 2.0
    beta: float = 2.0
    gamma: float = 2.0
    t_e_max: float = 0.35
    t_er: float = 0.1

    def __post_init__(self):
        ws = (self.mu, self.alpha, self.beta, self.gamma)
        if min(ws) < 0 or sum(ws) == 0:
            raise ValueError("energy weights must be >= 0 and not all zero")
        if self.t_er < 0:
            raise ValueError("t_er must be >= 0")
        if not 0 < self.t_e_max <= 1:
            raise ValueError("t_e_max must lie in (0, 1]")

    def weight(self, term: str) -> float:
        return {"self": self.mu, "parent": self.alpha,
                "children": self.beta, "neighbour": self.gamma}[term]


@dataclass
class RefinedMatch:
    src: int
    best: int
    e_g: float
    contributors: dict[int, float]
    fused_rect: Rect
    energies: dict[int, float] = field(default_factory=dict)


Sim = Callable[[int, int], float]


def e_self(src: int, h: int, sim: Sim) -> float:
    return abs(1.0 - sim(src, h))


def relation_set(graph, node: int, relation: str) -> set[int]:
    if relation == "parent":
        return graph.parents(node)
    if relation == "children":
        return graph.children(node)
    if relation == "neighbour":
        return graph.neighbours(node)
    raise ValueError(f"unknown relation {relation!r}")


def e_context(src: int, h: int, relation: str, g_src, g_tgt, sim: Sim) -> float | None:
    """Minimum matching energy over relation pairs; None if either side has none."""
    us = sorted(relation_set(g_src, src, relation))
    rs = sorted(relation_set(g_tgt, h, relation))
    if not us or not rs:
        return None
    return min(abs(1.0 - sim(u, r)) for u in us for r in rs)


def combine_terms(terms: Mapping[str, float | None], p: EnergyParams) -> float:
    """Weighted mean of the present terms (normalizer = their weight sum)."""
    num = den = 0.0
    for name, value in terms.items():
        if value is None:
            continue
        w = p.weight(name)
        num += w * value
        den += w
    if den == 0:
        return 1.0
    return num / den


def e_global(src: int, h: int, g_src, g_tgt, sim: Sim, p: EnergyParams) -> float:
    terms: dict[str, float | None] = {"self": e_self(src, h, sim)}
    for rel in RELATIONS:
        terms[rel] = e_context(src, h, rel, g_src, g_tgt, sim)
    return combine_terms(terms, p)


def select_best(energies: Mapping[int, float], p: EnergyParams) -> int | None:
    """Lowest-energy candidate (smallest id on ties), or None above t_e_max."""
    if not energies:
        return None
    best = min(energies, key=lambda h: (energies[h], h))
    if energies[best] > p.t_e_max:
        return None
    return best


def fusion_weights(energies: Sequence[float]) -> list[float]:
    ws = [math.exp(-e) for e in energies]
    tot = sum(ws)
    return [w / tot for w in ws]


def weighted_fuse(rects: Sequence[Rect], energies: Sequence[float]) -> Rect:
    ws = fusion_weights(energies)
    coords = [sum(w * getattr(r, f) for w, r in zip(ws, rects)) for f in ("x0", "y0", "x1", "y1")]
    return Rect(*coords)


def collect_and_fuse(src: int, h_star: int, energies: Mapping[int, float],
                     rects: Mapping[int, Rect], p: EnergyParams) -> RefinedMatch:
    e_best = energies[h_star]
    contrib = {h: e for h, e in sorted(energies.items()) if abs(e - e_best) <= p.t_er}
    ids = list(contrib)
    fused = weighted_fuse([rects[h] for h in ids], [contrib[h] for h in ids])
    return RefinedMatch(src, h_star, e_best, contrib, fused, dict(energies))
