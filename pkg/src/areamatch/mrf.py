"""Binary Area MRF for one source node: energy, exact graph-cut solve, oracle."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import iou
from .maxflow import FlowNetwork

BRUTE_FORCE_MAX_NODES = 20


@dataclass(frozen=True)
class MrfInstance:
    """Unary similarities over target nodes plus IoU-weighted Potts pairs.

    ``edges`` index into ``sims`` (positions, not graph node ids);
    ``node_ids`` maps positions back to the target graph.
    """

    sims: tuple[float, ...]
    edges: tuple[tuple[int, int, float], ...] = ()
    lam: float = 0.1
    node_ids: tuple[int, ...] = field(default=())

    def __post_init__(self):
        n = len(self.sims)
        if not self.node_ids:
            object.__setattr__(self, "node_ids", tuple(range(n)))
        seen = set()
        for i, j, w in self.edges:
            if i == j:
                raise ValueError("self-loop in MRF edges")
            if w < 0:
                raise ValueError("pair weights must be nonnegative")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate MRF edge {key}")
            seen.add(key)

    def __len__(self):
        return len(self.sims)

    def to_json(self, expected_energy: float | None = None) -> dict:
        d = {"sims": list(self.sims), "edges": [list(e) for e in self.edges],
             "lambda": self.lam, "node_ids": list(self.node_ids)}
        if expected_energy is not None:
            d["expected_energy"] = expected_energy
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MrfInstance":
        return cls(tuple(float(s) for s in d["sims"]),
                   tuple((int(i), int(j), float(w)) for i, j, w in d.get("edges", [])),
                   float(d.get("lambda", 0.1)),
                   tuple(int(i) for i in d.get("node_ids", [])))


def save_instance(inst: MrfInstance, path, expected_energy: float | None = None) -> None:
    Path(path).write_text(json.dumps(inst.to_json(expected_energy), indent=2))


def load_instance(path) -> tuple[MrfInstance, float | None]:
    d = json.loads(Path(path).read_text())
    return MrfInstance.from_json(d), d.get("expected_energy")


def build_instance(target_graph, src: int, sim, lam: float = 0.1) -> MrfInstance:
    """MRF over every node of `target_graph`; `sim(src, tgt)` gives the unary similarity.

    Inclusion edges are treated as undirected adjacency.
    """
    ids = sorted(target_graph.nodes)
    pos = {nid: k for k, nid in enumerate(ids)}
    sims = tuple(sim(src, nid) for nid in ids)
    edges = tuple(
        (pos[a], pos[b], iou(target_graph.nodes[a].rect, target_graph.nodes[b].rect))
        for a, b in target_graph.mrf_edges())
    return MrfInstance(sims, edges, lam, tuple(ids))


def total_energy(inst: MrfInstance, x) -> float:
    x = list(x)
    if len(x) != len(inst.sims):
        raise ValueError("labeling length does not match instance")
    unary = sum(abs(xi - s) for xi, s in zip(x, inst.sims))
    pair = sum(w for i, j, w in inst.edges if x[i] != x[j])
    return unary + inst.lam * pair


def graph_cut(inst: MrfInstance) -> tuple[int, ...]:
    """Exact minimizer by s-t min-cut; label 1 = source side of the canonical cut.

    Cutting s->i (node on sink side, label 0) costs S_i; cutting i->t (label 1)
    costs 1 - S_i; each MRF edge contributes lambda * IoU in both directions.
    """
    n = len(inst.sims)
    if n == 0:
        return ()
    s, t = n, n + 1
    net = FlowNetwork(n + 2)
    for i, si in enumerate(inst.sims):
        net.add_edge(s, i, si)
        net.add_edge(i, t, 1.0 - si)
    for i, j, w in inst.edges:
        c = inst.lam * w
        if c > 0:
            net.add_edge(i, j, c, c)
    net.max_flow(s, t)
    side = net.source_side(s)
    return tuple(1 if i in side else 0 for i in range(n))


def _all_labelings(n: int) -> np.ndarray:
    # row k is labeling k in lexicographic order (x_0 most significant)
    k = np.arange(2**n, dtype=np.int64)[:, None]
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)[None, :]
    return ((k >> shifts) & 1).astype(np.int8)


def brute_force_energies(inst: MrfInstance) -> tuple[np.ndarray, np.ndarray]:
    n = len(inst.sims)
    if n > BRUTE_FORCE_MAX_NODES:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}")
    X = _all_labelings(n)
    S = np.asarray(inst.sims, dtype=float)
    E = np.abs(X - S[None, :]).sum(axis=1) if n else np.zeros(1)
    for i, j, w in inst.edges:
        E = E + inst.lam * w * (X[:, i] != X[:, j])
    return X, E


def brute_force_min(inst: MrfInstance, tol: float = 1e-12) -> tuple[int, ...]:
    """Exhaustive minimum; the lexicographically smallest labeling wins ties."""
    X, E = brute_force_energies(inst)
    k = int(np.flatnonzero(E <= E.min() + tol)[0])
    return tuple(int(v) for v in X[k])


def random_instance(rng: np.random.Generator, n: int, lam: float | None = None,
                    edge_prob: float = 0.3) -> MrfInstance:
    """Random instance with sims and IoU weights in [0, 1]."""
    if lam is None:
        lam = float(rng.choice([0.0, 0.1, 1.0]))
    sims = tuple(float(v) for v in rng.random(n))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < edge_prob:
                edges.append((i, j, float(rng.random())))
    return MrfInstance(sims, tuple(edges), lam)


def fuzz(trials: int, max_nodes: int, seed: int = 0, tol: float = 1e-9) -> list[dict]:
    """Compare graph_cut against brute force; returns the mismatching instances."""
    if max_nodes > BRUTE_FORCE_MAX_NODES:
        raise ValueError(f"max_nodes must be <= {BRUTE_FORCE_MAX_NODES}")
    rng = np.random.default_rng(seed)
    failures = []
    for _ in range(trials):
        n = int(rng.integers(1, max_nodes + 1))
        inst = random_instance(rng, n, edge_prob=float(rng.uniform(0.1, 0.9)))
        e_cut = total_energy(inst, graph_cut(inst))
        e_bf = total_energy(inst, brute_force_min(inst))
        if abs(e_cut - e_bf) > tol:
            failures.append({"instance": inst.to_json(e_bf), "graph_cut_energy": e_cut})
    return failures
