"""Dinic max-flow on float capacities, with min-cut source-side extraction."""

from __future__ import annotations

from collections import deque

EPS = 1e-12


class FlowNetwork:
    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        # parallel edge arrays; edge e and e ^ 1 are a residual pair
        self.to: list[int] = []
        self.cap: list[float] = []

    def add_edge(self, u: int, v: int, cap: float, rev_cap: float = 0.0) -> None:
        self.adj[u].append(len(self.to))
        self.to.append(v)
        self.cap.append(cap)
        self.adj[v].append(len(self.to))
        self.to.append(u)
        self.cap.append(rev_cap)

    def _bfs(self, s: int, t: int) -> list[int] | None:
        level = [-1] * self.n
        level[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for e in self.adj[u]:
                v = self.to[e]
                if level[v] < 0 and self.cap[e] > EPS:
                    level[v] = level[u] + 1
                    q.append(v)
        return level if level[t] >= 0 else None

    def _dfs(self, u: int, t: int, f: float, level: list[int], it: list[int]) -> float:
        if u == t:
            return f
        adj = self.adj[u]
        while it[u] < len(adj):
            e = adj[it[u]]
            v = self.to[e]
            if self.cap[e] > EPS and level[v] == level[u] + 1:
                pushed = self._dfs(v, t, min(f, self.cap[e]), level, it)
                if pushed > EPS:
                    self.cap[e] -= pushed
                    self.cap[e ^ 1] += pushed
                    return pushed
            it[u] += 1
        return 0.0

    def max_flow(self, s: int, t: int) -> float:
        flow = 0.0
        while True:
            level = self._bfs(s, t)
            if level is None:
                return flow
            it = [0] * self.n
            while True:
                f = self._dfs(s, t, float("inf"), level, it)
                if f <= EPS:
                    break
                flow += f

    def source_side(self, s: int) -> set[int]:
        """Nodes reachable from `s` in the residual graph (after max_flow)."""
        seen = {s}
        q = deque([s])
        while q:
            u = q.popleft()
            for e in self.adj[u]:
                v = self.to[e]
                if v not in seen and self.cap[e] > EPS:
                    seen.add(v)
                    q.append(v)
        return seen
