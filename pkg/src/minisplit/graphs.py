"""Directed graphs with increasing edge orientation and their laplacians.

Nodes are labeled 1..n and every edge (h, i) satisfies h < i, which matches
the evaluation order of the resolvents.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class GraphSpec:
    n: int
    edges: tuple

    def __post_init__(self):
        edges = tuple((int(h), int(i)) for h, i in self.edges)
        if self.n < 2:
            raise ParameterError("graphs need at least two nodes")
        seen = set()
        for h, i in edges:
            if not (1 <= h < i <= self.n):
                raise ParameterError(f"edge ({h}, {i}) must satisfy 1 <= h < i <= n")
            if (h, i) in seen:
                raise ParameterError(f"duplicate edge ({h}, {i})")
            seen.add((h, i))
        object.__setattr__(self, "edges", edges)

    def degrees(self):
        d = np.zeros(self.n, dtype=int)
        for h, i in self.edges:
            d[h - 1] += 1
            d[i - 1] += 1
        return d


def graph_laplacian(g):
    """Degree matrix minus adjacency; PSD with the all-ones null direction."""
    lap = np.zeros((g.n, g.n))
    for h, i in g.edges:
        lap[h - 1, h - 1] += 1.0
        lap[i - 1, i - 1] += 1.0
        lap[h - 1, i - 1] -= 1.0
        lap[i - 1, h - 1] -= 1.0
    return lap


def is_connected(g):
    """Connectivity of the underlying undirected graph."""
    adj = [[] for _ in range(g.n)]
    for h, i in g.edges:
        adj[h - 1].append(i - 1)
        adj[i - 1].append(h - 1)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def path_graph(n):
    return GraphSpec(n, tuple((i, i + 1) for i in range(1, n)))


def ring_graph(n):
    return GraphSpec(n, tuple((i, i + 1) for i in range(1, n)) + ((1, n),))


def complete_graph(n):
    return GraphSpec(n, tuple((h, i) for h in range(1, n + 1) for i in range(h + 1, n + 1)))


_BUILDERS = {"path": path_graph, "ring": ring_graph, "complete": complete_graph}


def build_graph(kind, n):
    """Named builders with edges oriented low to high."""
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise ParameterError(f"unknown graph kind {kind!r}; pick from {sorted(_BUILDERS)}")
    return builder(n)
