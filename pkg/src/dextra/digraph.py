"""Directed communication graphs.

Edge convention: ``(i, j) in edges`` means agent ``j`` can send to agent
``i``.  Nodes are ``0..n-1`` and every node carries a self-loop.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np


@dataclass(frozen=True)
class Digraph:
    n: int
    edges: frozenset[tuple[int, int]]
    _in: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _out: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a digraph needs at least one node")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")
        missing = [i for i in range(self.n) if (i, i) not in edges]
        if missing:
            raise ValueError(f"self-loops missing on nodes {missing}")
        ins = [[] for _ in range(self.n)]
        outs = [[] for _ in range(self.n)]
        for i, j in sorted(edges):
            ins[i].append(j)
            outs[j].append(i)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_in", tuple(tuple(s) for s in ins))
        object.__setattr__(self, "_out", tuple(tuple(s) for s in outs))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], self_loops: bool = True) -> "Digraph":
        """Build a graph, adding the mandatory self-loops unless told not to."""
        es = set(edges)
        if self_loops:
            es.update((i, i) for i in range(n))
        return cls(n, frozenset(es))

    def in_neighbors(self, i: int) -> tuple[int, ...]:
        """Agents that send to ``i`` (including ``i``), sorted."""
        return self._in[i]

    def out_neighbors(self, j: int) -> tuple[int, ...]:
        """Agents that receive from ``j`` (including ``j``), sorted."""
        return self._out[j]

    def out_degree(self, j: int) -> int:
        return len(self._out[j])

    def in_degree(self, i: int) -> int:
        return len(self._in[i])

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Boolean matrix with ``adj[i, j]`` true iff ``j`` sends to ``i``."""
        adj = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = True
        return adj

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def is_symmetric(self) -> bool:
        return all((j, i) in self.edges for i, j in self.edges)

    def __len__(self) -> int:
        return len(self.edges)


def _reach_all(adj_lists, start: int, n: int) -> bool:
    seen = [False] * n
    seen[start] = True
    queue = deque([start])
    count = 1
    while queue:
        v = queue.popleft()
        for w in adj_lists[v]:
            if not seen[w]:
                seen[w] = True
                count += 1
                queue.append(w)
    return count == n


def is_strongly_connected(g: Digraph) -> bool:
    """True iff every node reaches every other node along directed edges."""
    # messages flow j -> i along out-neighbor lists; reverse flow along in-neighbor lists
    return _reach_all(g._out, 0, g.n) and _reach_all(g._in, 0, g.n)


def random_strongly_connected(n: int, extra_edge_prob: float, seed: int) -> Digraph:
    """Random digraph built around a random Hamiltonian cycle.

    The cycle guarantees strong connectivity; every other ordered pair is
    then added independently with probability ``extra_edge_prob``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= extra_edge_prob <= 1.0:
        raise ValueError("extra_edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    edges = {(i, i) for i in range(n)}
    if n > 1:
        for k in range(n):
            sender, receiver = int(perm[k]), int(perm[(k + 1) % n])
            edges.add((receiver, sender))
    coins = rng.random((n, n))
    for i in range(n):
        for j in range(n):
            if i != j and coins[i, j] < extra_edge_prob:
                edges.add((i, j))
    return Digraph(n, frozenset(edges))


def random_undirected_connected(n: int, extra_edge_prob: float, seed: int) -> Digraph:
    """Random connected undirected graph (stored as a symmetric digraph).

    A random spanning path guarantees connectivity; every other unordered pair
    is added with probability ``extra_edge_prob``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= extra_edge_prob <= 1.0:
        raise ValueError("extra_edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    edges = {(i, i) for i in range(n)}
    for k in range(n - 1):
        a, b = int(perm[k]), int(perm[k + 1])
        edges.update({(a, b), (b, a)})
    coins = rng.random((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if coins[i, j] < extra_edge_prob:
                edges.update({(i, j), (j, i)})
    return Digraph(n, frozenset(edges))
