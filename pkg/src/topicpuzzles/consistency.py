"""Consistency scoring of candidate word sets.

A set's score is the relatedness of its two most dissimilar words, where
pair relatedness is the widest-path (max over paths of the min edge) value
in the complete similarity graph. Because edge weights are nonnegative,
that score equals the minimum edge weight of a maximum spanning tree, which
is how ``bottleneck_score`` computes it; ``widest_path_sim`` is the exact
path-enumeration oracle used to cross-check the identity in tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class WeightedGraph:
    """Complete graph over a candidate word set: node labels (word indices)
    plus the symmetric similarity submatrix, weights in [0, 1]."""

    nodes: tuple[int, ...]
    weights: np.ndarray

    def __post_init__(self):
        self.nodes = tuple(int(n) for n in self.nodes)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        size = len(self.nodes)
        if len(set(self.nodes)) != size:
            raise ValueError("graph nodes must be distinct")
        if self.weights.shape != (size, size):
            raise ValueError(
                f"weight matrix shape {self.weights.shape} does not match "
                f"{size} nodes"
            )
        if not np.array_equal(self.weights, self.weights.T):
            raise ValueError("weight matrix must be symmetric")
        if np.any(self.weights < 0.0) or np.any(self.weights > 1.0):
            raise ValueError("similarity weights must lie in [0, 1]")

    def __len__(self):
        return len(self.nodes)

    def position(self, node):
        return self.nodes.index(node)


@dataclass(eq=False)
class SpanningTree:
    """Edges (node, node, weight) of a spanning tree."""

    edges: tuple[tuple[int, int, float], ...]

    @property
    def total_weight(self):
        return float(sum(w for _, _, w in self.edges))

    @property
    def min_edge_weight(self):
        return float(min(w for _, _, w in self.edges))


class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def max_spanning_tree(graph):
    """Kruskal on descending edge weight; ties prefer the lexicographically
    smaller (node, node) pair, so the tree is deterministic."""
    size = len(graph)
    if size < 2:
        raise ValueError(f"spanning tree needs at least 2 nodes, got {size}")
    edges = []
    for i in range(size):
        for j in range(i + 1, size):
            a, b = graph.nodes[i], graph.nodes[j]
            if a > b:
                a, b = b, a
            edges.append((a, b, float(graph.weights[i, j])))
    edges.sort(key=lambda e: (-e[2], e[0], e[1]))
    uf = _UnionFind(graph.nodes)
    chosen = []
    for a, b, w in edges:
        if uf.union(a, b):
            chosen.append((a, b, w))
            if len(chosen) == size - 1:
                break
    return SpanningTree(edges=tuple(chosen))


def bottleneck_score(graph):
    """Similarity of the two most dissimilar words in the set: the minimum
    edge weight of the maximum spanning tree."""
    return max_spanning_tree(graph).min_edge_weight


def widest_path_sim(graph, node_a, node_b):
    """Exact max-min path value between two nodes, by depth-first
    enumeration of simple paths (exponential; meant for small sets).
    Branches whose running minimum cannot strictly improve the best value
    are pruned, which preserves exactness."""
    if node_a == node_b:
        raise ValueError("widest path requires two distinct nodes")
    start = graph.position(node_a)
    goal = graph.position(node_b)
    size = len(graph)
    weights = graph.weights
    best = -np.inf
    visited = [False] * size
    visited[start] = True

    def explore(current, running_min):
        nonlocal best
        for nxt in range(size):
            if visited[nxt]:
                continue
            value = min(running_min, weights[current, nxt])
            if value <= best:
                continue
            if nxt == goal:
                best = value
                continue
            visited[nxt] = True
            explore(nxt, value)
            visited[nxt] = False

    explore(start, np.inf)
    return float(best)


@dataclass
class ConsistentSet:
    """A word set that passed the consistency threshold, with its score and
    the threshold it was scored against."""

    topic_index: int
    word_indices: tuple[int, ...]
    words: tuple[str, ...]
    score: float
    delta: float


def identify_consistent_sets(sets, sim, delta):
    """Score each candidate word set on its similarity submatrix and keep
    those scoring strictly above delta, preserving input (topic) order."""
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must be in [0, 1), got {delta}")
    kept = []
    for word_set in sets:
        indices = tuple(int(i) for i in word_set.word_indices)
        submatrix = sim.similarity_submatrix(indices)
        graph = WeightedGraph(nodes=indices, weights=submatrix)
        score = bottleneck_score(graph)
        if score > delta:
            kept.append(
                ConsistentSet(
                    topic_index=word_set.topic_index,
                    word_indices=indices,
                    words=tuple(sim.word_for_index(i) for i in indices),
                    score=score,
                    delta=delta,
                )
            )
    return kept


def save_consistent_sets(sets, path):
    """JSON-lines output: one object per consistent set."""
    with open(path, "w", encoding="utf-8") as fh:
        for cs in sets:
            record = {
                "topic": cs.topic_index,
                "words": list(cs.words),
                "word_indices": list(cs.word_indices),
                "score": cs.score,
                "delta": cs.delta,
            }
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def load_consistent_sets(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            out.append(
                ConsistentSet(
                    topic_index=record["topic"],
                    word_indices=tuple(record["word_indices"]),
                    words=tuple(record["words"]),
                    score=record["score"],
                    delta=record["delta"],
                )
            )
    return out
