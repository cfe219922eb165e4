"""Finite connected simple metric graphs and vertex-local incidence data.

Edges are oriented and identified with [0, 1]; the tail of an edge sits at
coordinate 0, the head at coordinate 1. Vertex and edge ids are dense
integers assigned in input order, so every downstream matrix layout is
reproducible from the edge list alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Sequence

from .errors import (
    DisconnectedError,
    DuplicateEdgeError,
    GraphError,
    SelfLoopError,
    UnknownVertexError,
)


@dataclass(frozen=True)
class VertexIncidence:
    """Incidence record of one vertex.

    Attributes:
        vertex: dense vertex id.
        edges: incident edge ids, sorted ascending.
        endpoint: per-edge coordinate of this vertex, 0 (tail) or 1 (head),
            aligned with ``edges``.
    """

    vertex: int
    edges: tuple[int, ...]
    endpoint: tuple[int, ...]

    @property
    def tail_side(self) -> tuple[int, ...]:
        """Edge ids with this vertex at coordinate 0."""
        return tuple(e for e, l in zip(self.edges, self.endpoint) if l == 0)

    @property
    def head_side(self) -> tuple[int, ...]:
        """Edge ids with this vertex at coordinate 1."""
        return tuple(e for e, l in zip(self.edges, self.endpoint) if l == 1)

    @property
    def nu(self) -> tuple[int, ...]:
        """Orientation signs, -1 at a tail and +1 at a head."""
        return tuple(2 * l - 1 for l in self.endpoint)

    def coordinate(self, edge: int) -> int:
        try:
            return self.endpoint[self.edges.index(edge)]
        except ValueError:
            raise GraphError(f"edge {edge} is not incident to vertex {self.vertex}") from None

    @property
    def degree(self) -> int:
        return len(self.edges)


class MetricGraph:
    """Immutable simple connected graph with oriented, parametrized edges."""

    def __init__(self, edges: Sequence[tuple[int, int]], vertex_labels: Sequence[Hashable]):
        self.edges = tuple((int(a), int(b)) for a, b in edges)
        self.vertex_labels = tuple(vertex_labels)
        self.n = len(self.vertex_labels)
        self.m = len(self.edges)
        self._validate()
        self._incidence = tuple(self._build_incidence(v) for v in range(self.n))

    def _validate(self) -> None:
        seen = set()
        for eid, (a, b) in enumerate(self.edges):
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise GraphError(f"edge {eid} references unknown vertex")
            if a == b:
                raise SelfLoopError(f"edge {eid} is a self-loop at vertex {a}")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise DuplicateEdgeError(f"edge {eid} duplicates vertex pair {key}")
            seen.add(key)
        if self.n == 0 or self.m == 0:
            raise GraphError("graph needs at least one edge")
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        reached = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in reached:
                    reached.add(w)
                    stack.append(w)
        if len(reached) != self.n:
            missing = sorted(set(range(self.n)) - reached)
            raise DisconnectedError(f"vertices {missing} are not reachable from vertex 0")

    def _build_incidence(self, v: int) -> VertexIncidence:
        pairs = []
        for eid, (a, b) in enumerate(self.edges):
            if a == v:
                pairs.append((eid, 0))
            elif b == v:
                pairs.append((eid, 1))
        pairs.sort()
        return VertexIncidence(
            vertex=v,
            edges=tuple(e for e, _ in pairs),
            endpoint=tuple(l for _, l in pairs),
        )

    def incidence(self, v: int) -> VertexIncidence:
        if not (0 <= v < self.n):
            raise UnknownVertexError(f"vertex {v} not in graph with {self.n} vertices")
        return self._incidence[v]

    def incidences(self) -> tuple[VertexIncidence, ...]:
        return self._incidence

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"MetricGraph(n={self.n}, m={self.m}, edges={list(self.edges)})"


def build_graph(edge_list: Sequence[tuple[Hashable, Hashable]]) -> MetricGraph:
    """Build a MetricGraph from (tail, head) vertex pairs.

    Vertex labels may be arbitrary hashables; dense integer ids are assigned
    in order of first appearance. Edge ids follow input order.
    """
    if not edge_list:
        raise GraphError("empty edge list")
    ids: dict[Hashable, int] = {}
    norm = []
    for a, b in edge_list:
        for lab in (a, b):
            if lab not in ids:
                ids[lab] = len(ids)
        norm.append((ids[a], ids[b]))
    labels = [lab for lab, _ in sorted(ids.items(), key=lambda kv: kv[1])]
    return MetricGraph(norm, labels)
