"""Graphs of agent slots, rings, and the duplication transform.

A :class:`Topology` is an immutable undirected graph whose nodes are integer
agent ids.  Rings additionally carry a clockwise ``layout``.  The duplication
transform replaces one node (the cheater) by a path of fresh virtual ids and
redistributes the cheater's edges between the two ends of that path.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import networkx as nx

from .errors import DuplicateId, InvalidWiring, NoLayout, PreconditionError, SizeTooSmall, TopologyError

ID_SPACE = 2**64 - 1


class Direction(str, Enum):
    CW = "cw"
    CCW = "ccw"


def _edge(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Topology:
    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]
    layout: tuple[int, ...] | None = None
    _adj: Mapping[int, tuple[int, ...]] = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        nodes = frozenset(int(v) for v in self.nodes)
        edges = set()
        for a, b in self.edges:
            if a == b:
                raise TopologyError(f"self-loop on {a}")
            if a not in nodes or b not in nodes:
                raise TopologyError(f"edge ({a},{b}) references an unknown node")
            e = _edge(a, b)
            if e in edges:
                raise TopologyError(f"duplicate edge {e}")
            edges.add(e)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", frozenset(edges))
        adj: dict[int, list[int]] = {v: [] for v in nodes}
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adj", {v: tuple(sorted(ns)) for v, ns in adj.items()})
        if self.layout is not None:
            layout = tuple(int(v) for v in self.layout)
            if len(layout) < 3:
                raise SizeTooSmall("a ring needs at least 3 nodes")
            if len(set(layout)) != len(layout) or set(layout) != nodes:
                raise TopologyError("layout must list every node exactly once")
            ring = {_edge(layout[i], layout[(i + 1) % len(layout)]) for i in range(len(layout))}
            if ring != edges:
                raise TopologyError("layout edges differ from the edge set")
            object.__setattr__(self, "layout", layout)

    # basic queries

    @property
    def n(self) -> int:
        return len(self.nodes)

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def max_degree(self) -> int:
        return max((len(ns) for ns in self._adj.values()), default=0)

    def has_edge(self, a: int, b: int) -> bool:
        return _edge(a, b) in self.edges

    def is_ring(self) -> bool:
        return self.layout is not None

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(sorted(self.nodes))
        g.add_edges_from(sorted(self.edges))
        return g

    def diameter(self) -> int:
        return nx.diameter(self.to_networkx()) if self.n > 1 else 0

    def position(self, v: int) -> int:
        if self.layout is None:
            raise NoLayout("topology has no ring layout")
        return self.layout.index(v)

    def relabel(self, mapping: Mapping[int, int]) -> "Topology":
        m = lambda v: mapping.get(v, v)  # noqa: E731
        layout = tuple(m(v) for v in self.layout) if self.layout else None
        return Topology(frozenset(m(v) for v in self.nodes), frozenset((m(a), m(b)) for a, b in self.edges), layout)

    # serialization

    def to_text(self) -> str:
        lines = [f"nodes = [{', '.join(str(v) for v in sorted(self.nodes))}]"]
        lines.append("edges = [" + ", ".join(f"[{a}, {b}]" for a, b in sorted(self.edges)) + "]")
        if self.layout is not None:
            lines.append(f"layout = [{', '.join(str(v) for v in self.layout)}]")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Topology":
        fields: dict[str, str] = {}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise TopologyError(f"cannot parse line {raw!r}")
            fields[key.strip()] = value.strip()
        if "nodes" not in fields or "edges" not in fields:
            raise TopologyError("topology text needs 'nodes' and 'edges'")
        nodes = [int(x) for x in re.findall(r"-?\d+", fields["nodes"])]
        flat = [int(x) for x in re.findall(r"-?\d+", fields["edges"])]
        if len(flat) % 2:
            raise TopologyError("edges must be pairs")
        edges = [(flat[i], flat[i + 1]) for i in range(0, len(flat), 2)]
        layout = None
        if "layout" in fields:
            layout = tuple(int(x) for x in re.findall(r"-?\d+", fields["layout"]))
        if len(set(nodes)) != len(nodes):
            raise DuplicateId("duplicate node id")
        return cls(frozenset(nodes), frozenset(edges), layout)


def from_edges(nodes: Iterable[int], edges: Iterable[tuple[int, int]]) -> Topology:
    nodes = list(nodes)
    if len(set(nodes)) != len(nodes):
        raise DuplicateId("duplicate node id")
    return Topology(frozenset(nodes), frozenset(tuple(e) for e in edges))


def build_ring(n: int, ids: Sequence[int]) -> Topology:
    if n < 3:
        raise SizeTooSmall(f"a ring needs n >= 3, got {n}")
    if len(ids) != n:
        raise PreconditionError(f"expected {n} ids, got {len(ids)}")
    if len(set(ids)) != n:
        raise DuplicateId("ring ids must be unique")
    layout = tuple(int(v) for v in ids)
    edges = frozenset(_edge(layout[i], layout[(i + 1) % n]) for i in range(n))
    return Topology(frozenset(layout), edges, layout)


def check_two_vertex_connected(t: Topology) -> bool:
    if t.n < 3:
        return False
    return nx.is_biconnected(t.to_networkx())


def fresh_ids(existing: Iterable[int], count: int, seed: int = 0) -> list[int]:
    """Draw ``count`` distinct ids from the 64-bit space avoiding ``existing``."""
    taken = set(existing)
    rng = random.Random(seed)
    out: list[int] = []
    while len(out) < count:
        v = rng.randint(1, ID_SPACE)
        if v not in taken:
            taken.add(v)
            out.append(v)
    return out


def ring_distance(t: Topology, a: int, b: int, direction: Direction | str) -> int:
    if t.layout is None:
        raise NoLayout("ring_distance needs a ring layout")
    n = len(t.layout)
    pa, pb = t.position(a), t.position(b)
    cw = (pb - pa) % n
    return cw if Direction(direction) is Direction.CW else (n - cw) % n


def ring_step(t: Topology, v: int, steps: int) -> int:
    """Node reached from ``v`` after ``steps`` clockwise hops (negative = ccw)."""
    if t.layout is None:
        raise NoLayout("ring_step needs a ring layout")
    return t.layout[(t.position(v) + steps) % len(t.layout)]


@dataclass(frozen=True)
class DuplicationScheme:
    """A cheater replaced by a path ``virtual_ids[0] - ... - virtual_ids[-1]``.

    ``wiring`` maps each original neighbor of the cheater to the virtual node
    that takes over that edge.  On rings it may be left empty: the
    counterclockwise neighbor is wired to the head and the clockwise neighbor
    to the tail.
    """

    cheater: int
    virtual_ids: tuple[int, ...]
    wiring: Mapping[int, int] = field(default_factory=dict)
    internal_edges: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "virtual_ids", tuple(int(v) for v in self.virtual_ids))
        object.__setattr__(self, "wiring", dict(self.wiring))
        if len(self.virtual_ids) < 1:
            raise PreconditionError("a duplication scheme needs d >= 1")
        if len(set(self.virtual_ids)) != len(self.virtual_ids):
            raise DuplicateId("virtual ids must be distinct")

    @property
    def d(self) -> int:
        return len(self.virtual_ids)

    @property
    def head(self) -> int:
        return self.virtual_ids[0]

    @property
    def tail(self) -> int:
        return self.virtual_ids[-1]


def apply_duplication(t: Topology, s: DuplicationScheme) -> Topology:
    if s.cheater not in t.nodes:
        raise PreconditionError(f"cheater {s.cheater} is not a node")
    clash = set(s.virtual_ids) & (t.nodes - {s.cheater})
    if clash:
        raise DuplicateId(f"virtual ids {sorted(clash)} collide with existing nodes")
    vs = s.virtual_ids
    nbrs = t.neighbors(s.cheater)
    wiring = dict(s.wiring)
    if t.layout is not None and not wiring:
        ccw = ring_step(t, s.cheater, -1)
        cw = ring_step(t, s.cheater, 1)
        wiring = {ccw: vs[0], cw: vs[-1]}
    for v in nbrs:
        if v not in wiring:
            raise InvalidWiring(f"edge ({s.cheater},{v}) is not assigned to a virtual node")
    for v, w in wiring.items():
        if v not in nbrs:
            raise InvalidWiring(f"{v} is not a neighbor of the cheater")
        if w not in vs:
            raise InvalidWiring(f"{w} is not a virtual id")
    internal = s.internal_edges
    if internal is None:
        internal = tuple((vs[i], vs[i + 1]) for i in range(len(vs) - 1))
    nodes = (t.nodes - {s.cheater}) | set(vs)
    edges = {e for e in t.edges if s.cheater not in e}
    edges |= {_edge(a, b) for a, b in internal}
    edges |= {_edge(v, w) for v, w in wiring.items()}
    layout = None
    if t.layout is not None:
        ring_shape = wiring.get(ring_step(t, s.cheater, -1)) == vs[0] and wiring.get(ring_step(t, s.cheater, 1)) == vs[-1]
        if ring_shape and s.internal_edges is None:
            i = t.position(s.cheater)
            layout = t.layout[:i] + vs + t.layout[i + 1 :]
    return Topology(frozenset(nodes), frozenset(edges), layout)


def owners_map(t: Topology, s: DuplicationScheme | None) -> dict[int, int]:
    """Map every node of the executed graph to the original agent controlling it."""
    owners = {v: v for v in t.nodes}
    if s is not None:
        owners.pop(s.cheater, None)
        for v in s.virtual_ids:
            owners[v] = s.cheater
    return owners


def h_construction(d_ids: Sequence[int], cheater: int, e_ids: Sequence[int], ends: tuple[int, int]) -> tuple[Topology, DuplicationScheme]:
    """Ring form of the two-subgraph construction.

    The original ring is ``d_ids + [cheater]``.  The cheater pretends to be the
    segment ``[ends[0], *e_ids, ends[1]]``, so the executed ring has
    ``len(d_ids) + len(e_ids) + 2`` nodes.
    """
    g = build_ring(len(d_ids) + 1, list(d_ids) + [cheater])
    scheme = DuplicationScheme(cheater, (ends[0], *e_ids, ends[1]))
    return g, scheme
