"""Problem specifications, legality predicates and output classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping

from ..topology import Topology


class _Bottom:
    """The abort output ⊥."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "⊥"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()


class Verdict(str, Enum):
    LEGAL = "Legal"
    ERRONEOUS = "Erroneous"


class ProblemKind(str, Enum):
    KNOWLEDGE_SHARING = "KnowledgeSharing"
    TWO_KNOWLEDGE_SHARING = "TwoKnowledgeSharing"
    COLORING = "Coloring"
    LEADER_ELECTION = "LeaderElection"
    RING_PARTITION = "RingPartition"
    ORIENTATION = "Orientation"


def _ks_legal(t: Topology, o: Mapping[int, Any], params: Mapping[str, Any]) -> bool:
    values = set(o.values())
    if len(values) != 1:
        return False
    (v,) = values
    k = params.get("k")
    return k is None or (isinstance(v, int) and 0 <= v < k)


def _coloring_legal(t: Topology, o: Mapping[int, Any], params: Mapping[str, Any]) -> bool:
    return all(o[a] != o[b] for a, b in t.edges)


def _leader_legal(t: Topology, o: Mapping[int, Any], params: Mapping[str, Any]) -> bool:
    vals = list(o.values())
    return all(v in (0, 1) for v in vals) and vals.count(1) == 1


def _partition_legal(t: Topology, o: Mapping[int, Any], params: Mapping[str, Any]) -> bool:
    vals = list(o.values())
    return all(v in (0, 1) for v in vals) and 2 * vals.count(0) == len(vals)


def _orientation_legal(t: Topology, o: Mapping[int, Any], params: Mapping[str, Any]) -> bool:
    heads: dict[tuple[int, int], list[int]] = {e: [] for e in t.edges}
    for v, entries in o.items():
        try:
            listed = dict(entries)
        except (TypeError, ValueError):
            return False
        if set(listed) != set(t.neighbors(v)):
            return False
        for u, head in listed.items():
            e = (v, u) if v < u else (u, v)
            if head not in e:
                return False
            heads[e].append(head)
    return all(len(h) == 2 and h[0] == h[1] for h in heads.values())


_PREDICATES: dict[ProblemKind, Callable[[Topology, Mapping[int, Any], Mapping[str, Any]], bool]] = {
    ProblemKind.KNOWLEDGE_SHARING: _ks_legal,
    ProblemKind.TWO_KNOWLEDGE_SHARING: _ks_legal,
    ProblemKind.COLORING: _coloring_legal,
    ProblemKind.LEADER_ELECTION: _leader_legal,
    ProblemKind.RING_PARTITION: _partition_legal,
    ProblemKind.ORIENTATION: _orientation_legal,
}


@dataclass(frozen=True)
class ProblemSpec:
    kind: ProblemKind
    params: Mapping[str, Any] = field(default_factory=dict)

    def legal(self, t: Topology, o: Mapping[int, Any]) -> bool:
        return _PREDICATES[self.kind](t, o, self.params)


def classify_output(t: Topology, o: Mapping[int, Any], p: ProblemSpec) -> Verdict:
    if set(o) != set(t.nodes):
        raise ValueError("output vector must cover every original agent")
    if any(v is BOTTOM for v in o.values()):
        return Verdict.ERRONEOUS
    return Verdict.LEGAL if p.legal(t, o) else Verdict.ERRONEOUS
