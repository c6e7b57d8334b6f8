"""Protocol registry keyed by the problem names used in scenario files."""

from __future__ import annotations

from typing import Any, Callable

from ..engine import Protocol
from ..errors import UnknownProblem
from .coloring import ColoringRing, ColoringViaOrientation, ColoringViaRenaming
from .knowledge_sharing import KnowledgeSharing, TwoKnowledgeSharing
from .leader import LeaderProtocol
from .orientation import EdgeOrientation
from .partition import RingPartition

REGISTRY: dict[str, Callable[..., Protocol]] = {
    "ks": KnowledgeSharing,
    "ks2": TwoKnowledgeSharing,
    "color-renaming": ColoringViaRenaming,
    "color-orient": ColoringViaOrientation,
    "color-ring": ColoringRing,
    "partition": RingPartition,
    "orientation": EdgeOrientation,
    "leader": LeaderProtocol,
}


def make_protocol(name: str, **params: Any) -> Protocol:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise UnknownProblem(f"unknown problem {name!r}; known: {', '.join(REGISTRY)}") from None
    return factory(**params)


__all__ = [
    "REGISTRY",
    "make_protocol",
    "KnowledgeSharing",
    "TwoKnowledgeSharing",
    "ColoringViaRenaming",
    "ColoringViaOrientation",
    "ColoringRing",
    "RingPartition",
    "EdgeOrientation",
    "LeaderProtocol",
]
