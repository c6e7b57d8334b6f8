"""Leader election on a ring (renaming plus a flooded joint draw)."""

from __future__ import annotations

from ..building_blocks import LeaderProtocol

__all__ = ["LeaderProtocol"]
