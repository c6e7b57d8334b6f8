"""Edge orientation by joint coin flips.

Each endpoint of an edge sends the other one random bit; the xor of the two
bits decides whether the edge points to the higher or the lower id.  Both
endpoints compute the same head, so the output is always consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple

from ..engine import BOTTOM, AgentContext, Group, ProblemKind, ProblemSpec, Protocol, concrete, xor
from ..topology import DuplicationScheme, Topology


class EdgeBit(NamedTuple):
    value: Any
    sender: int


def head_of(a: int, b: int, coin: int) -> int:
    return max(a, b) if coin == 1 else min(a, b)


@dataclass(frozen=True)
class EdgeOrientation(Protocol):
    name: str = field(default="orientation", init=False)
    input_size = None

    @property
    def problem(self) -> ProblemSpec:
        return ProblemSpec(ProblemKind.ORIENTATION)

    def agent(self, ctx: AgentContext):
        group = Group.xor_bits(1)
        mine = {}
        for u in ctx.neighbors:
            mine[u] = ctx.rng.pad(group, f"edge-{u}")
            ctx.send(u, EdgeBit(mine[u], ctx.node))
        inbox = yield
        got = {}
        for m in inbox:
            p = m.payload
            if not isinstance(p, EdgeBit) or p.sender != m.src or m.src in got:
                ctx.abort(f"bad edge bit from {m.src}")
            got[m.src] = p.value
        if set(got) != set(ctx.neighbors):
            ctx.abort("an edge bit is missing")
        ctx.output(tuple(sorted((u, head_of(ctx.node, u, concrete(xor(mine[u], got[u])))) for u in ctx.neighbors)))

    def round_bound(self, g: Topology) -> int:
        return 3

    def translate_output(self, value: Any, owners: Mapping[int, int]) -> Any:
        return tuple(sorted((owners.get(u, u), owners.get(h, h)) for u, h in value))

    def merge_outputs(self, outputs, scheme: DuplicationScheme, contexts, preference):
        inside = set(scheme.virtual_ids)
        entries = []
        for v in scheme.virtual_ids:
            out = outputs.get(v, BOTTOM)
            if out is BOTTOM:
                return BOTTOM
            entries.extend((u, h) for u, h in out if u not in inside)
        return tuple(sorted(entries))
