"""Ring partition into two equal halves of paired agents.

The minimum-id agent starts a token clockwise that marks positions
alternately.  Neighbors at positions ``(2j, 2j+1)`` swap one random bit each
and output ``(own + partner + mark) mod 2``, so each pair holds one 0 and one
1 while no single agent controls its own group.  On an odd ring the returning
token carries the wrong mark and the starter aborts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple

from ..building_blocks import canonical_ring, wake_up, wake_up_rounds
from ..engine import AgentContext, Group, ProblemKind, ProblemSpec, Protocol, concrete, xor
from ..errors import PreconditionError
from ..topology import Topology


class Token(NamedTuple):
    mark: int


class PairBit(NamedTuple):
    value: Any


def partner_of(layout: tuple[int, ...], pos: int) -> int:
    """Position of the agent a given position swaps bits with."""
    n = len(layout)
    return (pos + 1) % n if pos % 2 == 1 else (pos - 1) % n


@dataclass(frozen=True)
class RingPartition(Protocol):
    name: str = field(default="partition", init=False)
    input_size = None

    @property
    def problem(self) -> ProblemSpec:
        return ProblemSpec(ProblemKind.RING_PARTITION)

    def check_topology(self, g: Topology) -> None:
        canonical_ring(g)
        if g.n < 3:
            raise PreconditionError("ring partition needs at least three agents")

    def agent(self, ctx: AgentContext):
        res, inbox = yield from wake_up(ctx)
        g = res.learned_topology
        try:
            layout = canonical_ring(g)
        except PreconditionError as e:
            ctx.abort(str(e))
        n = len(layout)
        pos = layout.index(ctx.node)
        mark = pos % 2
        pred, succ = layout[(pos - 1) % n], layout[(pos + 1) % n]
        partner = succ if mark == 1 else pred
        # token round, send round and receive round of the bit exchange
        token_at = n + 1 if pos == 0 else pos + 1
        send_at = token_at + 1 if mark == 1 else token_at
        recv_at = (pos + 3) if mark == 1 else (n + 2 if pos == 0 else pos + 2)
        own = ctx.rng.pad(Group.xor_bits(1), "pair")
        ctx.memory.update(position=pos, mark=mark, partner=partner)
        theirs = None
        for t in range(1, recv_at + 1):
            for m in inbox:
                p = m.payload
                if isinstance(p, Token) and t == token_at and m.src == pred:
                    if p.mark != mark:
                        ctx.abort("token returned with the wrong parity: odd ring")
                    if pos != 0:
                        ctx.send(succ, Token((pos + 1) % 2))
                elif isinstance(p, PairBit) and t == recv_at and m.src == partner and theirs is None:
                    theirs = p.value
                else:
                    ctx.abort(f"unexpected {type(p).__name__} from {m.src} at local round {t}")
            if pos == 0 and t == 1:
                ctx.send(succ, Token(1))
            if t == send_at:
                ctx.send(partner, PairBit(own))
            if t == recv_at:
                break
            inbox = yield
        if theirs is None:
            ctx.abort("partner bit missing")
        ctx.output(concrete(xor(xor(own, theirs), mark)))

    def round_bound(self, g: Topology) -> int:
        return wake_up_rounds(g) + g.n + 4

    def milestones(self, g: Topology) -> list[int]:
        w = wake_up_rounds(g)
        return [0, w, w + g.n]
