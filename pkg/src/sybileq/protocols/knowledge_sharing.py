"""Knowledge Sharing on a ring via two secret transmissions per agent.

Timeline of the sharing phase, in phase-local rounds ``t = 1 .. 2N``:

* ``t = 1``: every agent masks its input with a fresh pad ``R`` for each of
  its two targets (clockwise neighbor, and the agent ``N // 2`` hops
  counterclockwise) and sends ``R`` clockwise and ``R xor input``
  counterclockwise.  Pieces hop once per round toward the target's neighbors.
* ``t = N-1``: the two neighbors of each target hand over the pieces.
* ``t = N``: targets decode.
* ``t = N+1``: inputs circulate openly clockwise, checked against the decoded
  copies.
* ``t = 2N``: everyone outputs ``q`` of all inputs.

Every agent knows the whole schedule, so any missing, early, late or
misrouted piece is detected by the agent that expected it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

from ..building_blocks import canonical_ring, elect_orientation, election_rounds, wake_up, wake_up_rounds
from ..engine import AgentContext, Group, ProblemKind, ProblemSpec, Protocol, same, xor
from ..errors import PreconditionError
from ..topology import Topology
from .base import field_bits, make_q

MIN_RING = 4


class Piece(NamedTuple):
    sender: int
    target: int
    kind: str
    countdown: int
    value: Any


class Circ(NamedTuple):
    origin: int
    value: Any


@dataclass(frozen=True)
class SharingPlan:
    """Static schedule of one sharing phase on a given oriented ring."""

    layout: tuple[int, ...]
    targets: Mapping[int, tuple[int, int]]
    paths: Mapping[tuple[int, int, str], tuple[int, ...]]
    expect: Mapping[int, Mapping[int, Mapping[tuple[int, int, str], tuple[int, int]]]]
    holds: Mapping[int, tuple[tuple[int, int, str], ...]]

    @property
    def n(self) -> int:
        return len(self.layout)


@lru_cache(maxsize=256)
def sharing_plan(layout: tuple[int, ...]) -> SharingPlan:
    n = len(layout)
    if n < MIN_RING:
        raise PreconditionError(f"knowledge sharing needs a ring of at least {MIN_RING} agents")
    h = n // 2
    targets = {}
    paths: dict[tuple[int, int, str], tuple[int, ...]] = {}
    expect: dict[int, dict[int, dict]] = {v: {} for v in layout}
    holds: dict[int, list] = {v: [] for v in layout}
    for i, s in enumerate(layout):
        b1, b2 = layout[(i + 1) % n], layout[(i - h) % n]
        targets[s] = (b1, b2)
        for b in (b1, b2):
            j = layout.index(b)
            hops_r = (j - 1 - i) % n
            hops_x = (i - (j + 1)) % n
            paths[(s, b, "R")] = tuple(layout[(i + d) % n] for d in range(hops_r + 1))
            paths[(s, b, "X")] = tuple(layout[(i - d) % n] for d in range(hops_x + 1))
            for kind in ("R", "X"):
                path = paths[(s, b, kind)]
                for d in range(1, len(path)):
                    expect[path[d]].setdefault(1 + d, {})[(s, b, kind)] = (path[d - 1], n - 1 - d)
                holds[path[-1]].append((s, b, kind))
                expect[b].setdefault(n, {})[(s, b, kind)] = (path[-1], 0)
    return SharingPlan(
        layout,
        targets,
        paths,
        {v: {t: dict(e) for t, e in d.items()} for v, d in expect.items()},
        {v: tuple(k) for v, k in holds.items()},
    )


def knowledge_sharing_phase(ctx: AgentContext, layout: tuple[int, ...], inbox: list, q, bits: int, final: bool = True):
    """Run the sharing phase; the agent's input is read from ``ctx.memory['ks_input']``.

    Returns ``(q(I), inbox)``.  With ``final`` the phase ends in the output
    round itself and ``inbox`` is ``None``.
    """
    plan = sharing_plan(layout)
    n = plan.n
    me = ctx.node
    i = layout.index(me)
    cw, ccw = layout[(i + 1) % n], layout[(i - 1) % n]
    mem = ctx.memory
    start = ctx.round
    mem["ks_start"] = start
    mem["layout"] = layout
    expect = plan.expect[me]
    holding: dict[tuple[int, int, str], Any] = {}
    at_target: dict[int, dict[str, Any]] = {}
    committed: dict[int, Any] = mem.setdefault("committed", {})
    opened: dict[int, Any] = mem.setdefault("opened", {})
    sent: dict[int, tuple[Any, Any]] = mem.setdefault("sent_pieces", {})
    group = Group.xor_bits(bits)
    my_holds = set(plan.holds[me])

    for t in range(1, 2 * n + 1):
        want = expect.get(t, {})
        got = set()
        for m in inbox:
            p = m.payload
            if isinstance(p, Piece):
                key = (p.sender, p.target, p.kind)
                e = want.get(key)
                if e is None or e[0] != m.src or e[1] != p.countdown or key in got:
                    ctx.abort(f"piece {key} arrived out of schedule")
                got.add(key)
                if p.target == me:
                    at_target.setdefault(p.sender, {})[p.kind] = p.value
                elif key in my_holds:
                    holding[key] = p.value
                else:
                    path = plan.paths[key]
                    ctx.send(path[path.index(me) + 1], Piece(p.sender, p.target, p.kind, p.countdown - 1, p.value))
            elif isinstance(p, Circ):
                d = t - (n + 1)
                if not (1 <= d <= n - 1) or m.src != ccw or p.origin != layout[(i - d) % n] or p.origin in opened:
                    ctx.abort(f"input of {p.origin} circulated out of schedule")
                opened[p.origin] = p.value
                if p.origin in committed and not same(committed[p.origin], p.value):
                    ctx.abort(f"circulated input of {p.origin} differs from its secret copy")
                if d < n - 1:
                    ctx.send(cw, p)
            else:
                ctx.abort(f"unexpected {type(p).__name__} during knowledge sharing")
        if got != set(want):
            ctx.abort(f"missing pieces {sorted(set(want) - got)}")

        if t == 1:
            value = mem["ks_input"]
            for b in plan.targets[me]:
                r = ctx.rng.pad(group, "mask")
                x = xor(r, value)
                sent[b] = (r, x)
                for kind, piece in (("R", r), ("X", x)):
                    key = (me, b, kind)
                    path = plan.paths[key]
                    if len(path) == 1:
                        holding[key] = piece
                    else:
                        ctx.send(path[1], Piece(me, b, kind, n - 2, piece))
        if t == n - 1:
            for key in plan.holds[me]:
                if key not in holding:
                    ctx.abort(f"nothing to hand over for {key}")
                ctx.send(key[1], Piece(key[0], key[1], key[2], 0, holding.pop(key)))
        if t == n:
            for s, pieces in at_target.items():
                committed[s] = xor(pieces["R"], pieces["X"])
        if t == n + 1:
            ctx.send(cw, Circ(me, mem["ks_input"]))
        if t == 2 * n:
            if len(opened) != n - 1:
                ctx.abort("not every input circulated")
            inputs = [mem["ks_input"] if v == me else opened[v] for v in layout]
            result = q(inputs)
            mem["ks_result"] = result
            if final:
                return result, None
        inbox = yield
    return result, inbox


def sharing_rounds(n: int) -> int:
    return 2 * n


def collective_inputs(payloads: Iterable[Any], own: Mapping[int, Any]) -> dict[int, Any]:
    """Inputs determined by a set of received payloads plus known own inputs.

    An input is known once it circulated openly or once both pieces of one of
    its secret transmissions were seen.
    """
    known = dict(own)
    pieces: dict[tuple[int, int], dict[str, Any]] = {}
    for p in payloads:
        if isinstance(p, Circ):
            known.setdefault(p.origin, p.value)
        elif isinstance(p, Piece):
            slot = pieces.setdefault((p.sender, p.target), {})
            slot[p.kind] = p.value
            if len(slot) == 2 and p.sender not in known:
                known[p.sender] = xor(slot["R"], slot["X"])
    return known


@dataclass(frozen=True)
class KnowledgeSharing(Protocol):
    """Every agent outputs ``q`` of all inputs."""

    k: int = 4
    field_size: int = 4
    q_name: str = "sum_mod"
    orientation: str = "canonical"
    name: str = field(default="ks", init=False)

    @property
    def input_size(self) -> int:
        return self.field_size

    @property
    def problem(self) -> ProblemSpec:
        return ProblemSpec(ProblemKind.KNOWLEDGE_SHARING, {"k": self.k})

    @property
    def params(self) -> Mapping[str, Any]:
        return {"k": self.k, "field_size": self.field_size, "q": self.q_name}

    @property
    def q(self):
        return make_q(self.q_name, self.k)

    def check_topology(self, g: Topology) -> None:
        canonical_ring(g)
        if g.n < MIN_RING:
            raise PreconditionError(f"knowledge sharing needs n' >= {MIN_RING}")

    def agent(self, ctx: AgentContext):
        res, inbox = yield from wake_up(ctx)
        g = res.learned_topology
        try:
            layout = canonical_ring(g)
        except PreconditionError as e:
            ctx.abort(str(e))
        if self.orientation == "elected":
            (_, layout), inbox = yield from elect_orientation(ctx, g, inbox, res.diameter)
        ctx.memory.setdefault("ks_input", ctx.input)
        value, _ = yield from knowledge_sharing_phase(ctx, layout, inbox, self.q, field_bits(self.field_size))
        ctx.output(value)

    def round_bound(self, g: Topology) -> int:
        extra = election_rounds(g, g.diameter()) if self.orientation == "elected" else 0
        return wake_up_rounds(g) + extra + sharing_rounds(g.n) + 2

    def milestones(self, g: Topology) -> list[int]:
        w = wake_up_rounds(g)
        if self.orientation == "elected":
            w += election_rounds(g, g.diameter())
        n = g.n
        return [0, w, w + n - 2, w + n, w + 2 * n - 2]


def two_knowledge_sharing(orientation: str = "canonical") -> KnowledgeSharing:
    """Knowledge sharing of one-bit inputs with ``q = xor``."""
    return TwoKnowledgeSharing(orientation=orientation)


@dataclass(frozen=True)
class TwoKnowledgeSharing(KnowledgeSharing):
    k: int = 2
    field_size: int = 2
    q_name: str = "xor"
    name: str = field(default="ks2", init=False)

    @property
    def problem(self) -> ProblemSpec:
        return ProblemSpec(ProblemKind.TWO_KNOWLEDGE_SHARING, {"k": 2})
