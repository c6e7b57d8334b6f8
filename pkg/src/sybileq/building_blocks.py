"""Reusable protocol phases.

Every phase is a generator used with ``yield from``.  A phase is entered in
some round ``R`` together with that round's inbox, may send messages, ends
rounds with ``inbox = yield``, and returns ``(result, inbox)`` where
``inbox`` belongs to the first round after the phase.  Phases know their own
length from the learned topology, so all honest agents stay in lock-step.

Stand-ins for the blocks the protocols borrow from prior work:

* wake-up floods ``(id, neighbor list)`` records until the graph is closed;
* the witnessed draw combines the owner's and its minimum-id neighbor's
  contributions modulo ``|X|``;
* prompt verification compares a direct copy with a copy relayed through the
  owner's witness along a path avoiding the owner;
* renaming is a sequence of witnessed draws over the remaining names, in id
  order, flooded so every agent knows every name;
* orientation election is renaming followed by a flooded global joint draw.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

from .engine import AgentContext, BOTTOM, Group, ProblemKind, ProblemSpec, Protocol, add, concrete, same
from .errors import EmptyChoiceSet, PreconditionError
from .topology import Topology, from_edges


# payloads

class WakeRecords(NamedTuple):
    records: tuple[tuple[int, tuple[int, ...]], ...]


class DrawShare(NamedTuple):
    owner: int
    value: Any


class Publish(NamedTuple):
    owner: int
    value: int


class Forward(NamedTuple):
    owner: int
    value: int


class Prompt(NamedTuple):
    pass


class PromptReply(NamedTuple):
    owner: int
    value: int


class Relay(NamedTuple):
    owner: int
    value: int
    dest: int


class NameRecord(NamedTuple):
    owner: int
    name: int
    announcer: int


class Contribution(NamedTuple):
    owner: int
    value: Any


# helpers

def expect_only(ctx: AgentContext, inbox: Iterable, *types: type) -> None:
    for m in inbox:
        if not isinstance(m.payload, types):
            ctx.abort(f"unexpected {type(m.payload).__name__} from {m.src} in round {ctx.round}")


def witness_of(g: Topology, v: int) -> int:
    return min(g.neighbors(v))


def select_from(choices: Iterable[int], q: int) -> int:
    """The ``(q mod |X|)+1``-th largest element of ``X``."""
    ordered = sorted(choices, reverse=True)
    if not ordered:
        raise EmptyChoiceSet("no value left to choose from")
    return ordered[q % len(ordered)]


def joint_draw_value(choices: Iterable[int], r_own: int, r_witness: int) -> int:
    """Pure arithmetic of the witnessed draw, for contributions in ``[0, |X|)`` or ``[1, |X|]``."""
    ordered = sorted(choices, reverse=True)
    if not ordered:
        raise EmptyChoiceSet("no value left to choose from")
    return select_from(ordered, (r_own + r_witness) % len(ordered))


def bfs_path(g: Topology, src: int, dst: int, avoid: int | None = None) -> list[int]:
    """Shortest path with smallest-id tie breaking, optionally avoiding a node."""
    if src == dst:
        return [src]
    prev = {src: None}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for u in g.neighbors(v):
            if u == avoid or u in prev:
                continue
            prev[u] = v
            if u == dst:
                path = [u]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1]
            queue.append(u)
    raise PreconditionError(f"no path {src}->{dst} avoiding {avoid}")


def canonical_ring(g: Topology) -> tuple[int, ...]:
    """Ring order starting at the minimum id, heading to its smaller neighbor."""
    if g.n < 3 or any(g.degree(v) != 2 for v in g.nodes):
        raise PreconditionError("not a ring")
    start = min(g.nodes)
    order = [start, min(g.neighbors(start))]
    while len(order) < g.n:
        a, b = g.neighbors(order[-1])
        nxt = a if a != order[-2] else b
        if nxt == start:
            break
        order.append(nxt)
    if len(order) != g.n:
        raise PreconditionError("not a single ring")
    return tuple(order)


def orient_from(layout: Sequence[int], anchor: int) -> tuple[int, ...]:
    """Rotate ``layout`` to start at ``anchor`` and run toward its smaller neighbor."""
    n = len(layout)
    i = layout.index(anchor)
    cw, ccw = layout[(i + 1) % n], layout[(i - 1) % n]
    rotated = [layout[(i + j) % n] for j in range(n)]
    if ccw < cw:
        rotated = [rotated[0]] + rotated[1:][::-1]
    return tuple(rotated)


# wake-up

@dataclass(frozen=True)
class WakeUpResult:
    learned_topology: Topology
    n_prime: int
    diameter: int
    end_round: int


def wake_up(ctx: AgentContext):
    """Flood neighborhood records.  Entered at round 0; returns at round diam+1."""
    me = ctx.node
    known: dict[int, tuple[int, ...]] = {me: tuple(sorted(ctx.neighbors))}
    fresh_by_nbr = {v: [(me, known[me])] for v in ctx.neighbors}
    end: int | None = None
    diam = 0
    g: Topology | None = None
    pending: dict[int, int] = {}
    r = ctx.round
    while True:
        if end is None or r < end:
            for v, recs in fresh_by_nbr.items():
                if recs:
                    ctx.send(v, WakeRecords(tuple(recs)))
        inbox = yield
        r = ctx.round
        fresh_by_nbr = {v: [] for v in ctx.neighbors}
        for m in inbox:
            if not isinstance(m.payload, WakeRecords):
                ctx.abort(f"unexpected {type(m.payload).__name__} during wake-up")
            for rid, nbrs in m.payload.records:
                nbrs = tuple(nbrs)
                if rid in known:
                    if known[rid] != nbrs:
                        ctx.abort(f"conflicting neighborhood reports for {rid}")
                    continue
                if end is not None:
                    ctx.abort(f"record for unknown agent {rid} after the graph closed")
                known[rid] = nbrs
                for v in ctx.neighbors:
                    if v != m.src:
                        fresh_by_nbr[v].append((rid, nbrs))
        if end is None and all(u in known for ns in known.values() for u in ns):
            for v, ns in known.items():
                for u in ns:
                    if v not in known[u]:
                        ctx.abort(f"asymmetric adjacency between {v} and {u}")
            g = from_edges(known, {(min(v, u), max(v, u)) for v, ns in known.items() for u in ns})
            if not _connected(g):
                ctx.abort("learned graph is disconnected")
            diam = g.diameter()
            end = diam
            if r > end:
                ctx.abort("graph closed later than its diameter allows")
        if end is None:
            # flooding is breadth-first, so a referenced agent's record is at most one round behind
            for u in {u for ns in known.values() for u in ns} - known.keys():
                if r - pending.setdefault(u, r) >= 2:
                    ctx.abort(f"agent {u} was referenced but never reported")
        if end is not None and r >= end:
            break
    inbox = yield
    assert g is not None
    return WakeUpResult(g, g.n, diam, ctx.round), inbox


def _connected(g: Topology) -> bool:
    seen = {min(g.nodes)}
    stack = [min(g.nodes)]
    while stack:
        v = stack.pop()
        for u in g.neighbors(v):
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == g.n


def wake_up_rounds(g: Topology) -> int:
    return g.diameter() + 1


# witnessed draws with prompt verification

def draw_phase(ctx: AgentContext, g: Topology, inbox: list, order: Sequence[int], universe: Sequence[int]):
    """Each agent in ``order`` draws a value not used by its neighbors.

    A slot is three rounds: owner and witness exchange contributions, both
    compute ``S`` and the owner publishes it to its neighbors, neighbors
    forward it one more hop so that every future witness knows the values
    around its owner.  Returns the map of values this agent knows.
    """
    me = ctx.node
    known: dict[int, int] = {}
    witness_view: dict[int, int] = {}
    slot_of = {a: j for j, a in enumerate(order)}
    start = ctx.round
    length = 3 * len(order)
    mine: dict[int, Any] = {}
    for r in range(start, start + length):
        j, phase = divmod(r - start, 3)
        for m in inbox:
            p = m.payload
            if isinstance(p, DrawShare):
                a = p.owner
                if slot_of.get(a) != j or phase != 1 or me not in (a, witness_of(g, a)):
                    ctx.abort(f"unexpected draw share for {a}")
                other = witness_of(g, a) if me == a else a
                if m.src != other or a not in mine:
                    ctx.abort(f"draw share for {a} from wrong party {m.src}")
                xs = _free_values(g, a, known, universe)
                s = select_from(xs, concrete(add(mine.pop(a), p.value, len(xs))))
                if me == a:
                    known[a] = s
                    ctx.broadcast(Publish(a, s))
                else:
                    witness_view[a] = s
            elif isinstance(p, Publish):
                a = p.owner
                if slot_of.get(a) != j or phase != 2 or m.src != a:
                    ctx.abort(f"publish for {a} at the wrong time")
                if a in witness_view and witness_view[a] != p.value:
                    ctx.abort(f"witness saw {a} publish a value it did not draw")
                _learn(ctx, known, a, p.value)
                if j + 1 < len(order):
                    for v in ctx.neighbors:
                        if v != a:
                            ctx.send(v, Forward(a, p.value))
            elif isinstance(p, Forward):
                a = p.owner
                if slot_of.get(a) != j - 1 or phase != 0 or a not in g.neighbors(m.src) or a == me:
                    ctx.abort(f"forward of {a} at the wrong time")
                _learn(ctx, known, a, p.value)
            else:
                ctx.abort(f"unexpected {type(p).__name__} during draws")
        if phase == 0:
            a = order[j]
            w = witness_of(g, a)
            if me in (a, w):
                xs = _free_values(g, a, known, universe)
                share = ctx.rng.pad(Group.mod(len(xs)), "draw")
                mine[a] = share
                ctx.send(w if me == a else a, DrawShare(a, share))
        elif phase == 2 and me == order[j] and me not in known:
            ctx.abort("own draw did not complete")
        inbox = yield
    ctx.memory["witness_view"] = dict(witness_view)
    return known, inbox


def _learn(ctx: AgentContext, known: dict, a: int, value: int) -> None:
    if a in known and known[a] != value:
        ctx.abort(f"two different values reported for {a}")
    known[a] = value


def _free_values(g: Topology, a: int, known: Mapping[int, int], universe: Sequence[int]) -> list[int]:
    taken = {known[v] for v in g.neighbors(a) if v in known}
    xs = [x for x in universe if x not in taken]
    if not xs:
        raise EmptyChoiceSet(f"no value left for {a}")
    return xs


def prompt_plan(g: Topology) -> dict[tuple[int, int], list[int]]:
    """Relay path for every (owner, asker) pair: owner, witness, ..., asker."""
    plan = {}
    for a in sorted(g.nodes):
        w = witness_of(g, a)
        for u in g.neighbors(a):
            if u == w:
                plan[(a, u)] = [a, w]
            else:
                plan[(a, u)] = [a] + bfs_path(g, w, u, avoid=a)
    return plan


def prompt_rounds(g: Topology) -> int:
    plan = prompt_plan(g)
    longest = max(len(p) - 1 for p in plan.values())
    return 2 + longest


def prompt_phase(ctx: AgentContext, g: Topology, inbox: list, values: Mapping[int, int]):
    """Every agent prompts every neighbor at once and checks both copies."""
    me = ctx.node
    plan = prompt_plan(g)
    witness_view = ctx.memory.get("witness_view", {})
    start = ctx.round
    length = prompt_rounds(g)
    direct: dict[int, int] = {}
    relayed: dict[int, int] = {}
    expect_relay = {(a, u): start + 1 + (len(path) - 1) for (a, u), path in plan.items()}
    for r in range(start, start + length):
        if r == start:
            expect_only(ctx, inbox)
            ctx.broadcast(Prompt())
        for m in inbox:
            p = m.payload
            if isinstance(p, Prompt):
                if r != start + 1:
                    ctx.abort("prompt at the wrong time")
                ctx.send(m.src, PromptReply(me, values[me]))
                path = plan[(me, m.src)]
                ctx.send(path[1], Relay(me, values[me], m.src))
            elif isinstance(p, PromptReply):
                if r != start + 2 or p.owner != m.src:
                    ctx.abort("prompt reply at the wrong time")
                direct[m.src] = p.value
            elif isinstance(p, Relay):
                a, u = p.owner, p.dest
                path = plan.get((a, u))
                if path is None or me not in path[1:]:
                    ctx.abort(f"asked to relay {a}'s value but not on its witness path")
                i = path.index(me)
                if path[i - 1] != m.src or r != start + 1 + i:
                    ctx.abort(f"relay of {a}'s value out of order")
                if i == 1:
                    if me != witness_of(g, a):
                        ctx.abort(f"asked to relay {a}'s value without being its witness")
                    if witness_view.get(a) != p.value:
                        ctx.abort(f"relay of {a}'s value disagrees with the witnessed draw")
                if me == u:
                    relayed[a] = p.value
                else:
                    ctx.send(path[i + 1], Relay(a, p.value, u))
            else:
                ctx.abort(f"unexpected {type(p).__name__} during prompt")
        if r == start + 2:
            for a in ctx.neighbors:
                if a not in direct or direct[a] != values.get(a):
                    ctx.abort(f"direct copy of {a}'s value missing or inconsistent")
        for a in ctx.neighbors:
            if expect_relay[(a, me)] == r and witness_of(g, a) != me:
                if a not in relayed or relayed[a] != direct.get(a):
                    ctx.abort(f"relayed copy of {a}'s value missing or inconsistent")
        inbox = yield
    return True, inbox


# renaming

def renaming(ctx: AgentContext, g: Topology, inbox: list, diameter: int):
    """Id-ordered witnessed draws of distinct names in ``1..n``, flooded to all."""
    me = ctx.node
    order = sorted(g.nodes)
    n = len(order)
    names: dict[int, int] = {}
    length = diameter + 2
    for a in order:
        w = witness_of(g, a)
        start = ctx.round
        remaining = [x for x in range(1, n + 1) if x not in names.values()]
        records: dict[tuple[int, int], int] = {}
        share = None
        for r in range(start, start + length):
            fresh = []
            for m in inbox:
                p = m.payload
                if isinstance(p, DrawShare):
                    if r != start + 1 or p.owner != a or me not in (a, w) or m.src != (w if me == a else a):
                        ctx.abort("unexpected renaming share")
                    name = select_from(remaining, concrete(add(share, p.value, len(remaining))))
                    records[(a, me)] = name
                    fresh.append((NameRecord(a, name, me), None))
                elif isinstance(p, NameRecord):
                    if p.owner != a or p.announcer not in (a, w) or r < start + 2:
                        ctx.abort("unexpected name record")
                    key = (p.owner, p.announcer)
                    if key in records:
                        if records[key] != p.name:
                            ctx.abort("conflicting name records")
                        continue
                    if p.name not in remaining:
                        ctx.abort("name already taken")
                    records[key] = p.name
                    fresh.append((p, m.src))
                else:
                    ctx.abort(f"unexpected {type(p).__name__} during renaming")
            if r == start and me in (a, w):
                share = ctx.rng.pad(Group.mod(len(remaining)), "rename")
                ctx.send(w if me == a else a, DrawShare(a, share))
            if fresh and r < start + 1 + diameter:
                for rec, src in fresh:
                    for v in ctx.neighbors:
                        if v != src:
                            ctx.send(v, rec)
            inbox = yield
        got = {records.get((a, a)), records.get((a, w))}
        if len(got) != 1 or None in got:
            ctx.abort(f"owner and witness disagree on {a}'s name")
        names[a] = got.pop()
    if sorted(names.values()) != list(range(1, n + 1)):
        ctx.abort("names are not a bijection")
    ctx.memory["names"] = dict(names)
    return names, inbox


def renaming_rounds(g: Topology, diameter: int) -> int:
    return g.n * (diameter + 2)


# orientation election

def elect_orientation(ctx: AgentContext, g: Topology, inbox: list, diameter: int):
    """Renaming, then a flooded global draw picks the leader by name.

    Returns ``(leader, oriented_layout)``; the ring runs from the leader
    toward its smaller-id neighbor.
    """
    names, inbox = yield from renaming(ctx, g, inbox, diameter)
    n = g.n
    me = ctx.node
    start = ctx.round
    contribs: dict[int, Any] = {}
    mine = ctx.rng.pad(Group.mod(n), "elect")
    contribs[me] = mine
    for r in range(start, start + diameter + 1):
        fresh = []
        for m in inbox:
            p = m.payload
            if not isinstance(p, Contribution) or r == start:
                ctx.abort("unexpected message during election")
            if p.owner in contribs:
                if not same(contribs[p.owner], p.value):
                    ctx.abort(f"conflicting contributions from {p.owner}")
                continue
            if p.owner not in g.nodes:
                ctx.abort("contribution from an unknown agent")
            contribs[p.owner] = p.value
            fresh.append((p, m.src))
        if r == start:
            ctx.broadcast(Contribution(me, mine))
        elif r < start + diameter:
            for p, src in fresh:
                for v in ctx.neighbors:
                    if v != src:
                        ctx.send(v, p)
        inbox = yield
    if set(contribs) != set(g.nodes):
        ctx.abort("missing election contributions")
    total = 0
    for v in sorted(contribs):
        total = add(total, contribs[v], n)
    chosen = concrete(total) + 1
    leader = next(v for v, x in names.items() if x == chosen)
    layout = orient_from(canonical_ring(g), leader)
    ctx.memory["leader"] = leader
    return (leader, layout), inbox


def election_rounds(g: Topology, diameter: int) -> int:
    return renaming_rounds(g, diameter) + diameter + 1


def direction_of(g: Topology, leader: int, layout: Sequence[int]) -> str:
    """``cw`` if ``layout`` follows the canonical ring order, else ``ccw``."""
    canon = canonical_ring(g)
    i = canon.index(leader)
    return "cw" if canon[(i + 1) % len(canon)] == layout[1] else "ccw"


# standalone protocols exercising each block through the engine

class _BlockProtocol(Protocol):
    input_size = None

    @property
    def problem(self) -> ProblemSpec:
        return ProblemSpec(ProblemKind.LEADER_ELECTION if self.name == "leader" else ProblemKind.COLORING)


class WakeUpProtocol(_BlockProtocol):
    """Outputs the learned node count."""

    name = "wake-up"

    @property
    def problem(self) -> ProblemSpec:
        return ProblemSpec(ProblemKind.KNOWLEDGE_SHARING)

    def agent(self, ctx):
        res, _ = yield from wake_up(ctx)
        ctx.memory["wake"] = res
        ctx.output(res.n_prime)

    def round_bound(self, g):
        return wake_up_rounds(g) + 2


class RenamingProtocol(_BlockProtocol):
    """Outputs the agent's own name; legal iff names are distinct."""

    name = "renaming"

    def agent(self, ctx):
        res, inbox = yield from wake_up(ctx)
        names, _ = yield from renaming(ctx, res.learned_topology, inbox, res.diameter)
        ctx.output(names[ctx.node])

    def round_bound(self, g):
        d = g.diameter()
        return wake_up_rounds(g) + renaming_rounds(g, d) + 2


class DrawPromptProtocol(_BlockProtocol):
    """Witnessed draws in id order plus prompt verification; outputs ``S``."""

    name = "draw-prompt"

    def agent(self, ctx):
        res, inbox = yield from wake_up(ctx)
        g = res.learned_topology
        values, inbox = yield from draw_phase(ctx, g, inbox, sorted(g.nodes), range(1, g.n + 1))
        _, _ = yield from prompt_phase(ctx, g, inbox, values)
        ctx.output(values[ctx.node])

    def round_bound(self, g):
        return wake_up_rounds(g) + 3 * g.n + prompt_rounds(g) + 3


class LeaderProtocol(_BlockProtocol):
    """Leader election: outputs 1 for the elected agent, 0 otherwise."""

    name = "leader"

    def check_topology(self, g):
        canonical_ring(g)

    def agent(self, ctx):
        res, inbox = yield from wake_up(ctx)
        (leader, layout), _ = yield from elect_orientation(ctx, res.learned_topology, inbox, res.diameter)
        ctx.memory["direction"] = direction_of(res.learned_topology, leader, layout)
        ctx.output(1 if leader == ctx.node else 0)

    def round_bound(self, g):
        d = g.diameter()
        return wake_up_rounds(g) + election_rounds(g, d) + 2

    def merge_outputs(self, outputs, scheme, contexts, preference):
        vals = [outputs.get(v, BOTTOM) for v in scheme.virtual_ids]
        if any(v is BOTTOM for v in vals):
            return BOTTOM
        return 1 if 1 in vals else 0
