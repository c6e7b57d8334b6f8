"""Three coloring protocols sharing one greedy decision rule.

An agent takes its preferred color if no already-decided neighbor holds it,
else the smallest color no neighbor holds.  The protocols differ in how they
fix the decision order:

* ``ColoringViaRenaming``: by unique names from the renaming block;
* ``ColoringViaOrientation``: by witnessed ranks that only need to differ
  between neighbors, verified with prompts;
* ``ColoringRing``: a shared random bit picks alternating winners inside
  every run of equal preferences; winners decide first, then the others in
  ring order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple, Sequence

from ..building_blocks import (
    canonical_ring,
    draw_phase,
    elect_orientation,
    election_rounds,
    prompt_phase,
    prompt_rounds,
    renaming,
    renaming_rounds,
    wake_up,
    wake_up_rounds,
)
from ..engine import BOTTOM, AgentContext, Group, ProblemKind, ProblemSpec, Protocol
from ..errors import PreconditionError
from ..topology import DuplicationScheme, Topology
from .base import q_xor
from .knowledge_sharing import MIN_RING, knowledge_sharing_phase, sharing_rounds


class Color(NamedTuple):
    value: int


class PrefCirc(NamedTuple):
    origin: int
    value: int


def min_free(taken: set[int]) -> int:
    c = 0
    while c in taken:
        c += 1
    return c


def greedy_choice(preference: int, taken: set[int]) -> int:
    return preference if preference not in taken else min_free(taken)


def ordered_coloring_phase(ctx: AgentContext, inbox: list, turns: Mapping[int, int], last_turn: int):
    """Decide in increasing ``turns``; returns ``(color, inbox)`` after the last turn."""
    me = ctx.node
    mine = None
    seen: dict[int, int] = {}
    for t in range(1, last_turn + 2):
        for m in inbox:
            p = m.payload
            if not isinstance(p, Color) or m.src not in turns or turns[m.src] + 1 != t or m.src in seen:
                ctx.abort(f"color message from {m.src} out of turn")
            seen[m.src] = p.value
        if t == turns[me]:
            taken = set(seen.values())
            mine = greedy_choice(ctx.preference, taken)
            ctx.memory["taken_at_turn"] = taken
            ctx.broadcast(Color(mine))
        inbox = yield
    if set(seen) != set(ctx.neighbors):
        ctx.abort("a neighbor never announced its color")
    ctx.memory["decision_turn"] = turns[me]
    ctx.memory["neighbor_colors"] = seen
    return mine, inbox


class _Coloring(Protocol):
    input_size = None

    @property
    def problem(self) -> ProblemSpec:
        return ProblemSpec(ProblemKind.COLORING)

    def merge_outputs(self, outputs, scheme: DuplicationScheme, contexts, preference):
        # a cheater can see the colors its end nodes received from real neighbors
        vals = [outputs.get(v, BOTTOM) for v in scheme.virtual_ids]
        if any(v is BOTTOM for v in vals):
            return BOTTOM
        external = set()
        for v in scheme.virtual_ids:
            for u, c in contexts[v].memory.get("neighbor_colors", {}).items():
                if u not in scheme.virtual_ids:
                    external.add(c)
            for u, c in contexts[v].memory.get("assignment_view", {}).items():
                if u not in scheme.virtual_ids and u in contexts[v].neighbors:
                    external.add(c)
        if preference is not None and preference not in external:
            return preference
        return outputs[scheme.head] if outputs[scheme.head] not in external else min_free(external)


@dataclass(frozen=True)
class ColoringViaRenaming(_Coloring):
    name: str = field(default="color-renaming", init=False)

    def agent(self, ctx: AgentContext):
        res, inbox = yield from wake_up(ctx)
        g = res.learned_topology
        names, inbox = yield from renaming(ctx, g, inbox, res.diameter)
        turns = {v: names[v] for v in (ctx.node, *ctx.neighbors)}
        color, _ = yield from ordered_coloring_phase(ctx, inbox, turns, g.n)
        ctx.output(color)

    def round_bound(self, g: Topology) -> int:
        return wake_up_rounds(g) + renaming_rounds(g, g.diameter()) + g.n + 3

    def milestones(self, g: Topology) -> list[int]:
        w = wake_up_rounds(g)
        return [0, w, w + renaming_rounds(g, g.diameter())]


@dataclass(frozen=True)
class ColoringViaOrientation(_Coloring):
    name: str = field(default="color-orient", init=False)

    def agent(self, ctx: AgentContext):
        res, inbox = yield from wake_up(ctx)
        g = res.learned_topology
        order = sorted(g.nodes, reverse=True)
        values, inbox = yield from draw_phase(ctx, g, inbox, order, range(1, g.n + 1))
        _, inbox = yield from prompt_phase(ctx, g, inbox, values)
        turns = {v: values[v] for v in (ctx.node, *ctx.neighbors)}
        ctx.memory["ranks"] = turns
        color, _ = yield from ordered_coloring_phase(ctx, inbox, turns, g.n)
        ctx.output(color)

    def round_bound(self, g: Topology) -> int:
        return wake_up_rounds(g) + 3 * g.n + prompt_rounds(g) + g.n + 3

    def milestones(self, g: Topology) -> list[int]:
        w = wake_up_rounds(g)
        return [0, w, w + 3 * g.n, w + 3 * g.n + prompt_rounds(g)]


def ring_assignment(layout: Sequence[int], prefs: Mapping[int, int], bit: int) -> tuple[dict[int, int], dict[int, int]]:
    """Colors and decision turns for the run-based ring rule.

    Runs of equal preference are indexed from their counterclockwise end
    (their first node in ``layout`` order).  Winners at positions of parity
    ``bit`` take their preference; a run of length one always wins.  Losers
    then decide greedily in ``layout`` order.
    """
    n = len(layout)
    winners: set[int] = set()
    if len({prefs[v] for v in layout}) == 1:
        winners = {layout[j] for j in range(n) if j % 2 == bit}
        if n % 2 == 1 and bit == 0:
            winners.discard(layout[n - 1])
    else:
        start = next(j for j in range(n) if prefs[layout[j]] != prefs[layout[j - 1]])
        order = [layout[(start + j) % n] for j in range(n)]
        run: list[int] = []
        runs = []
        for v in order:
            if run and prefs[v] != prefs[run[-1]]:
                runs.append(run)
                run = []
            run.append(v)
        runs.append(run)
        for run in runs:
            if len(run) == 1:
                winners.add(run[0])
            else:
                winners.update(v for j, v in enumerate(run) if j % 2 == bit)
    colors = {v: prefs[v] for v in winners}
    turns = {v: 0 for v in winners}
    for j, v in enumerate(layout):
        if v in winners:
            continue
        taken = {colors[u] for u in (layout[j - 1], layout[(j + 1) % n]) if u in colors}
        colors[v] = greedy_choice(prefs[v], taken)
        turns[v] = 1 + j
    return colors, turns


@dataclass(frozen=True)
class ColoringRing(_Coloring):
    orientation: str = "canonical"
    name: str = field(default="color-ring", init=False)

    def check_topology(self, g: Topology) -> None:
        canonical_ring(g)
        if g.n < MIN_RING:
            raise PreconditionError(f"ring coloring needs n' >= {MIN_RING}")

    def agent(self, ctx: AgentContext):
        res, inbox = yield from wake_up(ctx)
        g = res.learned_topology
        try:
            layout = canonical_ring(g)
        except PreconditionError as e:
            ctx.abort(str(e))
        if self.orientation == "elected":
            (_, layout), inbox = yield from elect_orientation(ctx, g, inbox, res.diameter)
        ctx.memory.setdefault("ks_input", ctx.rng.pad(Group.xor_bits(1), "coin"))
        bit, inbox = yield from knowledge_sharing_phase(ctx, layout, inbox, q_xor(), 1, final=False)
        prefs = yield from publish_preferences(ctx, layout, inbox)
        colors, turns = ring_assignment(layout, prefs, bit)
        ctx.memory["assignment_view"] = colors
        ctx.memory["decision_turn"] = turns[ctx.node]
        ctx.memory["turns"] = turns
        ctx.output(colors[ctx.node])

    def round_bound(self, g: Topology) -> int:
        extra = election_rounds(g, g.diameter()) if self.orientation == "elected" else 0
        return wake_up_rounds(g) + extra + sharing_rounds(g.n) + g.n + 3

    def milestones(self, g: Topology) -> list[int]:
        w = wake_up_rounds(g)
        if self.orientation == "elected":
            w += election_rounds(g, g.diameter())
        return [0, w, w + g.n - 1, w + g.n + 1, w + 2 * g.n]


def publish_preferences(ctx: AgentContext, layout: Sequence[int], inbox: list):
    """Circulate every preference once around the ring; ends in its last round."""
    n = len(layout)
    me = ctx.node
    i = layout.index(me)
    cw, ccw = layout[(i + 1) % n], layout[(i - 1) % n]
    prefs = {me: ctx.preference}
    for t in range(1, n + 1):
        for m in inbox:
            p = m.payload
            d = t - 1
            if not isinstance(p, PrefCirc) or m.src != ccw or not (1 <= d <= n - 1) or p.origin != layout[(i - d) % n]:
                ctx.abort("preference circulated out of schedule")
            prefs[p.origin] = p.value
            if d < n - 1:
                ctx.send(cw, p)
        if t == 1:
            ctx.send(cw, PrefCirc(me, ctx.preference))
        if t == n:
            break
        inbox = yield
    if len(prefs) != n:
        ctx.abort("missing preferences")
    return prefs
