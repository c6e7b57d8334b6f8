"""Deviation strategies and the controller that runs a cheater's virtual agents.

A cheater drives one or more executed nodes with the honest program and
perturbs what goes in and out.  Its knowledge is the union of its nodes'
inboxes, nothing more.  Families:

* ``duplicate``: pretend to be ``d`` agents, otherwise honest;
* ``lie-input``: start from a different input;
* ``lie-late``: circulate a different input than the one shared secretly;
* ``delay``: send every message of one phase start one round late;
* ``withhold``: drop every message of one phase start;
* ``forge``: flip the value carried by messages sent at one phase start;
* ``output-override``: output the preferred value whatever happens;
* ``biased-draw``: replace every random draw by a constant;
* ``sybil``: emulate a segment, learn the shared result early and, if it is
  not the preferred one, re-bind a still uncommitted virtual input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from ..engine import BOTTOM, BuildEnv, Controller, FixedRandom, Message, Strategy, add, derive_seed, xor
from ..engine.symbolic import Sym, is_symbolic
from ..errors import NotApplicable, PreconditionError
from ..protocols.knowledge_sharing import Circ, KnowledgeSharing, Piece, collective_inputs, sharing_plan
from ..topology import DuplicationScheme, Topology, fresh_ids

FAMILIES = (
    "duplicate",
    "lie-input",
    "lie-late",
    "delay",
    "withhold",
    "forge",
    "output-override",
    "biased-draw",
    "sybil",
)


def perturb(value: Any) -> Any:
    """A different value of the same kind (flip the low bit, or add one)."""
    if isinstance(value, bool):
        return not value
    if isinstance(value, int):
        return value ^ 1
    if isinstance(value, Sym):
        g = value.group
        return xor(value, 1) if g.kind == "xor" else add(value, 1, g.size)
    return value


def forge_payload(payload: Any) -> Any:
    if hasattr(payload, "_replace") and "value" in getattr(payload, "_fields", ()):
        return payload._replace(value=perturb(payload.value))
    return payload


def default_scheme(agent: int, g: Topology, d: int) -> DuplicationScheme:
    ids = tuple(fresh_ids(g.nodes, d, seed=derive_seed("virtual", agent, d)))
    if g.layout is not None:
        return DuplicationScheme(agent, ids)
    nbrs = sorted(g.neighbors(agent))
    half = max(1, len(nbrs) // 2)
    wiring = {u: (ids[0] if i < half else ids[-1]) for i, u in enumerate(nbrs)}
    return DuplicationScheme(agent, ids, wiring)


@dataclass(frozen=True)
class Deviation(Strategy):
    """One member of the finite deviation catalog."""

    family: str = "duplicate"
    d: int = 1
    value: int | None = None
    milestone: int | None = None
    segment: DuplicationScheme | None = None
    fallback: str = "honest"

    honest = False

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise PreconditionError(f"unknown deviation family {self.family!r}")
        if self.d < 1:
            raise PreconditionError("pretending to be fewer than one agent is outside the model")

    @property
    def label(self) -> str:
        parts = [self.family, f"d={self.segment.d if self.segment else self.d}"]
        if self.value is not None:
            parts.append(f"value={self.value}")
        if self.milestone is not None:
            parts.append(f"phase={self.milestone}")
        return " ".join(parts)

    def scheme(self, agent: int, g: Topology) -> DuplicationScheme | None:
        if self.segment is not None:
            if self.segment.cheater != agent:
                raise PreconditionError("segment belongs to a different cheater")
            return self.segment
        if self.d <= 1:
            return None
        return default_scheme(agent, g, self.d)

    def build(self, env: BuildEnv) -> Controller:
        nodes = env.scheme.virtual_ids if env.scheme else (env.agent,)
        if self.family == "lie-input" and self.value is not None:
            env.contexts[nodes[0]].input = self.value
        if self.family == "biased-draw":
            for v in nodes:
                env.contexts[v].rng = FixedRandom(v, self.value or 0)
        hooks: Hooks
        if self.family == "sybil":
            hooks = LateBinding(env.protocol, self.fallback)
        else:
            hooks = MessageHooks(self)
        return CheaterController(env, hooks)


class Hooks:
    def on_inbox(self, ctl: "CheaterController", rnd: int, boxes: dict[int, list[Message]]) -> dict[int, list[Message]]:
        return boxes

    def on_outgoing(self, ctl: "CheaterController", rnd: int, out: list[tuple[int, int, Any]]) -> list[tuple[int, int, Any]]:
        return out

    def on_output(self, ctl: "CheaterController", value: Any) -> Any:
        return value


class CheaterController(Controller):
    """Runs the honest program on every virtual node, with deviation hooks."""

    honest = False

    def __init__(self, env: BuildEnv, hooks: Hooks):
        self.original = env.agent
        self.scheme = env.scheme
        self.nodes = env.scheme.virtual_ids if env.scheme else (env.agent,)
        self.contexts = {v: env.contexts[v] for v in self.nodes}
        self.protocol = env.protocol
        self.preference = env.preference
        self.executed = env.executed
        self.milestones = env.protocol.milestones(env.executed)
        self.hooks = hooks
        self.gens = {v: env.protocol.agent(ctx) for v, ctx in self.contexts.items()}
        self.finished: set[int] = set()
        self.seen: list[Any] = []
        self.done = False
        self.output = BOTTOM
        self.log: dict[str, Any] = {}

    def step(self, rnd: int, inboxes: Mapping[int, list[Message]]) -> list[tuple[int, int, Any]]:
        boxes = {v: list(inboxes.get(v, [])) for v in self.nodes}
        for v in self.nodes:
            self.seen.extend(m.payload for m in boxes[v])
        boxes = self.hooks.on_inbox(self, rnd, boxes)
        out: list[tuple[int, int, Any]] = []
        for v in self.nodes:
            if v in self.finished:
                continue
            ctx = self.contexts[v]
            ctx.round = rnd
            ctx.rng.round = rnd
            ctx.outbox = []
            try:
                if rnd == 0:
                    next(self.gens[v])
                else:
                    self.gens[v].send(boxes[v])
            except StopIteration:
                self.finished.add(v)
            out.extend(ctx.outbox)
        out = self.hooks.on_outgoing(self, rnd, out)
        if len(self.finished) == len(self.nodes):
            self.done = True
            outs = {v: (c.out if c.has_output else BOTTOM) for v, c in self.contexts.items()}
            if self.scheme is not None:
                merged = self.protocol.merge_outputs(outs, self.scheme, self.contexts, self.preference)
            else:
                merged = outs[self.original]
            self.output = self.hooks.on_output(self, merged)
        return out


class MessageHooks(Hooks):
    def __init__(self, dev: Deviation):
        self.dev = dev
        self.held: list[tuple[int, int, Any]] = []

    def _at(self, ctl: CheaterController, rnd: int) -> bool:
        m = self.dev.milestone
        return m is not None and m < len(ctl.milestones) and ctl.milestones[m] == rnd

    def on_outgoing(self, ctl, rnd, out):
        fam = self.dev.family
        if self.held:
            out = self.held + out
            self.held = []
        if fam == "delay" and self._at(ctl, rnd):
            self.held, out = out, []
        elif fam == "withhold" and self._at(ctl, rnd):
            out = []
        elif fam == "forge" and self._at(ctl, rnd):
            out = [(s, d, forge_payload(p)) for s, d, p in out]
        elif fam == "lie-late":
            out = [(s, d, p._replace(value=perturb(p.value)) if isinstance(p, Circ) and p.origin in ctl.nodes else p) for s, d, p in out]
        return out

    def on_output(self, ctl, value):
        if self.dev.family == "output-override" and ctl.preference is not None:
            if isinstance(ctl.preference, Mapping):
                # per-item preferences: claim every preferred item, keep the rest
                listed = dict(value) if isinstance(value, tuple) else {}
                return tuple(sorted({**listed, **ctl.preference}.items()))
            return ctl.preference
        return value


class LateBinding(Hooks):
    """Learn every input early, then re-bind one uncommitted virtual input.

    A virtual node ``v`` is still free at phase round ``t`` if its open
    circulation has not started and, for each of its two targets, either the
    target is virtual or one piece has so far travelled only through virtual
    nodes and has not been handed over yet.  Re-binding sets ``v``'s input to
    ``x`` and rewrites that piece to ``other_piece xor x``.
    """

    def __init__(self, protocol: Any, fallback: str = "honest"):
        if not isinstance(protocol, KnowledgeSharing):
            raise NotApplicable(f"{getattr(protocol, 'name', protocol)!r} has no late-binding structure")
        self.q = protocol.q
        self.domain = range(protocol.field_size)
        self.fallback = fallback
        self.rewrites: dict[tuple[int, int, str], Any] = {}
        self.decided = False
        self.naive: int | None = None

    def on_inbox(self, ctl, rnd, boxes):
        if not self.decided:
            self._maybe_bind(ctl, rnd)
        if self.rewrites:
            boxes = {v: [m._replace(payload=self._fix(m.payload)) for m in msgs] for v, msgs in boxes.items()}
        return boxes

    def on_outgoing(self, ctl, rnd, out):
        if self.rewrites:
            out = [(s, d, self._fix(p)) for s, d, p in out]
        if self.naive is not None:
            out = [(s, d, p._replace(value=self.naive_value) if isinstance(p, Circ) and p.origin == self.naive else p) for s, d, p in out]
        return out

    def _fix(self, p: Any) -> Any:
        if isinstance(p, Piece):
            new = self.rewrites.get((p.sender, p.target, p.kind))
            if new is not None:
                return p._replace(value=new)
        return p

    def _maybe_bind(self, ctl: CheaterController, rnd: int) -> None:
        mem = ctl.contexts[ctl.nodes[0]].memory
        if "ks_start" not in mem:
            return
        layout = mem["layout"]
        n = len(layout)
        t = rnd - mem["ks_start"] + 1
        if t > n + 1:
            self.decided = True
            ctl.log["outcome"] = "too-late"
            return
        if "sent_pieces" not in mem or not mem["sent_pieces"]:
            return
        own = {v: ctl.contexts[v].memory.get("ks_input", ctl.contexts[v].input) for v in ctl.nodes}
        known = collective_inputs(ctl.seen, own)
        if any(v not in known or is_symbolic(known[v]) for v in layout):
            return
        self.decided = True
        ctl.log["known_round"] = rnd
        ctl.log["known_phase_round"] = t
        inputs = [known[v] for v in layout]
        pref = ctl.preference
        if pref is None or self.q(inputs) == pref:
            ctl.log["outcome"] = "no-substitution"
            return
        plan = sharing_plan(tuple(layout))
        for v in ctl.nodes:
            choice = self._free_pieces(ctl, plan, v, t)
            if choice is None:
                continue
            i = layout.index(v)
            for x in self.domain:
                trial = list(inputs)
                trial[i] = x
                if self.q(trial) == pref:
                    self._bind(ctl, v, x, choice)
                    ctl.log.update(outcome="substituted", node=v, value=x, phase_round=t)
                    return
        if self.fallback == "naive":
            # nothing is free: lie in the open and get caught
            self.naive = ctl.nodes[0]
            self.naive_value = next(x for x in self.domain if x != own[ctl.nodes[0]])
            ctl.log["outcome"] = "naive"
        else:
            ctl.log["outcome"] = "no-free-node"

    def _free_pieces(self, ctl: CheaterController, plan, v: int, t: int) -> dict[int, str] | None:
        inside = set(ctl.nodes)
        n = plan.n
        choice: dict[int, str] = {}
        for b in plan.targets[v]:
            for kind in ("R", "X"):
                path = plan.paths[(v, b, kind)]
                if not set(path) <= inside:
                    continue
                if b not in inside and t > n - 1:
                    continue
                choice[b] = kind
                break
            else:
                return None
        return choice

    def _bind(self, ctl: CheaterController, v: int, x: int, choice: Mapping[int, str]) -> None:
        mem = ctl.contexts[v].memory
        mem["ks_input"] = x
        for b, kind in choice.items():
            r, masked = mem["sent_pieces"][b]
            other = masked if kind == "R" else r
            self.rewrites[(v, b, kind)] = xor(other, x)
            if b in ctl.contexts:
                committed = ctl.contexts[b].memory.get("committed", {})
                if v in committed:
                    committed[v] = x


def sybil_emulation_strategy(protocol: Any, emulated: DuplicationScheme, fallback: str = "honest") -> Deviation:
    """The segment-emulation attack; only protocols with a sharing phase qualify."""
    if not isinstance(protocol, KnowledgeSharing):
        raise NotApplicable(f"{getattr(protocol, 'name', protocol)!r} has no late-binding structure")
    if emulated.d < 2:
        raise PreconditionError("emulation needs at least two virtual agents")
    return Deviation(family="sybil", d=emulated.d, segment=emulated, fallback=fallback)


def deviation_catalog(
    protocol: Any,
    max_d: int,
    families: Sequence[str] = FAMILIES,
    milestone_count: int | None = None,
    draw_values: Sequence[int] = (0, 1),
) -> list[Deviation]:
    """Every family crossed with every duplication count ``1..max_d``."""
    phases = milestone_count if milestone_count is not None else 6
    domain = range(protocol.input_size) if protocol.input_size else ()
    out: list[Deviation] = []
    for d in range(1, max_d + 1):
        for fam in families:
            if fam == "duplicate":
                if d >= 2:
                    out.append(Deviation("duplicate", d))
            elif fam == "lie-input":
                out.extend(Deviation("lie-input", d, value=x) for x in domain)
            elif fam in ("delay", "withhold", "forge"):
                out.extend(Deviation(fam, d, milestone=m) for m in range(phases))
            elif fam == "biased-draw":
                out.extend(Deviation("biased-draw", d, value=x) for x in draw_values)
            elif fam == "sybil":
                if d >= 2 and isinstance(protocol, KnowledgeSharing):
                    out.append(Deviation("sybil", d))
            else:
                out.append(Deviation(fam, d))
    return out
