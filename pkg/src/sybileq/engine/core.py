"""Lock-step synchronous execution.

Agents are generator functions.  Each ``inbox = yield`` ends the current
round; the value received is the list of messages delivered at the start of
the next round.  A message sent in round ``r`` is readable in round ``r+1``.
Subroutines compose with ``yield from``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Generator, Iterable, Mapping, NamedTuple, Sequence

from ..errors import PreconditionError, RoundLimitExceeded
from ..topology import DuplicationScheme, Topology, apply_duplication, owners_map
from .problems import BOTTOM, ProblemSpec, Verdict, classify_output
from .randomness import AgentRandom, Session
from .symbolic import deep_concrete

AgentProgram = Generator[None, list, None]


class Message(NamedTuple):
    src: int
    dst: int
    round: int
    payload: Any


class Detected(Exception):
    """Raised by ``ctx.abort``: an honest agent noticed a deviation."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class AgentContext:
    """Everything an agent may read or do locally."""

    __slots__ = ("node", "neighbors", "input", "preference", "rng", "params", "memory", "outbox", "round", "out", "has_output")

    def __init__(self, node: int, neighbors: Sequence[int], input: Any, preference: Any, rng: AgentRandom, params: Mapping[str, Any]):
        self.node = node
        self.neighbors = tuple(neighbors)
        self.input = input
        self.preference = preference
        self.rng = rng
        self.params = params
        self.memory: dict[str, Any] = {}
        self.outbox: list[tuple[int, int, Any]] = []
        self.round = 0
        self.out: Any = None
        self.has_output = False

    def send(self, dst: int, payload: Any) -> None:
        self.outbox.append((self.node, dst, payload))

    def broadcast(self, payload: Any) -> None:
        for v in self.neighbors:
            self.outbox.append((self.node, v, payload))

    def output(self, value: Any) -> None:
        if self.has_output:
            raise PreconditionError(f"agent {self.node} produced two outputs")
        self.out = value
        self.has_output = True

    def abort(self, reason: str) -> None:
        raise Detected(reason)


class Protocol:
    """Interface every protocol implements (see :mod:`sybileq.protocols`)."""

    name: str = "protocol"
    input_size: int | None = None

    @property
    def problem(self) -> ProblemSpec:
        raise NotImplementedError

    @property
    def params(self) -> Mapping[str, Any]:
        return {}

    def agent(self, ctx: AgentContext) -> AgentProgram:
        raise NotImplementedError

    def round_bound(self, g: Topology) -> int:
        raise NotImplementedError

    def check_topology(self, g: Topology) -> None:
        """Raise PreconditionError if the protocol cannot run on ``g``."""

    def milestones(self, g: Topology) -> list[int]:
        """Rounds at which phases start; used to place timing deviations."""
        return [0]

    def translate_output(self, value: Any, owners: Mapping[int, int]) -> Any:
        return value

    def merge_outputs(self, outputs: Mapping[int, Any], scheme: DuplicationScheme, contexts: Mapping[int, AgentContext], preference: Any) -> Any:
        """The single output of a cheater that ran several virtual agents."""
        return outputs.get(scheme.head, BOTTOM)


class Controller:
    """Drives one original agent, which may occupy several executed nodes."""

    original: int
    nodes: tuple[int, ...]
    honest: bool = True
    done: bool = False
    output: Any = BOTTOM

    def step(self, rnd: int, inboxes: Mapping[int, list[Message]]) -> list[tuple[int, int, Any]]:
        raise NotImplementedError


class HonestController(Controller):
    __slots__ = ("ctx", "gen")

    def __init__(self, ctx: AgentContext, program: Callable[[AgentContext], AgentProgram]):
        self.original = ctx.node
        self.nodes = (ctx.node,)
        self.ctx = ctx
        self.gen = program(ctx)
        self.done = False
        self.output = BOTTOM

    def step(self, rnd: int, inboxes: Mapping[int, list[Message]]) -> list[tuple[int, int, Any]]:
        ctx = self.ctx
        ctx.round = rnd
        ctx.rng.round = rnd
        ctx.outbox = []
        try:
            if rnd == 0:
                next(self.gen)
            else:
                self.gen.send(inboxes.get(ctx.node, []))
        except StopIteration:
            self.done = True
            if not ctx.has_output:
                raise PreconditionError(f"agent {ctx.node} terminated without output")
            self.output = ctx.out
        return ctx.outbox


@dataclass
class BuildEnv:
    """Handed to strategies so they can assemble their controller."""

    agent: int
    protocol: Protocol
    original: Topology
    executed: Topology
    contexts: Mapping[int, AgentContext]
    scheme: DuplicationScheme | None
    preference: Any
    session: Session


class Strategy:
    """Honest behaviour; deviations subclass this."""

    honest = True

    def scheme(self, agent: int, g: Topology) -> DuplicationScheme | None:
        return None

    def virtual_inputs(self, scheme: DuplicationScheme, own_input: Any) -> dict[int, Any]:
        return {v: (own_input if i == 0 else 0) for i, v in enumerate(scheme.virtual_ids)}

    def build(self, env: BuildEnv) -> Controller:
        return HonestController(env.contexts[env.agent], env.protocol.agent)


HONEST = Strategy()


class Abort(NamedTuple):
    round: int
    detector: int | None
    reason: str


@dataclass
class ExecutionTrace:
    topology: Topology
    executed: Topology
    owners: dict[int, int]
    protocol: str
    inputs: dict[int, Any]
    preferences: dict[int, Any]
    rounds: list[list[Message]]
    outputs: dict[int, Any]
    output_rounds: dict[int, int]
    aborted: Abort | None
    verdict: Verdict
    draws: dict[int, list[tuple[str, int, Any, int]]] = field(default_factory=dict)
    memories: dict[int, dict[str, Any]] = field(default_factory=dict, repr=False)
    cheater: int | None = None
    strategy_log: dict[str, Any] = field(default_factory=dict)

    @property
    def message_count(self) -> int:
        return sum(len(r) for r in self.rounds)

    def received(self, nodes: Iterable[int], upto: int) -> list[Message]:
        """Messages delivered to ``nodes`` in rounds ``<= upto``."""
        group = set(nodes)
        out = []
        for msgs in self.rounds[1 : upto + 1]:
            out.extend(m for m in msgs if m.dst in group)
        return out


def _draw_inputs(protocol: Protocol, g: Topology, inputs: Mapping[int, Any] | None, streams: Mapping[int, AgentRandom]) -> dict[int, Any]:
    fixed = dict(inputs or {})
    out: dict[int, Any] = {}
    for v in sorted(g.nodes):
        if v in fixed:
            out[v] = fixed[v]
        elif protocol.input_size:
            out[v] = streams[v].randrange(protocol.input_size, "input")
        else:
            out[v] = None
    return out


def run_execution(
    t: Topology,
    p: Protocol,
    strategies: Mapping[int, Strategy] | None,
    session: Session,
    *,
    inputs: Mapping[int, Any] | None = None,
    preferences: Mapping[int, Any] | None = None,
    observed: Iterable[int] = (),
    keep_memory: bool = False,
) -> ExecutionTrace:
    """Run one execution of ``p`` on ``t`` under the given strategies."""
    if strategies is None:
        strategies = {v: HONEST for v in t.nodes}
    missing = t.nodes - set(strategies)
    if missing:
        raise PreconditionError(f"no strategy for agents {sorted(missing)}")
    preferences = dict(preferences or {})

    executed = t
    schemes: dict[int, DuplicationScheme] = {}
    for a in sorted(t.nodes):
        s = strategies[a].scheme(a, t)
        if s is not None:
            executed = apply_duplication(executed, s)
            schemes[a] = s
    p.check_topology(executed)
    owners = owners_map(t, None)
    for a, s in schemes.items():
        owners.pop(a, None)
        for v in s.virtual_ids:
            owners[v] = a

    orig_streams = {v: session.stream(v) for v in sorted(t.nodes)}
    agent_inputs = _draw_inputs(p, t, inputs, orig_streams)

    node_inputs: dict[int, Any] = {}
    node_prefs: dict[int, Any] = {}
    streams: dict[int, AgentRandom] = {}
    for v in sorted(executed.nodes):
        a = owners[v]
        node_prefs[v] = preferences.get(a)
        if a in schemes:
            streams[v] = session.stream(v)
        else:
            streams[v] = orig_streams[v]
            node_inputs[v] = agent_inputs[v]
    for a, s in schemes.items():
        node_inputs.update(strategies[a].virtual_inputs(s, agent_inputs[a]))

    params = p.params
    contexts = {
        v: AgentContext(v, executed.neighbors(v), node_inputs[v], node_prefs[v], streams[v], params)
        for v in sorted(executed.nodes)
    }
    controllers: list[Controller] = []
    for a in sorted(t.nodes):
        env = BuildEnv(a, p, t, executed, contexts, schemes.get(a), preferences.get(a), session)
        ctl = strategies[a].build(env)
        ctl.original = a
        controllers.append(ctl)

    obs = frozenset(observed)
    max_rounds = p.round_bound(executed)
    rounds: list[list[Message]] = []
    pending: list[Message] = []
    output_rounds: dict[int, int] = {}
    aborted: Abort | None = None
    honest_ctls = [c for c in controllers if c.honest]

    for rnd in range(max_rounds + 1):
        inboxes: dict[int, list[Message]] = defaultdict(list)
        if obs:
            pending = [m._replace(payload=deep_concrete(m.payload)) if m.dst in obs else m for m in pending]
        for m in pending:
            inboxes[m.dst].append(m)
        rounds.append(pending)
        sent: list[Message] = []
        for c in controllers:
            if c.done:
                continue
            try:
                out = c.step(rnd, inboxes)
            except Detected as e:
                detector = c.nodes[0] if len(c.nodes) == 1 else c.original
                aborted = Abort(rnd, detector, e.reason)
                c.done = True
                c.output = BOTTOM
                break
            for src, dst, payload in out:
                if src not in c.nodes or not executed.has_edge(src, dst):
                    if c.honest:
                        raise PreconditionError(f"honest agent {src} sent to non-neighbor {dst}")
                    aborted = Abort(rnd, None, f"send {src}->{dst} is not an edge; rejected")
                    break
                sent.append(Message(src, dst, rnd, payload))
            if aborted:
                break
            if c.done and c.original not in output_rounds:
                output_rounds[c.original] = rnd
        if aborted is not None:
            break
        pending = sent
        if all(c.done for c in honest_ctls):
            break
    else:
        raise RoundLimitExceeded(f"{p.name}: honest agents still running after {max_rounds} rounds")

    outputs: dict[int, Any] = {}
    for c in controllers:
        if aborted is not None and not c.done:
            value = BOTTOM
        else:
            value = c.output
        if value is not BOTTOM:
            value = p.translate_output(value, owners)
        outputs[c.original] = value
    if aborted is not None and all(v is not BOTTOM for v in outputs.values()):
        # the framework rejected a cheater's send: the cheater is the one left without output
        outputs[strategy_owner(controllers)] = BOTTOM
    verdict = classify_output(t, outputs, p.problem)
    cheaters = [a for a in sorted(t.nodes) if not strategies[a].honest]
    return ExecutionTrace(
        topology=t,
        executed=executed,
        owners=owners,
        protocol=p.name,
        inputs=node_inputs,
        preferences=node_prefs,
        rounds=rounds,
        outputs=outputs,
        output_rounds=output_rounds,
        aborted=aborted,
        verdict=verdict,
        draws={v: streams[v].draws for v in streams},
        memories={v: c.memory for v, c in contexts.items()} if keep_memory else {},
        cheater=cheaters[0] if cheaters else None,
        strategy_log=dict(getattr(next((c for c in controllers if not c.honest), None), "log", None) or {}),
    )


def strategy_owner(controllers: Sequence[Controller]) -> int:
    for c in controllers:
        if not c.honest:
            return c.original
    return controllers[0].original
