"""Tiny protocols and strategies used to exercise the engine in isolation."""

from __future__ import annotations

from typing import NamedTuple

from sybileq.engine import BOTTOM, Controller, ProblemKind, ProblemSpec, Protocol, Strategy


class Bit(NamedTuple):
    value: int


class CoinProtocol(Protocol):
    """Every agent draws a bit, tells its neighbours, then outputs its own bit.

    The outputs are classified as knowledge sharing, so a run is legal iff all
    bits agree.
    """

    name = "coin"

    def __init__(self, drawers: frozenset[int] | None = None):
        self.drawers = drawers

    @property
    def problem(self) -> ProblemSpec:
        return ProblemSpec(ProblemKind.KNOWLEDGE_SHARING)

    def agent(self, ctx):
        bit = ctx.rng.randrange(2, "coin") if self.drawers is None or ctx.node in self.drawers else 0
        ctx.broadcast(Bit(bit))
        inbox = yield
        ctx.memory["heard"] = sorted((m.src, m.round, m.payload.value) for m in inbox)
        ctx.output(bit)

    def round_bound(self, g):
        return 3


class EndlessProtocol(CoinProtocol):
    name = "endless"

    def agent(self, ctx):
        while True:
            yield


class _Stray(Controller):
    honest = False

    def __init__(self, agent: int, target: int):
        self.original = agent
        self.nodes = (agent,)
        self.target = target
        self.done = False
        self.output = BOTTOM

    def step(self, rnd, inboxes):
        return [(self.original, self.target, Bit(1))]


class SendToStranger(Strategy):
    honest = False

    def __init__(self, target: int):
        self.target = target

    def build(self, env):
        return _Stray(env.agent, self.target)


class _Wrapped(Controller):
    honest = False

    def __init__(self, inner, edit):
        self.inner = inner
        self.original = inner.original
        self.nodes = inner.nodes
        self.edit = edit

    @property
    def done(self):
        return self.inner.done

    @done.setter
    def done(self, value):
        self.inner.done = value

    @property
    def output(self):
        return self.inner.output

    @output.setter
    def output(self, value):
        self.inner.output = value

    def step(self, rnd, inboxes):
        out = self.inner.step(rnd, inboxes)
        return [m for m in (self.edit(rnd, src, dst, payload) for src, dst, payload in out) if m is not None]


class Tamper(Strategy):
    """Honest play with every outgoing ``(round, src, dst, payload)`` passed through ``edit``."""

    honest = False

    def __init__(self, edit):
        self.edit = edit

    def build(self, env):
        return _Wrapped(HONEST.build(env), self.edit)


from sybileq.engine import HONEST  # noqa: E402
