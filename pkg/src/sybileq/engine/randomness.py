"""Randomness sources: seeded streams and exhaustive replay enumeration."""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterator

from ..errors import ExplosionCap, PreconditionError
from .symbolic import Group, PadPool

DEFAULT_CAP = 10**7


def derive_seed(*parts: Any) -> int:
    """Stable 64-bit seed from arbitrary printable parts."""
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


class AgentRandom:
    """Per-agent random stream handed to protocol code as ``ctx.rng``."""

    __slots__ = ("node", "_choose", "_pool", "lazy", "draws", "round")

    def __init__(self, node: int, choose: Callable[[int], int], pool: PadPool | None, lazy: bool):
        self.node = node
        self._choose = choose
        self._pool = pool
        self.lazy = lazy
        self.draws: list[tuple[str, int, Any, int]] = []
        self.round = 0

    def randrange(self, size: int, label: str = "draw") -> int:
        if size < 1:
            raise PreconditionError("randrange needs a positive domain size")
        v = self._choose(size) if size > 1 else 0
        self.draws.append((label, size, v, self.round))
        return v

    def pad(self, group: Group, label: str = "pad") -> Any:
        """A uniform group element; symbolic when lazy enumeration is active."""
        if self.lazy and self._pool is not None and group.size > 1:
            v = self._pool.new_pad(group)
        else:
            v = self._choose(group.size) if group.size > 1 else 0
        self.draws.append((label, group.size, v, self.round))
        return v


class FixedRandom(AgentRandom):
    """A biased stream that always returns the same value (mod the domain)."""

    __slots__ = ("value",)

    def __init__(self, node: int, value: int):
        super().__init__(node, lambda size: value % size, None, False)
        self.value = value

    def randrange(self, size: int, label: str = "draw") -> int:
        v = self.value % size
        self.draws.append((label, size, v, self.round))
        return v

    def pad(self, group: Group, label: str = "pad") -> Any:
        v = self.value % group.size
        self.draws.append((label, group.size, v, self.round))
        return v


class Session:
    """Randomness for one execution."""

    def stream(self, node: int) -> AgentRandom:
        raise NotImplementedError

    @property
    def pool(self) -> PadPool | None:
        return None


@dataclass(frozen=True)
class Seeded:
    """Independent ``random.Random`` stream per agent, derived from one seed."""

    seed: int

    def session(self) -> "SeededSession":
        return SeededSession(self.seed)


class SeededSession(Session):
    def __init__(self, seed: int):
        self.seed = seed

    def stream(self, node: int) -> AgentRandom:
        rng = random.Random(derive_seed(self.seed, node))
        return AgentRandom(node, rng.randrange, None, False)


class ScriptedChoices:
    """Replays a prefix of choice indices, then defaults to 0 while recording sizes."""

    __slots__ = ("prefix", "pos", "sizes", "taken")

    def __init__(self, prefix: list[int]):
        self.prefix = prefix
        self.pos = 0
        self.sizes: list[int] = []
        self.taken: list[int] = []

    def choose(self, size: int) -> int:
        if size <= 1:
            return 0
        i = self.pos
        self.pos += 1
        v = self.prefix[i] if i < len(self.prefix) else 0
        if v >= size:
            raise PreconditionError("replay diverged: scripted choice out of range")
        self.sizes.append(size)
        self.taken.append(v)
        return v

    def probability(self) -> Fraction:
        p = Fraction(1)
        for s in self.sizes:
            p /= s
        return p


class EnumeratedSession(Session):
    def __init__(self, prefix: list[int], lazy: bool, observed: frozenset[int], focus: frozenset[int] | None, seed: int):
        self.script = ScriptedChoices(prefix)
        self._pool = PadPool(self.script.choose) if lazy else None
        self.lazy = lazy
        self.observed = observed
        self.focus = focus
        self.seed = seed

    @property
    def pool(self) -> PadPool | None:
        return self._pool

    def stream(self, node: int) -> AgentRandom:
        if self.focus is not None and node not in self.focus:
            rng = random.Random(derive_seed(self.seed, node))
            return AgentRandom(node, rng.randrange, None, False)
        lazy = self.lazy and node not in self.observed
        return AgentRandom(node, self.script.choose, self._pool, lazy)


@dataclass(frozen=True)
class Enumerated:
    """Exhaustive replay enumeration.

    ``lazy_pads`` keeps pads symbolic until observed.  Nodes in ``observed``
    draw concrete values and see concrete payloads, which makes their views
    exact random variables.  If ``focus`` is given, only those nodes'
    draws are enumerated; everyone else uses a seeded stream.
    """

    lazy_pads: bool = True
    observed: frozenset[int] = field(default_factory=frozenset)
    focus: frozenset[int] | None = None
    seed: int = 0
    cap: int = DEFAULT_CAP

    def session(self, prefix: list[int]) -> EnumeratedSession:
        return EnumeratedSession(prefix, self.lazy_pads, frozenset(self.observed), self.focus, self.seed)


def enumerate_runs(run: Callable[[EnumeratedSession], Any], source: Enumerated) -> Iterator[tuple[Fraction, Any]]:
    """Depth-first replay over every joint assignment of random choices.

    ``run`` must be deterministic given the session's choices.  Yields
    ``(probability, result)`` pairs whose probabilities sum to one.
    """
    stack: list[list[int]] = [[]]
    count = 0
    while stack:
        prefix = stack.pop()
        session = source.session(prefix)
        result = run(session)
        script = session.script
        if script.pos < len(prefix):
            raise PreconditionError("replay diverged: run consumed fewer choices than scripted")
        sizes = script.sizes
        base = len(prefix)
        for i in range(len(sizes) - 1, base - 1, -1):
            pad = [0] * (i - base)
            for alt in range(sizes[i] - 1, 0, -1):
                stack.append(prefix + pad + [alt])
        count += 1
        if count > source.cap:
            raise ExplosionCap(f"more than {source.cap} branches; shrink the field size or the ring")
        yield script.probability(), result
