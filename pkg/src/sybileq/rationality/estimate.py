"""Expected-utility estimators and information-set analysis on traces."""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Mapping, NamedTuple, Sequence

from ..engine import HONEST, Enumerated, ExecutionTrace, Protocol, Seeded, Strategy, derive_seed, enumerate_executions, run_execution
from ..engine.symbolic import Sym
from ..errors import PreconditionError
from ..protocols.knowledge_sharing import collective_inputs
from ..topology import Topology
from .utility import trace_utility


@dataclass(frozen=True)
class Setting:
    """One experiment: where, what, who prefers what, and how randomness is explored."""

    topology: Topology
    protocol: Protocol
    preferences: Mapping[int, Any] = field(default_factory=dict)
    inputs: Mapping[int, Any] = field(default_factory=dict)
    source: Enumerated = field(default_factory=Enumerated)

    def with_input(self, agent: int, value: Any) -> "Setting":
        return replace(self, inputs={**self.inputs, agent: value})

    def with_preference(self, agent: int, value: Any) -> "Setting":
        return replace(self, preferences={**self.preferences, agent: value})


def strategy_map(t: Topology, agent: int | None = None, strategy: Strategy = HONEST) -> dict[int, Strategy]:
    out = {v: HONEST for v in t.nodes}
    if agent is not None:
        out[agent] = strategy
    return out


def controlled_nodes(t: Topology, agent: int, strategy: Strategy) -> tuple[int, ...]:
    s = strategy.scheme(agent, t)
    return s.virtual_ids if s is not None else (agent,)


def executions(setting: Setting, strategies: Mapping[int, Strategy], observed: Iterable[int] = (), keep_memory: bool = False):
    source = setting.source
    obs = frozenset(observed) | source.observed
    if obs != source.observed:
        source = replace(source, observed=obs)
    return enumerate_executions(
        setting.topology,
        setting.protocol,
        strategies,
        source,
        inputs=setting.inputs,
        preferences=setting.preferences,
        keep_memory=keep_memory,
    )


# views


def _freeze(x: Any) -> Hashable:
    if isinstance(x, Sym):
        raise PreconditionError("view contains an unobserved symbolic value; add the group to `observed`")
    if isinstance(x, dict):
        return tuple(sorted((k, _freeze(v)) for k, v in x.items()))
    if isinstance(x, (list, tuple)):
        return (type(x).__name__, tuple(_freeze(v) for v in x))
    return x


def view_key(trace: ExecutionTrace, nodes: Iterable[int], upto: int, with_draws: bool = True) -> Hashable:
    """Everything a group has seen by the end of round ``upto``.

    Inputs, preferences, own draws made so far and every message delivered
    from outside the group.  Messages between members are functions of these.
    """
    group = sorted(set(nodes))
    members = set(group)
    parts: list[Any] = [tuple((v, _freeze(trace.inputs.get(v)), _freeze(trace.preferences.get(v))) for v in group)]
    if with_draws:
        parts.append(tuple((v, tuple(_freeze(d[2]) for d in trace.draws.get(v, []) if d[3] <= upto)) for v in group))
    msgs = [m for m in trace.received(members, upto) if m.src not in members]
    parts.append(tuple(sorted((m.round, m.src, m.dst, repr(_freeze(m.payload))) for m in msgs)))
    return tuple(parts)


def boundary_key(trace: ExecutionTrace, nodes: Iterable[int], upto: int) -> Hashable:
    """Messages on links into or out of the group, delivered by round ``upto``."""
    members = set(nodes)
    out = []
    for msgs in trace.rounds[1 : upto + 1]:
        for m in msgs:
            if (m.src in members) != (m.dst in members):
                out.append((m.round, m.src, m.dst, repr(_freeze(m.payload))))
    return tuple(sorted(out))


def group_key(trace: ExecutionTrace, nodes: Iterable[int], upto: int) -> Hashable:
    """The group's own inputs and draws together with its boundary traffic."""
    return view_key(trace, nodes, upto), boundary_key(trace, nodes, upto)


# exact


def expected_utility_exact(
    setting: Setting,
    agent: int,
    strategy: Strategy = HONEST,
    from_round: int = 0,
    reference: ExecutionTrace | None = None,
) -> Fraction:
    """Exact expected utility of ``agent``.

    With ``from_round > 0`` the expectation is conditioned on the agent's own
    view up to that round being the one in ``reference``.
    """
    strategies = strategy_map(setting.topology, agent, strategy)
    pref = setting.preferences.get(agent)
    if from_round <= 0:
        total = Fraction(0)
        for pr, tr in executions(setting, strategies):
            total += pr * trace_utility(tr, agent, pref)
        return total
    if reference is None:
        raise PreconditionError("conditioning on a later round needs a reference trace")
    nodes = controlled_nodes(setting.topology, agent, strategy)
    want = view_key(reference, nodes, from_round)
    mass = Fraction(0)
    good = Fraction(0)
    for pr, tr in executions(setting, strategies, observed=nodes):
        if view_key(tr, nodes, from_round) == want:
            mass += pr
            good += pr * trace_utility(tr, agent, pref)
    if mass == 0:
        raise PreconditionError("the reference view has probability zero")
    return good / mass


def conditional_utilities(setting: Setting, agent: int, strategy: Strategy, rnd: int) -> dict[Hashable, tuple[Fraction, Fraction]]:
    """For every view the agent can hold at round ``rnd``: (probability, expected utility)."""
    strategies = strategy_map(setting.topology, agent, strategy)
    nodes = controlled_nodes(setting.topology, agent, strategy)
    pref = setting.preferences.get(agent)
    acc: dict[Hashable, list[Fraction]] = defaultdict(lambda: [Fraction(0), Fraction(0)])
    for pr, tr in executions(setting, strategies, observed=nodes):
        slot = acc[view_key(tr, nodes, rnd)]
        slot[0] += pr
        slot[1] += pr * trace_utility(tr, agent, pref)
    return {k: (m, g / m) for k, (m, g) in acc.items()}


# Monte Carlo


class McEstimate(NamedTuple):
    estimate: float
    low: float
    high: float
    samples: int


def _ci(values_sum: float, squares_sum: float, n: int) -> McEstimate:
    mean = values_sum / n
    var = max(0.0, squares_sum / n - mean * mean)
    half = 1.96 * math.sqrt(var / n) if n > 1 else 0.0
    return McEstimate(mean, mean - half, mean + half, n)


def _mc_chunk(args: tuple) -> tuple[float, float]:
    setting, strategies, agent, seed, start, stop, baseline = args
    pref = setting.preferences.get(agent)
    s = s2 = 0.0
    for i in range(start, stop):
        sample_seed = derive_seed(seed, "sample", i)
        tr = run_execution(setting.topology, setting.protocol, strategies, Seeded(sample_seed).session(), inputs=setting.inputs, preferences=setting.preferences)
        u = trace_utility(tr, agent, pref)
        if baseline is not None:
            tb = run_execution(setting.topology, setting.protocol, baseline, Seeded(sample_seed).session(), inputs=setting.inputs, preferences=setting.preferences)
            u -= trace_utility(tb, agent, pref)
        s += u
        s2 += u * u
    return s, s2


def _fan_out(args: list[tuple], jobs: int) -> list[tuple[float, float]]:
    if jobs <= 1 or len(args) <= 1:
        return [_mc_chunk(a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_mc_chunk, args))


def _chunks(samples: int, jobs: int) -> list[tuple[int, int]]:
    parts = max(1, min(samples, jobs * 4 if jobs > 1 else 1))
    size = math.ceil(samples / parts)
    return [(i, min(samples, i + size)) for i in range(0, samples, size)]


def expected_utility_mc(setting: Setting, agent: int, strategy: Strategy = HONEST, samples: int = 1000, seed: int = 0, jobs: int = 1) -> McEstimate:
    """Sample mean of the utility over independently seeded runs with a 95% normal CI."""
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    strategies = strategy_map(setting.topology, agent, strategy)
    args = [(setting, strategies, agent, seed, a, b, None) for a, b in _chunks(samples, jobs)]
    parts = _fan_out(args, jobs)
    return _ci(sum(p[0] for p in parts), sum(p[1] for p in parts), samples)


def utility_gain_mc(setting: Setting, agent: int, strategy: Strategy, samples: int, seed: int = 0, jobs: int = 1) -> McEstimate:
    """Paired estimate of ``E[u | strategy] - E[u | honest]`` on common seeds."""
    if samples < 1:
        raise PreconditionError("samples must be >= 1")
    strategies = strategy_map(setting.topology, agent, strategy)
    baseline = strategy_map(setting.topology)
    args = [(setting, strategies, agent, seed, a, b, baseline) for a, b in _chunks(samples, jobs)]
    parts = _fan_out(args, jobs)
    return _ci(sum(p[0] for p in parts), sum(p[1] for p in parts), samples)


# groups


@dataclass
class GroupUtility:
    """Group expected utility of ``target`` for every boundary history of ``group``."""

    group: frozenset[int]
    target: int
    round: int
    table: dict[Hashable, tuple[Fraction, Fraction]]

    def of(self, trace: ExecutionTrace) -> Fraction:
        return self.table[group_key(trace, self.group, self.round)][1]

    def knows(self, trace: ExecutionTrace) -> bool:
        return self.of(trace) in (0, 1)


def group_expected_utility(
    setting: Setting,
    group: Iterable[int],
    target: int,
    rnd: int,
    strategies: Mapping[int, Strategy] | None = None,
) -> GroupUtility:
    """Average over executions in which the group saw the same thing up to ``rnd``."""
    members = frozenset(group)
    strategies = strategies or strategy_map(setting.topology)
    pref = setting.preferences.get(target)
    acc: dict[Hashable, list[Fraction]] = defaultdict(lambda: [Fraction(0), Fraction(0)])
    for pr, tr in executions(setting, strategies, observed=members):
        slot = acc[group_key(tr, members, rnd)]
        slot[0] += pr
        slot[1] += pr * trace_utility(tr, target, pref)
    return GroupUtility(members, target, rnd, {k: (m, g / m) for k, (m, g) in acc.items()})


def information_contained(
    traces: Sequence[ExecutionTrace],
    big: Iterable[int],
    big_round: int,
    small: Iterable[int],
    small_round: int,
) -> bool:
    """Whether the view of ``big`` at ``big_round`` determines the view of ``small`` at ``small_round``.

    Checked over the given traces: no two of them agree on the first view and
    differ on the second.
    """
    big, small = tuple(big), tuple(small)
    seen: dict[Hashable, Hashable] = {}
    for tr in traces:
        k = view_key(tr, big, big_round)
        v = view_key(tr, small, small_round)
        if seen.setdefault(k, v) != v:
            return False
    return True


def first_computable_round(trace: ExecutionTrace, group: Iterable[int]) -> int | None:
    """First round after which the group's messages pin down every sharing input.

    Structural: an input is known once both pieces of one secret transmission
    or its open circulation reached the group.
    """
    members = set(group)
    nodes = trace.executed.nodes
    own = {v: trace.inputs[v] for v in members if trace.inputs.get(v) is not None}
    payloads: list[Any] = []
    for r, msgs in enumerate(trace.rounds):
        payloads.extend(m.payload for m in msgs if m.dst in members)
        known = collective_inputs(payloads, own)
        if all(v in known and not isinstance(known[v], Sym) for v in nodes):
            return r
    return None


def determined_rounds(
    setting: Setting,
    group: Iterable[int],
    value: Callable[[ExecutionTrace], Hashable],
    horizon: int,
    strategies: Mapping[int, Strategy] | None = None,
) -> list[tuple[Fraction, int | None]]:
    """For every execution, the first round at which the group's view fixes ``value``.

    Generic counterpart of :func:`first_computable_round`: a view fixes the
    value when every execution sharing that view agrees on it.
    """
    members = tuple(group)
    strategies = strategies or strategy_map(setting.topology)
    runs = list(executions(setting, strategies, observed=members))
    values = [value(tr) for _, tr in runs]
    first: list[int | None] = [None] * len(runs)
    for r in range(horizon + 1):
        buckets: dict[Hashable, set] = defaultdict(set)
        keys = [view_key(tr, members, r) for _, tr in runs]
        for k, v in zip(keys, values):
            buckets[k].add(v)
        for i, k in enumerate(keys):
            if first[i] is None and len(buckets[k]) == 1:
                first[i] = r
    return [(pr, f) for (pr, _), f in zip(runs, first)]
