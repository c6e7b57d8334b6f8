"""Brute-force reference computations, written independently of the library."""

from __future__ import annotations

import itertools
from collections import defaultdict
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Sequence


def connected(nodes: set[int], edges: Iterable[tuple[int, int]]) -> bool:
    nodes = set(nodes)
    if not nodes:
        return True
    adj = defaultdict(set)
    for a, b in edges:
        if a in nodes and b in nodes:
            adj[a].add(b)
            adj[b].add(a)
    start = next(iter(nodes))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for u in adj[v] - seen:
            seen.add(u)
            stack.append(u)
    return seen == nodes


def two_vertex_connected(nodes: set[int], edges: Sequence[tuple[int, int]]) -> bool:
    if len(nodes) < 3 or not connected(nodes, edges):
        return False
    return all(connected(set(nodes) - {v}, edges) for v in nodes)


def knowledge_sharing_after(inputs: Sequence[int], k: int) -> int:
    return sum(inputs) % k


def full_knowledge(q: Callable[[Sequence[int]], int], domain: Sequence[int], m: int) -> bool:
    outputs = {q(v) for v in itertools.product(domain, repeat=m)}
    if len(outputs) < 2:
        return False
    for j in range(m):
        for rest in itertools.product(domain, repeat=m - 1):
            counts = defaultdict(int)
            for x in domain:
                counts[q(rest[:j] + (x,) + rest[j:])] += 1
            if len({counts[y] for y in outputs}) != 1:
                return False
    return True


def dup_utility_by_size(alpha: int, beta: int, d: int, k: int, payoff: Fraction) -> Fraction:
    """Average over every n in [alpha, beta] of what pretending to be d agents yields."""
    total = Fraction(0)
    for n in range(alpha, beta + 1):
        if n + d - 1 <= beta:
            total += payoff if d > n else Fraction(1, k)
    return total / (beta - alpha + 1)


def proper(edges: Iterable[tuple[int, int]], colors: Mapping[int, Any]) -> bool:
    return all(colors[a] != colors[b] for a, b in edges)


def input_posteriors(runs: Iterable[tuple[Fraction, Any]], key: Callable[[Any], Any], secret: Callable[[Any], Any]) -> dict[Any, dict[Any, Fraction]]:
    joint: dict[Any, dict[Any, Fraction]] = defaultdict(lambda: defaultdict(Fraction))
    for pr, tr in runs:
        joint[key(tr)][secret(tr)] += pr
    out = {}
    for view, dist in joint.items():
        mass = sum(dist.values())
        out[view] = {x: p / mass for x, p in dist.items()}
    return out


def uniform_everywhere(posteriors: Mapping[Any, Mapping[Any, Fraction]], domain: Sequence[Any]) -> bool:
    want = Fraction(1, len(domain))
    return all(set(d) == set(domain) and all(p == want for p in d.values()) for d in posteriors.values())
