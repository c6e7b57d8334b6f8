"""Shared protocol helpers: the ``q`` registry and field encodings."""

from __future__ import annotations

from itertools import product
from typing import Any, Callable, Iterable, Sequence

from ..engine import concrete, xor
from ..errors import PreconditionError


def q_sum_mod(k: int) -> Callable[[Sequence[Any]], int]:
    def q(values: Sequence[Any]) -> int:
        return sum(concrete(v) for v in values) % k

    q.__name__ = f"sum_mod_{k}"
    return q


def q_xor(k: int = 2) -> Callable[[Sequence[Any]], int]:
    def q(values: Sequence[Any]) -> int:
        acc: Any = 0
        for v in values:
            acc = xor(acc, v)
        return concrete(acc)

    return q


def q_max(k: int = 0) -> Callable[[Sequence[Any]], int]:
    def q(values: Sequence[Any]) -> int:
        return max(concrete(v) for v in values)

    return q


def q_const(k: int = 0) -> Callable[[Sequence[Any]], int]:
    def q(values: Sequence[Any]) -> int:
        return 0

    return q


Q_FUNCTIONS: dict[str, Callable[[int], Callable[[Sequence[Any]], int]]] = {
    "sum_mod": q_sum_mod,
    "xor": q_xor,
    "max": q_max,
    "const": q_const,
}


def make_q(name: str, k: int) -> Callable[[Sequence[Any]], int]:
    try:
        return Q_FUNCTIONS[name](k)
    except KeyError:
        raise PreconditionError(f"unknown q function {name!r}; known: {sorted(Q_FUNCTIONS)}") from None


def field_bits(field_size: int) -> int:
    """Width of the bit vectors used to XOR-mask values of a field."""
    return max(1, (field_size - 1).bit_length())


def verify_full_knowledge(q: Callable[[Sequence[int]], int], domain: Iterable[int], m: int) -> bool:
    """Every output in the range of ``q`` stays equally likely with any one input missing.

    A constant ``q`` (range of size one) is reported as ``False``: the property
    is vacuous there and such a ``q`` makes the problem trivial.
    """
    domain = list(domain)
    table = {xs: q(list(xs)) for xs in product(domain, repeat=m)}
    outputs = set(table.values())
    if len(outputs) < 2:
        return False
    for j in range(m):
        for rest in product(domain, repeat=m - 1):
            counts = dict.fromkeys(outputs, 0)
            for x in domain:
                counts[table[rest[:j] + (x,) + rest[j:]]] += 1
            if len(set(counts.values())) != 1:
                return False
    return True
