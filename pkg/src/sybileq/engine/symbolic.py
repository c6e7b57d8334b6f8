"""Lazily resolved one-time pads.

Exhaustive enumeration of a protocol that masks values with uniform pads
branches once per pad value, which is hopeless even at desk scale.  Most pads
are only ever combined (XOR, modular addition) and then cancelled again, so we
keep them symbolic: a value is an affine form ``const + sum(coef * pad)`` over
an abelian group.  A form is resolved to a number only when protocol code has
to branch on it.  Resolution picks one pad with an invertible coefficient,
branches over the *form's* value uniformly, and binds that pad accordingly.
Because the pad is uniform and independent of everything else, the form's
value is uniform too, so branch probabilities stay exact.

Protocol code never touches :class:`Sym` directly; it uses :func:`xor`,
:func:`add`, :func:`concrete` and :func:`same`, which fall through to plain
integer arithmetic when no symbolic value is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Any, Callable


@dataclass(frozen=True)
class Group:
    """Either bitwise XOR on ``bits``-wide words or addition modulo ``size``."""

    kind: str
    size: int

    @staticmethod
    def xor_bits(bits: int) -> "Group":
        return Group("xor", 1 << bits)

    @staticmethod
    def mod(m: int) -> "Group":
        return Group("add", m)

    def invertible(self, coef: int) -> bool:
        return coef % 2 == 1 if self.kind == "xor" else gcd(coef, self.size) == 1


class PadPool:
    """Owns pad bindings for a single execution."""

    __slots__ = ("choose", "bindings", "groups", "_next")

    def __init__(self, choose: Callable[[int], int]):
        self.choose = choose
        self.bindings: dict[int, tuple[int, dict[int, int]]] = {}
        self.groups: dict[int, Group] = {}
        self._next = 0

    def new_pad(self, group: Group) -> "Sym":
        pid = self._next
        self._next += 1
        self.groups[pid] = group
        return Sym(group, 0, {pid: 1}, self)


class Sym:
    __slots__ = ("group", "const", "terms", "pool")

    def __init__(self, group: Group, const: int, terms: dict[int, int], pool: PadPool):
        self.group = group
        self.const = const
        self.terms = terms
        self.pool = pool

    def __repr__(self) -> str:
        r = reduce_form(self)
        if isinstance(r, int):
            return str(r)
        inner = " ".join(f"{c}*p{p}" for p, c in sorted(r.terms.items()))
        return f"<{r.const} + {inner} in {r.group.kind}{r.group.size}>"


def _combine(g: Group, c1: int, t1: dict[int, int], c2: int, t2: dict[int, int], scale: int = 1) -> tuple[int, dict[int, int]]:
    if g.kind == "xor":
        terms = dict(t1)
        for p in t2:
            if p in terms:
                del terms[p]
            else:
                terms[p] = 1
        return c1 ^ c2, terms
    m = g.size
    terms = dict(t1)
    for p, c in t2.items():
        v = (terms.get(p, 0) + scale * c) % m
        if v:
            terms[p] = v
        else:
            terms.pop(p, None)
    return (c1 + scale * c2) % m, terms


def reduce_form(v: Any) -> Any:
    """Substitute bound pads; returns an int when nothing free remains."""
    if not isinstance(v, Sym):
        return v
    bindings = v.pool.bindings
    const, terms = v.const, v.terms
    g = v.group
    while True:
        bound = [p for p in terms if p in bindings]
        if not bound:
            break
        for p in bound:
            if p not in terms:
                continue
            coef = terms[p]
            bconst, bterms = bindings[p]
            rest = dict(terms)
            del rest[p]
            if g.kind == "xor":
                const, terms = _combine(g, const, rest, bconst, bterms)
            else:
                const, terms = _combine(g, const, rest, bconst, bterms, coef)
    if not terms:
        return const
    return Sym(g, const, terms, v.pool)


def _pool_of(*vals: Any) -> PadPool | None:
    for v in vals:
        if isinstance(v, Sym):
            return v.pool
    return None


def _as_form(v: Any, g: Group) -> tuple[int, dict[int, int]]:
    if isinstance(v, Sym):
        return v.const, v.terms
    return (int(v) % g.size if g.kind == "add" else int(v)), {}


def xor(a: Any, b: Any) -> Any:
    if type(a) is int and type(b) is int:
        return a ^ b
    g = a.group if isinstance(a, Sym) else b.group
    ca, ta = _as_form(a, g)
    cb, tb = _as_form(b, g)
    c, t = _combine(g, ca, ta, cb, tb)
    return reduce_form(Sym(g, c, t, _pool_of(a, b))) if t else c


def add(a: Any, b: Any, m: int, scale: int = 1) -> Any:
    """``(a + scale*b) mod m``."""
    if type(a) is int and type(b) is int:
        return (a + scale * b) % m
    g = a.group if isinstance(a, Sym) else b.group
    ca, ta = _as_form(a, g)
    cb, tb = _as_form(b, g)
    c, t = _combine(g, ca, ta, cb, tb, scale)
    return reduce_form(Sym(g, c, t, _pool_of(a, b))) if t else c


def concrete(v: Any) -> Any:
    """Resolve a value to an int, branching exactly once if it is still free."""
    if not isinstance(v, Sym):
        return v
    f = reduce_form(v)
    while isinstance(f, Sym):
        g, pool = f.group, f.pool
        pick = None
        for p in sorted(f.terms, reverse=True):
            if g.invertible(f.terms[p]):
                pick = p
                break
        if pick is None:
            # no single pad controls the form; fix each free pad on its own
            p = max(f.terms)
            pool.bindings[p] = (pool.choose(pool.groups[p].size), {})
            f = reduce_form(f)
            continue
        value = pool.choose(g.size)
        coef = f.terms[pick]
        rest = {p: c for p, c in f.terms.items() if p != pick}
        if g.kind == "xor":
            # pick = value ^ const ^ rest
            pool.bindings[pick] = (value ^ f.const, rest)
        else:
            m = g.size
            inv = pow(coef, -1, m)
            # pick = inv * (value - const - rest)
            pool.bindings[pick] = ((inv * (value - f.const)) % m, {p: (-inv * c) % m for p, c in rest.items()})
        return value
    return f


def same(a: Any, b: Any) -> bool:
    if type(a) is int and type(b) is int:
        return a == b
    if not isinstance(a, Sym) and not isinstance(b, Sym):
        return a == b
    g = a.group if isinstance(a, Sym) else b.group
    diff = xor(a, b) if g.kind == "xor" else add(a, b, g.size, -1)
    return concrete(diff) == 0


def is_symbolic(v: Any) -> bool:
    return isinstance(v, Sym)


def deep_concrete(obj: Any) -> Any:
    """Resolve every symbolic leaf of a nested tuple/list/dict payload."""
    if isinstance(obj, Sym):
        return concrete(obj)
    if isinstance(obj, tuple):
        vals = [deep_concrete(x) for x in obj]
        if hasattr(obj, "_fields"):
            return type(obj)(*vals)
        return tuple(vals)
    if isinstance(obj, list):
        return [deep_concrete(x) for x in obj]
    if isinstance(obj, dict):
        return {k: deep_concrete(x) for k, x in obj.items()}
    return obj


def peek(obj: Any) -> Any:
    """Best-effort rendering without branching: reduced forms stay symbolic."""
    if isinstance(obj, Sym):
        return reduce_form(obj)
    if isinstance(obj, tuple):
        vals = [peek(x) for x in obj]
        return type(obj)(*vals) if hasattr(obj, "_fields") else tuple(vals)
    if isinstance(obj, list):
        return [peek(x) for x in obj]
    if isinstance(obj, dict):
        return {k: peek(x) for k, x in obj.items()}
    return obj
