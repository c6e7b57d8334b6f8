"""Exact secrecy of one agent's input against a group's view.

Before any value is resolved, everything a group sees in a masked protocol is
an affine XOR form ``const ^ pad_a ^ pad_b ^ ...`` over independent uniform
pads.  Given the sender's input ``i``, the view is therefore uniform on the
coset ``c(i) + Im(A)``, where ``A`` holds the pad coefficients.  The posterior
over ``i`` is uniform for every view iff all the cosets coincide, i.e. iff
``c(i) ^ c(i0)`` lies in the column space of ``A`` (bit plane by bit plane)
for every input ``i``.  One symbolic run per input value is enough.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from ..engine import Enumerated, Protocol, enumerate_executions
from ..engine.symbolic import Sym
from ..errors import PreconditionError
from ..topology import Topology

Form = tuple[int, frozenset[int]]


def _forms_of(value: Any, out: list[Form]) -> None:
    if isinstance(value, Sym):
        if value.pool.bindings:
            raise PreconditionError("a pad was resolved during the run; the view is no longer affine")
        if value.group.kind != "xor":
            raise PreconditionError("the coset test covers XOR masks only")
        out.append((value.const, frozenset(value.terms)))
    elif isinstance(value, bool) or value is None or isinstance(value, str):
        out.append((zlib.crc32(repr(value).encode()), frozenset()))
    elif isinstance(value, int):
        out.append((value, frozenset()))
    elif isinstance(value, tuple) and hasattr(value, "_fields"):
        out.append((zlib.crc32(type(value).__name__.encode()), frozenset()))
        for v in value:
            _forms_of(v, out)
    elif isinstance(value, (list, tuple)):
        for v in value:
            _forms_of(v, out)
    elif isinstance(value, dict):
        for k in sorted(value):
            _forms_of(k, out)
            _forms_of(value[k], out)
    else:
        raise PreconditionError(f"cannot read {type(value).__name__} as an affine form")


def view_forms(trace, group: Iterable[int], upto: int) -> list[Form]:
    """The group's view as a list of affine forms, in a run-independent order."""
    members = sorted(set(group))
    out: list[Form] = []
    for v in members:
        _forms_of(trace.inputs.get(v), out)
        for label, size, value, rnd in trace.draws.get(v, []):
            if rnd <= upto:
                _forms_of(value, out)
    inside = set(members)
    msgs = [m for m in trace.received(inside, upto) if m.src not in inside]
    for m in sorted(msgs, key=lambda m: (m.round, m.src, m.dst)):
        out.extend([(m.round, frozenset()), (m.src, frozenset()), (m.dst, frozenset())])
        _forms_of(m.payload, out)
    return out


def _in_column_space(columns: Sequence[int], target: int) -> bool:
    """Whether ``target`` (a bitmask over rows) is a GF(2) sum of ``columns``."""
    basis: dict[int, int] = {}
    for c in columns:
        while c:
            top = c.bit_length() - 1
            if top not in basis:
                basis[top] = c
                break
            c ^= basis[top]
    while target:
        top = target.bit_length() - 1
        if top not in basis:
            return False
        target ^= basis[top]
    return True


def same_coset(reference: Sequence[Form], other: Sequence[Form], bits: int) -> bool:
    if len(reference) != len(other):
        return False
    if any(a[1] != b[1] for a, b in zip(reference, other)):
        return False
    pads = sorted(set().union(*(f[1] for f in reference))) if reference else []
    columns = []
    for p in pads:
        columns.append(sum(1 << r for r, f in enumerate(reference) if p in f[1]))
    delta = [a[0] ^ b[0] for a, b in zip(reference, other)]
    width = max(bits, max((d.bit_length() for d in delta), default=0))
    for b in range(width):
        plane = sum(1 << r for r, d in enumerate(delta) if (d >> b) & 1)
        if plane and not _in_column_space(columns, plane):
            return False
    return True


@dataclass(frozen=True)
class SecrecyResult:
    sender: int
    group: tuple[int, ...]
    upto: int
    uniform: bool


def posterior_uniform(
    t: Topology,
    p: Protocol,
    sender: int,
    group: Iterable[int],
    upto: int,
    inputs: Mapping[int, Any],
    domain: Sequence[int],
    bits: int,
) -> SecrecyResult:
    """Exact test that ``group``'s view by ``upto`` leaves ``sender``'s input uniform.

    Other agents' inputs are fixed to ``inputs``; the sender's input ranges
    over ``domain``.  Each run must not branch on any pad before ``upto``.
    """
    members = tuple(sorted(set(group)))
    if sender in members:
        raise PreconditionError("the sender cannot be part of the observing group")
    reference = None
    uniform = True
    for x in domain:
        runs = list(enumerate_executions(t, p, None, Enumerated(lazy_pads=True), inputs={**inputs, sender: x}))
        for _, tr in runs:
            forms = view_forms(tr, members, upto)
            if reference is None:
                reference = forms
            elif not same_coset(reference, forms, bits):
                uniform = False
    return SecrecyResult(sender, members, upto, uniform)


def consecutive_segments(layout: Sequence[int], max_len: int, exclude: int | None = None) -> list[tuple[int, ...]]:
    """Every run of 1..max_len consecutive ring positions avoiding ``exclude``."""
    n = len(layout)
    out = []
    for length in range(1, min(max_len, n) + 1):
        for start in range(n):
            seg = tuple(layout[(start + j) % n] for j in range(length))
            if exclude is not None and exclude in seg:
                continue
            if length == n and start > 0:
                continue
            out.append(seg)
    return out
