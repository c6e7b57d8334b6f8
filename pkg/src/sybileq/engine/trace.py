"""JSON-lines export of execution traces with a stable key order."""

from __future__ import annotations

import json
from enum import Enum
from typing import Any, TextIO

from .core import ExecutionTrace
from .problems import BOTTOM
from .symbolic import Sym, peek


def to_plain(obj: Any) -> Any:
    """Convert payloads and outputs into JSON-ready values."""
    obj = peek(obj)
    if obj is BOTTOM:
        return "⊥"
    if isinstance(obj, Sym):
        return repr(obj)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, tuple) and hasattr(obj, "_fields"):
        d = {"type": type(obj).__name__}
        d.update({f: to_plain(getattr(obj, f)) for f in obj._fields})
        return d
    if isinstance(obj, (list, tuple)):
        return [to_plain(x) for x in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(to_plain(x) for x in obj)
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    return obj


def trace_records(trace: ExecutionTrace) -> list[dict[str, Any]]:
    records: list[dict[str, Any]] = [
        {
            "kind": "header",
            "protocol": trace.protocol,
            "topology": trace.topology.to_text(),
            "executed": trace.executed.to_text(),
            "owners": to_plain(trace.owners),
            "inputs": to_plain(trace.inputs),
            "preferences": to_plain(trace.preferences),
        }
    ]
    for rnd, msgs in enumerate(trace.rounds):
        records.append(
            {
                "kind": "round",
                "round": rnd,
                "delivered": [
                    {"src": m.src, "dst": m.dst, "sent": m.round, "payload": to_plain(m.payload)} for m in msgs
                ],
            }
        )
    records.append(
        {
            "kind": "outputs",
            "outputs": to_plain(trace.outputs),
            "output_rounds": to_plain(trace.output_rounds),
            "verdict": trace.verdict.value,
            "aborted": None if trace.aborted is None else {
                "round": trace.aborted.round,
                "detector": trace.aborted.detector,
                "reason": trace.aborted.reason,
            },
            "messages": trace.message_count,
            "cheater": trace.cheater,
            "strategy_log": to_plain(trace.strategy_log),
        }
    )
    return records


def write_jsonl(trace: ExecutionTrace, fh: TextIO) -> None:
    for rec in trace_records(trace):
        fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
