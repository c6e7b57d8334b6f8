"""Zero-one utility: an agent is happy iff the outcome is legal and its entry is the one it prefers."""

from __future__ import annotations

from typing import Any, Mapping

from ..engine import BOTTOM, ExecutionTrace, ProblemSpec, Verdict, classify_output
from ..topology import Topology


def preference_met(output: Any, preference: Any) -> bool:
    """Whether one agent's output matches its preferred value.

    A mapping preference (used for edge orientation) only constrains the
    listed entries of a ``(neighbor, head)`` list.
    """
    if output is BOTTOM or preference is None:
        return False
    if isinstance(preference, Mapping):
        try:
            listed = dict(output)
        except (TypeError, ValueError):
            return False
        return all(listed.get(k) == v for k, v in preference.items())
    return output == preference


def utility(t: Topology, outputs: Mapping[int, Any], agent: int, preference: Any, problem: ProblemSpec) -> int:
    if classify_output(t, outputs, problem) is not Verdict.LEGAL:
        return 0
    return 1 if preference_met(outputs[agent], preference) else 0


def trace_utility(trace: ExecutionTrace, agent: int, preference: Any) -> int:
    if trace.verdict is not Verdict.LEGAL:
        return 0
    return 1 if preference_met(trace.outputs[agent], preference) else 0
