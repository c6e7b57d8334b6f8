"""Synchronous round engine, randomness sources and output classification."""

from __future__ import annotations

from fractions import Fraction
from typing import Any, Iterable, Iterator, Mapping

from ..topology import Topology
from .core import (
    HONEST,
    Abort,
    AgentContext,
    BuildEnv,
    Controller,
    Detected,
    ExecutionTrace,
    HonestController,
    Message,
    Protocol,
    Strategy,
    run_execution,
)
from .problems import BOTTOM, ProblemKind, ProblemSpec, Verdict, classify_output
from .randomness import AgentRandom, Enumerated, FixedRandom, Seeded, derive_seed, enumerate_runs
from .symbolic import Group, add, concrete, deep_concrete, same, xor


def run_seeded(
    t: Topology,
    p: Protocol,
    strategies: Mapping[int, Strategy] | None,
    seed: int,
    **kw: Any,
) -> ExecutionTrace:
    return run_execution(t, p, strategies, Seeded(seed).session(), **kw)


def enumerate_executions(
    t: Topology,
    p: Protocol,
    strategies: Mapping[int, Strategy] | None,
    source: Enumerated | None = None,
    **kw: Any,
) -> Iterator[tuple[Fraction, ExecutionTrace]]:
    """Every joint randomness assignment once, with its exact probability."""
    source = source or Enumerated()
    kw.setdefault("observed", source.observed)
    return enumerate_runs(lambda session: run_execution(t, p, strategies, session, **kw), source)


__all__ = [
    "Abort", "AgentContext", "AgentRandom", "BOTTOM", "BuildEnv", "Controller", "Detected", "Enumerated",
    "ExecutionTrace", "FixedRandom", "Group", "HONEST", "HonestController", "Message", "ProblemKind",
    "ProblemSpec", "Protocol", "Seeded", "Strategy", "Verdict", "add", "classify_output", "concrete",
    "deep_concrete", "derive_seed", "enumerate_executions", "enumerate_runs", "run_execution", "run_seeded",
    "same", "xor",
]
