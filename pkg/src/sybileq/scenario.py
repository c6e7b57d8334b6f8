"""Scenario files: one reproducible experiment per TOML document.

Example::

    name = "ks-honest-ring5"
    problem = "ks"

    [params]
    k = 4
    field_size = 4

    [topology]
    ring = 5            # or: ids = [...], or: nodes = [...] with edges = [[a, b], ...]

    [preferences]
    default = 0         # per-agent entries use the agent id as key: "10" = 2

    [cheater]           # optional
    agent = 10          # or: position = 0 (index into the ids)
    strategy = "sybil"
    d = 5               # or: segment = [ids of the virtual agents]

    [randomness]
    seed = 7
    enumerate = false
    trials = 1
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .engine import HONEST, Enumerated, Protocol, Strategy
from .errors import ConfigError, SybilEqError
from .protocols import REGISTRY, make_protocol
from .rationality.estimate import Setting
from .rationality.strategies import FAMILIES, Deviation, deviation_catalog
from .topology import DuplicationScheme, Topology, build_ring, fresh_ids, from_edges

TOP_KEYS = {"name", "problem", "params", "topology", "preferences", "inputs", "cheater", "randomness", "equilibrium", "description"}


@dataclass(frozen=True)
class CheaterSpec:
    agent: int
    strategy: str = "duplicate"
    d: int = 1
    value: int | None = None
    milestone: int | None = None
    segment: tuple[int, ...] | None = None
    fallback: str = "honest"

    def strategy_object(self) -> Deviation:
        seg = DuplicationScheme(self.agent, self.segment) if self.segment else None
        return Deviation(self.strategy, self.d, self.value, self.milestone, seg, self.fallback)


@dataclass(frozen=True)
class EquilibriumSpec:
    families: tuple[str, ...] = FAMILIES
    max_d: int = 1
    agents: tuple[int, ...] | None = None
    mode: str = "exact"
    samples: int = 2000
    preference_values: tuple[Any, ...] | None = None
    own_inputs: tuple[Any, ...] | None = None
    draw_values: tuple[int, ...] = (0, 1)
    stop_at_first: bool = True


@dataclass(frozen=True)
class Scenario:
    name: str
    problem: str
    params: Mapping[str, Any]
    topology: Topology
    preferences: Mapping[int, Any]
    inputs: Mapping[int, Any]
    cheater: CheaterSpec | None
    seed: int = 0
    enumerate: bool = False
    trials: int = 1
    lazy: bool = True
    equilibrium: EquilibriumSpec = field(default_factory=EquilibriumSpec)
    path: str | None = None

    def protocol(self) -> Protocol:
        return make_protocol(self.problem, **self.params)

    def strategies(self) -> dict[int, Strategy]:
        out: dict[int, Strategy] = {v: HONEST for v in self.topology.nodes}
        if self.cheater is not None:
            out[self.cheater.agent] = self.cheater.strategy_object()
        return out

    def setting(self) -> Setting:
        return Setting(self.topology, self.protocol(), dict(self.preferences), dict(self.inputs), Enumerated(lazy_pads=self.lazy, seed=self.seed))

    def catalog(self) -> list[Deviation]:
        eq = self.equilibrium
        p = self.protocol()
        phases = len(p.milestones(self.topology))
        return deviation_catalog(p, eq.max_d, eq.families, milestone_count=phases, draw_values=eq.draw_values)


class _Reader:
    """Typed access to a parsed document that reports the line of the offending key."""

    def __init__(self, text: str, path: str | None):
        self.lines = text.splitlines()
        self.path = path

    def line_of(self, key: str, table: str | None = None) -> int | None:
        start = 0
        if table is not None:
            for i, line in enumerate(self.lines):
                if re.match(rf"\s*\[{re.escape(table)}\]\s*(#.*)?$", line):
                    start = i + 1
                    break
        pat = re.compile(rf'\s*"?{re.escape(key)}"?\s*=')
        for i in range(start, len(self.lines)):
            if table is not None and i > start and re.match(r"\s*\[", self.lines[i]):
                break
            if pat.match(self.lines[i]):
                return i + 1
        if table is not None:
            for i, line in enumerate(self.lines):
                if re.match(rf"\s*\[{re.escape(table)}\]", line):
                    return i + 1
        return None

    def fail(self, msg: str, key: str | None = None, table: str | None = None) -> ConfigError:
        line = self.line_of(key, table) if key else (self.line_of(table) if table else None)
        if line is None and table and not key:
            line = next((i + 1 for i, l in enumerate(self.lines) if l.strip() == f"[{table}]"), None)
        return ConfigError(msg, line, self.path)

    def get(self, tbl: Mapping[str, Any], key: str, kind: type | tuple, default: Any = None, table: str | None = None, required: bool = False) -> Any:
        if key not in tbl:
            if required:
                raise self.fail(f"missing required key {key!r}" + (f" in [{table}]" if table else ""), None, table)
            return default
        v = tbl[key]
        if isinstance(v, bool) and kind in (int, (int,)):
            raise self.fail(f"{key!r} must be an integer", key, table)
        if not isinstance(v, kind):
            names = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
            raise self.fail(f"{key!r} must be of type {names}, got {type(v).__name__}", key, table)
        return v


def _int_key(r: _Reader, k: str, table: str) -> int:
    try:
        return int(k)
    except ValueError:
        raise r.fail(f"agent keys must be integer ids, got {k!r}", k, table) from None


def _agent_map(r: _Reader, tbl: Any, table: str, nodes: frozenset[int]) -> dict[int, Any]:
    if tbl is None:
        return {}
    if not isinstance(tbl, dict):
        raise r.fail(f"[{table}] must be a table", None, table)
    default = tbl.get("default")
    out = {v: default for v in nodes} if default is not None else {}
    for k, v in tbl.items():
        if k == "default":
            continue
        a = _int_key(r, k, table)
        if a not in nodes:
            raise r.fail(f"agent {a} is not in the topology", k, table)
        if isinstance(v, dict):
            v = {_int_key(r, kk, table): vv for kk, vv in v.items()}
        out[a] = v
    return out


def _topology(r: _Reader, tbl: Any) -> Topology:
    if not isinstance(tbl, dict):
        raise r.fail("[topology] table is required", None, "topology")
    try:
        if "nodes" in tbl or "edges" in tbl:
            nodes = r.get(tbl, "nodes", list, table="topology", required=True)
            edges = r.get(tbl, "edges", list, table="topology", required=True)
            if not all(isinstance(e, list) and len(e) == 2 for e in edges):
                raise r.fail("edges must be [a, b] pairs", "edges", "topology")
            return from_edges(nodes, [tuple(e) for e in edges])
        ids = r.get(tbl, "ids", list, table="topology")
        n = r.get(tbl, "ring", int, table="topology")
        if ids is None:
            if n is None:
                raise r.fail("topology needs `ring`, `ids` or `nodes`/`edges`", None, "topology")
            ids = fresh_ids((), n, seed=r.get(tbl, "id_seed", int, 0, table="topology"))
        if n is not None and n != len(ids):
            raise r.fail(f"ring = {n} but {len(ids)} ids given", "ring", "topology")
        return build_ring(len(ids), list(ids))
    except ConfigError:
        raise
    except SybilEqError as e:
        raise r.fail(str(e), None, "topology") from None


def parse_scenario(text: str, path: str | None = None) -> Scenario:
    r = _Reader(text, path)
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        m = re.search(r"line (\d+)", str(e))
        raise ConfigError(f"TOML syntax error: {e}", int(m.group(1)) if m else None, path) from None
    for k in doc:
        if k not in TOP_KEYS:
            raise r.fail(f"unknown key {k!r}", k)
    name = r.get(doc, "name", str, "scenario")
    problem = r.get(doc, "problem", str, required=True)
    if problem not in REGISTRY:
        raise r.fail(f"unknown problem {problem!r}; known: {', '.join(REGISTRY)}", "problem")
    params = r.get(doc, "params", dict, {})
    if "q" in params:
        params = {("q_name" if k == "q" else k): v for k, v in params.items()}
    topo = _topology(r, doc.get("topology"))
    try:
        make_protocol(problem, **params)
    except TypeError as e:
        raise r.fail(f"bad parameters for {problem!r}: {e}", None, "params") from None
    prefs = _agent_map(r, doc.get("preferences"), "preferences", topo.nodes)
    inputs = _agent_map(r, doc.get("inputs"), "inputs", topo.nodes)

    cheater = None
    ch = doc.get("cheater")
    if ch is not None:
        if not isinstance(ch, dict):
            raise r.fail("[cheater] must be a table", None, "cheater")
        agent = r.get(ch, "agent", int, table="cheater")
        pos = r.get(ch, "position", int, table="cheater")
        if agent is None:
            if pos is None:
                raise r.fail("cheater needs `agent` or `position`", None, "cheater")
            if topo.layout is None or not (0 <= pos < topo.n):
                raise r.fail(f"position {pos} out of range", "position", "cheater")
            agent = topo.layout[pos]
        if agent not in topo.nodes:
            raise r.fail(f"cheater {agent} is not in the topology", "agent", "cheater")
        strategy = r.get(ch, "strategy", str, "duplicate", table="cheater")
        if strategy not in FAMILIES:
            raise r.fail(f"unknown strategy {strategy!r}; known: {', '.join(FAMILIES)}", "strategy", "cheater")
        segment = r.get(ch, "segment", list, table="cheater")
        d = r.get(ch, "d", int, len(segment) if segment else 1, table="cheater")
        if d < 1:
            raise r.fail("d must be >= 1", "d", "cheater")
        if segment is not None and len(segment) != d:
            raise r.fail("segment length must equal d", "segment", "cheater")
        if segment is not None and set(segment) & (topo.nodes - {agent}):
            raise r.fail("segment ids collide with existing agents", "segment", "cheater")
        cheater = CheaterSpec(
            agent,
            strategy,
            d,
            r.get(ch, "value", int, table="cheater"),
            r.get(ch, "phase", int, table="cheater"),
            tuple(segment) if segment else None,
            r.get(ch, "fallback", str, "honest", table="cheater"),
        )

    rnd = r.get(doc, "randomness", dict, {})
    seed = r.get(rnd, "seed", int, 0, table="randomness")
    enumerate_ = r.get(rnd, "enumerate", bool, False, table="randomness")
    trials = r.get(rnd, "trials", int, 1, table="randomness")
    if trials < 1:
        raise r.fail("trials must be >= 1", "trials", "randomness")
    lazy = r.get(rnd, "lazy", bool, True, table="randomness")

    eq_tbl = r.get(doc, "equilibrium", dict, {})
    fams = r.get(eq_tbl, "families", list, list(FAMILIES), table="equilibrium")
    for f in fams:
        if f not in FAMILIES:
            raise r.fail(f"unknown deviation family {f!r}", "families", "equilibrium")
    mode = r.get(eq_tbl, "mode", str, "exact", table="equilibrium")
    if mode not in ("exact", "monte-carlo"):
        raise r.fail("mode must be 'exact' or 'monte-carlo'", "mode", "equilibrium")
    agents = r.get(eq_tbl, "agents", list, table="equilibrium")
    pv = r.get(eq_tbl, "preference_values", list, table="equilibrium")
    oi = r.get(eq_tbl, "own_inputs", list, table="equilibrium")
    eq = EquilibriumSpec(
        tuple(fams),
        r.get(eq_tbl, "max_d", int, 1, table="equilibrium"),
        tuple(agents) if agents is not None else None,
        mode,
        r.get(eq_tbl, "samples", int, 2000, table="equilibrium"),
        tuple(pv) if pv is not None else None,
        tuple(oi) if oi is not None else None,
        tuple(r.get(eq_tbl, "draw_values", list, [0, 1], table="equilibrium")),
        r.get(eq_tbl, "stop_at_first", bool, True, table="equilibrium"),
    )
    return Scenario(name, problem, params, topo, prefs, inputs, cheater, seed, enumerate_, trials, lazy, eq, path)


def load_scenario(path: str) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read scenario: {e.strerror}", None, path) from None
    return parse_scenario(text, path)
