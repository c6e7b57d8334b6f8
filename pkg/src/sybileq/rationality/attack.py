"""The segment-emulation attack on knowledge sharing, measured end to end."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from ..engine import HONEST, Enumerated
from ..protocols import KnowledgeSharing
from ..topology import DuplicationScheme, Topology, h_construction
from .estimate import Setting, executions, first_computable_round, strategy_map
from .strategies import Deviation, sybil_emulation_strategy
from .utility import trace_utility


@dataclass
class AttackReport:
    topology: Topology
    scheme: DuplicationScheme
    k: int
    field_size: int
    preference: int
    own_input: int
    honest_eu: Fraction
    attack_eu: Fraction
    branches: int
    substituted: Fraction
    cheater_first: dict[int, Fraction] = field(default_factory=dict)
    honest_first: dict[int | None, Fraction] = field(default_factory=dict)
    strictly_earlier: Fraction = Fraction(0)

    @property
    def margin(self) -> Fraction:
        return self.attack_eu - self.honest_eu

    def to_json(self) -> dict[str, Any]:
        return {
            "attack_eu": str(self.attack_eu),
            "branches": self.branches,
            "cheater": self.scheme.cheater,
            "cheater_first_round": {str(r): str(p) for r, p in sorted(self.cheater_first.items())},
            "executed_size": self.topology.n + self.scheme.d - 1,
            "field_size": self.field_size,
            "honest_eu": str(self.honest_eu),
            "honest_first_round": {str(r): str(p) for r, p in sorted(self.honest_first.items(), key=lambda kv: (kv[0] is None, kv[0] or 0))},
            "k": self.k,
            "margin": str(self.margin),
            "own_input": self.own_input,
            "preference": self.preference,
            "segment": list(self.scheme.virtual_ids),
            "strictly_earlier": str(self.strictly_earlier),
            "substituted": str(self.substituted),
        }


def default_h(size: int = 3) -> tuple[Topology, DuplicationScheme]:
    d_ids = [11 + i for i in range(size)]
    e_ids = [21 + i for i in range(size)]
    return h_construction(d_ids, 99, e_ids, (31, 32))


def run_attack(g: Topology, scheme: DuplicationScheme, k: int = 4, field_size: int | None = None, preference: int = 0, own_input: int = 0) -> AttackReport:
    """Exact comparison of honest play and the emulation attack for one cheater."""
    p = KnowledgeSharing(k=k, field_size=field_size or k)
    a = scheme.cheater
    setting = Setting(g, p, {a: preference}, {a: own_input}, Enumerated())
    honest = Fraction(0)
    for pr, tr in executions(setting, strategy_map(g)):
        honest += pr * trace_utility(tr, a, preference)
    attack = sybil_emulation_strategy(p, scheme)
    eu = Fraction(0)
    subst = Fraction(0)
    branches = 0
    for pr, tr in executions(setting, strategy_map(g, a, attack), keep_memory=True):
        branches += 1
        eu += pr * trace_utility(tr, a, preference)
        sent = {v: tr.memories[v].get("ks_input") for v in scheme.virtual_ids}
        if any(sent[v] != tr.inputs[v] for v in scheme.virtual_ids):
            subst += pr
    report = AttackReport(g, scheme, k, p.field_size, preference, own_input, honest, eu, branches, subst)
    # who could compute the shared result first, under honest emulation
    emulate = Deviation("duplicate", scheme.d, segment=scheme)
    honest_group = sorted(g.nodes - {a})
    for pr, tr in executions(setting, strategy_map(g, a, emulate)):
        tc = first_computable_round(tr, scheme.virtual_ids)
        th = first_computable_round(tr, honest_group)
        report.cheater_first[tc] = report.cheater_first.get(tc, Fraction(0)) + pr
        report.honest_first[th] = report.honest_first.get(th, Fraction(0)) + pr
        if tc is not None and (th is None or tc < th):
            report.strictly_earlier += pr
    return report
