"""Equilibrium check against a finite deviation catalog."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable, Sequence

from ..engine import HONEST, Strategy
from ..errors import PreconditionError
from .estimate import Setting, expected_utility_exact, utility_gain_mc, expected_utility_mc
from .strategies import Deviation

NO_PROFIT = "NoProfitableDeviation"
FOUND = "DeviationFound"


def _num(x: Any) -> Any:
    if isinstance(x, Fraction):
        return str(x)
    return x


@dataclass
class DeviationResult:
    agent: int
    label: str
    own_input: Any
    preference: Any
    honest: Fraction | float
    deviating: Fraction | float
    margin: Fraction | float
    ci: tuple[float, float] | None = None

    def to_json(self) -> dict[str, Any]:
        return {
            "agent": self.agent,
            "ci": list(self.ci) if self.ci else None,
            "deviating": _num(self.deviating),
            "honest": _num(self.honest),
            "label": self.label,
            "margin": _num(self.margin),
            "own_input": self.own_input,
            "preference": _num(self.preference),
        }


@dataclass
class EquilibriumReport:
    scenario: str
    mode: str
    honest: dict[int, Fraction | float]
    results: list[DeviationResult] = field(default_factory=list)
    witness: DeviationResult | None = None
    samples: int | None = None

    @property
    def verdict(self) -> str:
        return FOUND if self.witness is not None else NO_PROFIT

    def to_json(self) -> dict[str, Any]:
        return {
            "deviations": [r.to_json() for r in self.results],
            "honest": {str(a): _num(v) for a, v in sorted(self.honest.items())},
            "mode": self.mode,
            "samples": self.samples,
            "scenario": self.scenario,
            "verdict": self.verdict,
            "witness": self.witness.to_json() if self.witness else None,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def table(self) -> str:
        rows = [f"{'agent':>6}  {'deviation':<32} {'input':>5} {'pref':>5} {'honest':>9} {'deviating':>9} {'margin':>9}"]
        for r in self.results:
            rows.append(
                f"{r.agent:>6}  {r.label:<32} {str(r.own_input):>5} {str(r.preference):>5} "
                f"{_short(r.honest):>9} {_short(r.deviating):>9} {_short(r.margin):>9}"
            )
        rows.append(f"verdict: {self.verdict}")
        return "\n".join(rows)


def _short(x: Any) -> str:
    if isinstance(x, Fraction):
        return str(x)
    return f"{x:.4f}"


def check_equilibrium(
    setting: Setting,
    catalog: Sequence[Strategy],
    agents: Iterable[int] | None = None,
    *,
    scenario: str = "scenario",
    mode: str = "exact",
    own_inputs: Sequence[Any] | None = None,
    preference_values: Sequence[Any] | None = None,
    samples: int = 2000,
    seed: int = 0,
    jobs: int = 1,
    stop_at_first: bool = True,
) -> EquilibriumReport:
    """Compare every catalog strategy with honest play for every cheater position.

    The comparison is made for each value of the cheater's own input (a
    deviation may depend on it) and each preference value to try.  In exact
    mode a deviation is profitable iff its margin is positive; in Monte Carlo
    mode iff the 95% interval of the paired gain lies above zero.
    """
    if mode not in ("exact", "monte-carlo"):
        raise PreconditionError(f"unknown mode {mode!r}")
    t = setting.topology
    agents = sorted(agents) if agents is not None else sorted(t.nodes)
    p = setting.protocol
    if own_inputs is None:
        own_inputs = list(range(p.input_size)) if p.input_size else [None]
    report = EquilibriumReport(scenario, mode, {}, samples=samples if mode != "exact" else None)
    for a in agents:
        prefs = preference_values if preference_values is not None else [setting.preferences.get(a)]
        for pref in prefs:
            for x in own_inputs:
                s = setting.with_preference(a, pref)
                if x is not None:
                    s = s.with_input(a, x)
                if mode == "exact":
                    honest: Fraction | float = expected_utility_exact(s, a)
                else:
                    honest = expected_utility_mc(s, a, HONEST, samples, seed, jobs).estimate
                report.honest.setdefault(a, honest)
                for dev in catalog:
                    label = dev.label if isinstance(dev, Deviation) else type(dev).__name__
                    if mode == "exact":
                        value = expected_utility_exact(s, a, dev)
                        res = DeviationResult(a, label, x, pref, honest, value, value - honest)
                        profitable = res.margin > 0
                    else:
                        gain = utility_gain_mc(s, a, dev, samples, seed, jobs)
                        res = DeviationResult(a, label, x, pref, honest, honest + gain.estimate, gain.estimate, (gain.low, gain.high))
                        profitable = gain.low > 0
                    report.results.append(res)
                    if profitable and report.witness is None:
                        report.witness = res
                        if stop_at_first:
                            return report
    return report
