"""Knowledge-bound calculus: payoffs of oversized duplication and bound classes.

Agents share the knowledge that the network size ``n`` is uniform over
``[alpha, beta]``.  A cheater pretending to be ``d`` agents is caught when
``n + d - 1 > beta``; it profits when ``d > n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, NamedTuple, Union

from .engine import ProblemKind
from .errors import DomainError, UnknownProblem

Number = Union[int, Fraction]


def _ceil_half(x: int) -> int:
    return -(-x // 2)


@dataclass(frozen=True)
class KnowledgeBound:
    alpha: int
    beta: int

    def __post_init__(self) -> None:
        if self.alpha < 3:
            raise DomainError(f"alpha must be >= 3, got {self.alpha}")
        if self.beta < self.alpha:
            raise DomainError(f"beta must be >= alpha, got [{self.alpha}, {self.beta}]")

    @property
    def width(self) -> int:
        return self.beta - self.alpha + 1

    def sizes(self) -> range:
        return range(self.alpha, self.beta + 1)


def _check_payoff_args(b: KnowledgeBound, k: int, payoff: Fraction) -> None:
    if k < 2:
        raise DomainError(f"k must be >= 2, got {k}")
    if not (Fraction(1, k) < payoff <= 1):
        raise DomainError(f"success payoff must lie in (1/k, 1], got {payoff}")


def max_useful_duplication(b: KnowledgeBound) -> int:
    return _ceil_half(b.beta) + 1


def ks_dup_expected_utility(b: KnowledgeBound, d: int, k: int, payoff: Number = 1) -> Fraction:
    """Closed-form round-0 expected utility of pretending to be ``d`` agents."""
    payoff = Fraction(payoff)
    _check_payoff_args(b, k, payoff)
    if not (b.alpha <= d <= max_useful_duplication(b)):
        raise DomainError(f"d must lie in [{b.alpha}, {max_useful_duplication(b)}], got {d}")
    w = b.width
    return payoff * Fraction(d - b.alpha, w) + Fraction(1, k) * Fraction(_ceil_half(b.beta) - d + 1, w)


def ks_dup_expected_utility_sweep(b: KnowledgeBound, d: int, k: int, payoff: Number = 1) -> Fraction:
    """The same quantity by walking every possible ``n`` (no closed form)."""
    payoff = Fraction(payoff)
    total = Fraction(0)
    for n in b.sizes():
        if n + d - 1 > b.beta:
            continue
        total += payoff if d > n else Fraction(1, k)
    return total / b.width


class Optimum(NamedTuple):
    d_star: int
    payoff: Fraction
    feasible: bool


def ks_optimal_duplication(b: KnowledgeBound, k: int, payoff: Number = 1) -> Optimum:
    """``d* = floor(beta/2) + 1``; infeasible when it falls below ``alpha``."""
    d_star = b.beta // 2 + 1
    if d_star < b.alpha:
        return Optimum(d_star, Fraction(0), False)
    return Optimum(d_star, ks_dup_expected_utility(b, d_star, k, payoff), True)


def grid_argmax(values: dict[int, Fraction]) -> list[int]:
    """Every ``d`` attaining the maximum."""
    if not values:
        return []
    top = max(values.values())
    return sorted(d for d, v in values.items() if v == top)


def ks_incentive(b: KnowledgeBound, k: int, payoff: Number = 1) -> bool:
    opt = ks_optimal_duplication(b, k, payoff)
    return opt.feasible and opt.payoff > Fraction(1, k)


def ks_incentive_threshold(alpha: int, k: int, payoff: Number = 1, beta_max: int = 200) -> int | None:
    """Smallest ``beta`` at which duplication pays, or None up to ``beta_max``."""
    for beta in range(alpha, beta_max + 1):
        if ks_incentive(KnowledgeBound(alpha, beta), k, payoff):
            return beta
    return None


def p_d(b: KnowledgeBound, d: int) -> Fraction:
    """Probability, under the uniform prior, that ``d`` duplicates stay within ``beta``."""
    return min(Fraction(1), max(Fraction(0), Fraction(b.beta - d + 2 - b.alpha, b.width)))


def leader_dup_expected_utility(b: KnowledgeBound, n: int, d: int = 2) -> Fraction:
    """Undetected with probability ``p_d``, then one of ``n + 1`` candidates, two of them ours."""
    if d != 2:
        raise DomainError("only a single duplication (d = 2) is analysed")
    if not (b.alpha <= n <= b.beta):
        raise DomainError(f"n = {n} lies outside [{b.alpha}, {b.beta}]")
    return p_d(b, d) * Fraction(2, n + 1)


def leader_incentive(b: KnowledgeBound, n: int) -> bool:
    return leader_dup_expected_utility(b, n) > Fraction(1, n)


def duplication_decision(honest_eu: Number, dup_eu: Number, pd: Number) -> bool:
    for x in (honest_eu, dup_eu, pd):
        if not (0 <= Fraction(x) <= 1):
            raise DomainError("expected utilities and probabilities must lie in [0, 1]")
    return Fraction(dup_eu) * Fraction(pd) > Fraction(honest_eu)


# bound classes


@dataclass(frozen=True)
class ExactFunction:
    label: str
    f: Callable[[int], int]

    def __call__(self, alpha: int) -> int:
        return self.f(alpha)


@dataclass(frozen=True)
class InfinityBound:
    label: str = "∞"


@dataclass(frozen=True)
class Unbounded:
    label: str = "unbounded"


BoundClass = Union[ExactFunction, InfinityBound, Unbounded]

LEADER_BOUND = ExactFunction("α+1", lambda a: a + 1)
KS_BOUND = ExactFunction("2α−2", lambda a: 2 * a - 2)

_BY_KIND: dict[ProblemKind, BoundClass] = {
    ProblemKind.LEADER_ELECTION: LEADER_BOUND,
    ProblemKind.KNOWLEDGE_SHARING: KS_BOUND,
    ProblemKind.COLORING: InfinityBound(),
    ProblemKind.TWO_KNOWLEDGE_SHARING: InfinityBound(),
    ProblemKind.RING_PARTITION: Unbounded(),
    ProblemKind.ORIENTATION: Unbounded(),
}

DISPLAY_NAMES: dict[ProblemKind, str] = {
    ProblemKind.LEADER_ELECTION: "Leader Election",
    ProblemKind.KNOWLEDGE_SHARING: "Knowledge Sharing",
    ProblemKind.COLORING: "Coloring",
    ProblemKind.TWO_KNOWLEDGE_SHARING: "2-Knowledge Sharing",
    ProblemKind.RING_PARTITION: "Partition",
    ProblemKind.ORIENTATION: "Orientation",
}

REGISTRY_KINDS: dict[str, ProblemKind] = {
    "ks": ProblemKind.KNOWLEDGE_SHARING,
    "ks2": ProblemKind.TWO_KNOWLEDGE_SHARING,
    "color-renaming": ProblemKind.COLORING,
    "color-orient": ProblemKind.COLORING,
    "color-ring": ProblemKind.COLORING,
    "partition": ProblemKind.RING_PARTITION,
    "orientation": ProblemKind.ORIENTATION,
    "leader": ProblemKind.LEADER_ELECTION,
}


def problem_kind(problem: Any) -> ProblemKind:
    if isinstance(problem, ProblemKind):
        return problem
    if isinstance(problem, str):
        if problem in REGISTRY_KINDS:
            return REGISTRY_KINDS[problem]
        for kind, label in DISPLAY_NAMES.items():
            if problem in (label, kind.value):
                return kind
    raise UnknownProblem(f"unknown problem {problem!r}")


def classify_bound(problem: Any) -> BoundClass:
    return _BY_KIND[problem_kind(problem)]


def summary_rows() -> list[tuple[str, str]]:
    """``(bound, problems)`` rows, problems sharing a bound joined in table order."""
    order = [
        ProblemKind.LEADER_ELECTION,
        ProblemKind.KNOWLEDGE_SHARING,
        ProblemKind.COLORING,
        ProblemKind.TWO_KNOWLEDGE_SHARING,
        ProblemKind.RING_PARTITION,
        ProblemKind.ORIENTATION,
    ]
    rows: list[tuple[str, list[str]]] = []
    for kind in order:
        label = classify_bound(kind).label
        if rows and rows[-1][0] == label:
            rows[-1][1].append(DISPLAY_NAMES[kind])
        else:
            rows.append((label, [DISPLAY_NAMES[kind]]))
    return [(label, ", ".join(names)) for label, names in rows]


def registry_rows(names: Iterable[str]) -> list[tuple[str, str, str]]:
    """``(registry name, problem, bound)`` for every registered protocol."""
    return [(n, DISPLAY_NAMES[problem_kind(n)], classify_bound(n).label) for n in names]


def incentive_grid(alphas: Iterable[int], betas: Iterable[int], ks: Iterable[int], payoffs: Iterable[Number]) -> list[dict[str, Any]]:
    """One row per admissible ``(alpha, beta, k, X)`` with the optimum and incentive."""
    rows = []
    betas = list(betas)
    ks = list(ks)
    payoffs = [Fraction(x) for x in payoffs]
    for a in alphas:
        for beta in betas:
            if beta < a:
                continue
            b = KnowledgeBound(a, beta)
            for k in ks:
                for x in payoffs:
                    if not (Fraction(1, k) < x <= 1):
                        continue
                    opt = ks_optimal_duplication(b, k, x)
                    rows.append(
                        {
                            "alpha": a,
                            "beta": beta,
                            "k": k,
                            "X": str(x),
                            "d_star": opt.d_star,
                            "feasible": opt.feasible,
                            "payoff": str(opt.payoff),
                            "honest": str(Fraction(1, k)),
                            "incentive": opt.feasible and opt.payoff > Fraction(1, k),
                            "classified_bound": KS_BOUND(a),
                        }
                    )
    return rows
