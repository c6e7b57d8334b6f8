from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import assume, given, strategies as st

from oracles import dup_utility_by_size
from sybileq.bounds import (
    InfinityBound,
    KnowledgeBound,
    Unbounded,
    classify_bound,
    duplication_decision,
    grid_argmax,
    incentive_grid,
    ks_dup_expected_utility,
    ks_dup_expected_utility_sweep,
    ks_incentive,
    ks_incentive_threshold,
    ks_optimal_duplication,
    leader_dup_expected_utility,
    leader_incentive,
    max_useful_duplication,
    p_d,
    registry_rows,
    summary_rows,
)
from sybileq.engine import ProblemKind
from sybileq.errors import DomainError, UnknownProblem
from sybileq.protocols import REGISTRY

TABLE = [
    ("α+1", "Leader Election"),
    ("2α−2", "Knowledge Sharing"),
    ("∞", "Coloring, 2-Knowledge Sharing"),
    ("unbounded", "Partition, Orientation"),
]

bounds = st.integers(3, 12).flatmap(lambda a: st.tuples(st.just(a), st.integers(a, 24)))
ks = st.sampled_from([2, 3, 4, 10])
payoffs = st.sampled_from([Fraction(1, 2), Fraction(1)])


def test_closed_form_examples():
    b = KnowledgeBound(4, 8)
    assert ks_dup_expected_utility(b, 5, 4, 1) == Fraction(1, 5)
    assert ks_dup_expected_utility(b, 4, 4, 1) == Fraction(1, 20)
    assert ks_dup_expected_utility(KnowledgeBound(4, 6), 4, 4, 1) == 0


def test_optimum_examples():
    assert ks_optimal_duplication(KnowledgeBound(4, 8), 100, 1) == (5, Fraction(1, 5), True)
    opt = ks_optimal_duplication(KnowledgeBound(4, 4), 4, 1)
    assert opt.d_star == 3 and not opt.feasible


def test_incentive_examples():
    assert ks_incentive(KnowledgeBound(4, 8), 10**6, 1)
    assert not ks_incentive(KnowledgeBound(4, 6), 10**6, 1)


def test_domain_errors():
    with pytest.raises(DomainError):
        KnowledgeBound(2, 5)
    with pytest.raises(DomainError):
        KnowledgeBound(5, 4)
    with pytest.raises(DomainError):
        ks_dup_expected_utility(KnowledgeBound(4, 8), 6, 4, 1)
    with pytest.raises(DomainError):
        ks_dup_expected_utility(KnowledgeBound(4, 8), 5, 2, Fraction(1, 2))


@given(bounds, ks, payoffs)
def test_sweep_matches_oracle(ab, k, x):
    b = KnowledgeBound(*ab)
    for d in range(b.alpha, max_useful_duplication(b) + 1):
        assert ks_dup_expected_utility_sweep(b, d, k, x) == dup_utility_by_size(b.alpha, b.beta, d, k, x)


@given(bounds, ks, payoffs)
def test_closed_form_is_exact_at_the_optimum(ab, k, x):
    assume(Fraction(1, k) < x)
    b = KnowledgeBound(*ab)
    opt = ks_optimal_duplication(b, k, x)
    assume(opt.feasible)
    assert opt.payoff == dup_utility_by_size(b.alpha, b.beta, opt.d_star, k, x)


@given(bounds, payoffs)
def test_two_valued_sharing_never_pays(ab, x):
    assume(x > Fraction(1, 2))
    assert not ks_incentive(KnowledgeBound(*ab), 2, x)


@given(st.integers(3, 12), st.sampled_from([3, 4, 10]), payoffs)
def test_incentive_is_monotone_in_beta(alpha, k, x):
    assume(Fraction(1, k) < x)
    flags = [ks_incentive(KnowledgeBound(alpha, beta), k, x) for beta in range(alpha, 25)]
    assert flags == sorted(flags)


def test_threshold_example():
    assert ks_incentive_threshold(3, 3, 1) == 10
    assert ks_incentive_threshold(4, 2, 1) is None


def test_grid_argmax_returns_ties():
    assert grid_argmax({3: Fraction(1, 2), 4: Fraction(1, 2), 5: Fraction(1, 3)}) == [3, 4]
    assert grid_argmax({}) == []


def test_grid_skips_inadmissible_cells():
    rows = incentive_grid([4], [3, 4, 8], [2], [Fraction(1, 2), 1])
    assert [(r["beta"], r["X"]) for r in rows] == [(4, "1"), (8, "1")]
    assert not any(r["incentive"] for r in rows)


# leader election


def test_leader_examples():
    assert leader_dup_expected_utility(KnowledgeBound(4, 6), 4) == Fraction(4, 15)
    assert leader_incentive(KnowledgeBound(4, 6), 4)
    assert leader_dup_expected_utility(KnowledgeBound(3, 5), 3) == Fraction(1, 3)
    assert not leader_incentive(KnowledgeBound(3, 5), 3)


@given(st.integers(3, 40))
def test_leader_one_extra_size_never_pays(n):
    b = KnowledgeBound(n, n + 1)
    assert p_d(b, 2) == Fraction(1, 2)
    assert leader_dup_expected_utility(b, n) == Fraction(1, n + 1) < Fraction(1, n)


@given(st.integers(4, 40))
def test_leader_two_extra_sizes_pay(n):
    b = KnowledgeBound(n, n + 2)
    assert leader_dup_expected_utility(b, n) == Fraction(2, 3) * Fraction(2, n + 1) > Fraction(1, n)


def test_duplication_decision():
    assert duplication_decision(Fraction(1, 4), 1, Fraction(1, 2))
    assert not duplication_decision(Fraction(1, 2), 1, Fraction(1, 2))
    assert not duplication_decision(0, 1, 0)
    with pytest.raises(DomainError):
        duplication_decision(2, 1, 1)


# bound classes


def test_classification():
    assert classify_bound(ProblemKind.LEADER_ELECTION).label == "α+1"
    assert classify_bound("Knowledge Sharing")(5) == 8
    assert isinstance(classify_bound("partition"), Unbounded)
    assert isinstance(classify_bound("ks2"), InfinityBound)
    with pytest.raises(UnknownProblem):
        classify_bound("consensus")


def test_summary_table_golden():
    assert summary_rows() == TABLE


def test_registry_rows_cover_every_protocol():
    rows = registry_rows(REGISTRY)
    assert len(rows) == len(REGISTRY)
    assert ("leader", "Leader Election", "α+1") in rows
