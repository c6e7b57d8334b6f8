from __future__ import annotations

from collections import Counter, defaultdict
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import full_knowledge, input_posteriors, knowledge_sharing_after, proper, uniform_everywhere
from sybileq.building_blocks import canonical_ring
from sybileq.engine import HONEST, Enumerated, Verdict, enumerate_executions, run_seeded
from sybileq.errors import UnknownProblem
from sybileq.protocols import (
    REGISTRY,
    ColoringRing,
    ColoringViaOrientation,
    ColoringViaRenaming,
    EdgeOrientation,
    KnowledgeSharing,
    RingPartition,
    TwoKnowledgeSharing,
    make_protocol,
)
from sybileq.protocols.base import make_q, verify_full_knowledge
from sybileq.protocols.coloring import ring_assignment
from sybileq.protocols.orientation import head_of
from sybileq.protocols.partition import partner_of
from sybileq.rationality import Deviation, consecutive_segments, posterior_uniform, view_key
from sybileq.topology import build_ring, from_edges

TRIANGLE = from_edges([1, 2, 3], [(1, 2), (2, 3), (1, 3)])
STAR = from_edges([1, 2, 3, 4], [(1, 2), (1, 3), (1, 4)])
KITE = from_edges([1, 2, 3, 4], [(1, 2), (1, 3), (1, 4), (2, 3), (3, 4)])


def _ring(n):
    return build_ring(n, [10 * (i + 1) for i in range(n)])


def _with(t, agent, strategy):
    s = {v: HONEST for v in t.nodes}
    s[agent] = strategy
    return s


# knowledge sharing


def test_ks_sum_mod_hand_value():
    g = _ring(4)
    t = run_seeded(g, KnowledgeSharing(k=4, field_size=4), None, 3, inputs={10: 1, 20: 2, 30: 3, 40: 0})
    assert t.verdict is Verdict.LEGAL
    assert set(t.outputs.values()) == {2}


def test_ks_every_branch_legal_on_one_bit_inputs():
    g = _ring(5)
    total = Fraction(0)
    for pr, t in enumerate_executions(g, TwoKnowledgeSharing(), None, Enumerated(lazy_pads=True)):
        assert t.verdict is Verdict.LEGAL
        want = knowledge_sharing_after([t.inputs[v] for v in sorted(g.nodes)], 2)
        assert set(t.outputs.values()) == {want}
        total += pr
    assert total == 1


@settings(max_examples=15)
@given(st.integers(4, 7), st.lists(st.integers(0, 7), min_size=7, max_size=7), st.integers(0, 2**31))
def test_ks_outputs_match_direct_computation(n, values, seed):
    g = _ring(n)
    inputs = {v: values[i] for i, v in enumerate(sorted(g.nodes))}
    t = run_seeded(g, KnowledgeSharing(k=8, field_size=8), None, seed, inputs=inputs)
    assert set(t.outputs.values()) == {sum(inputs.values()) % 8}


@pytest.mark.parametrize("seed", range(4))
def test_ks_late_lie_is_caught(seed):
    g = _ring(4)
    t = run_seeded(g, KnowledgeSharing(k=4, field_size=4), _with(g, 10, Deviation("lie-late", 1)), seed)
    assert t.aborted is not None and "differs from its secret copy" in t.aborted.reason
    assert t.verdict is Verdict.ERRONEOUS


def _brute_uniform(g, p, sender, seg, upto, others, domain):
    runs = enumerate_executions(g, p, None, Enumerated(observed=frozenset(seg)), inputs=others)
    post = input_posteriors(runs, lambda tr: view_key(tr, seg, upto), lambda tr: tr.inputs[sender])
    return uniform_everywhere(post, domain)


def test_secrecy_coset_test_agrees_with_brute_force():
    g = _ring(4)
    p = KnowledgeSharing(k=2, field_size=2)
    upto = p.milestones(g)[2]
    layout = canonical_ring(g)
    sender = layout[0]
    others = {v: (v // 10) % 2 for v in layout if v != sender}
    for seg in consecutive_segments(layout, 2, exclude=sender):
        fast = posterior_uniform(g, p, sender, seg, upto, others, range(2), 1).uniform
        assert fast == _brute_uniform(g, p, sender, seg, upto, others, range(2)), seg


@pytest.mark.parametrize("sender", [10, 30])
def test_single_observers_learn_nothing_before_delivery(sender):
    g = _ring(5)
    p = KnowledgeSharing(k=8, field_size=8)
    upto = p.milestones(g)[2]
    layout = canonical_ring(g)
    others = {v: 0 for v in layout if v != sender}
    for seg in consecutive_segments(layout, 1, exclude=sender):
        assert posterior_uniform(g, p, sender, seg, upto, others, range(8), 3).uniform, seg


def test_full_knowledge_registry():
    assert verify_full_knowledge(make_q("sum_mod", 4), range(4), 3)
    assert verify_full_knowledge(make_q("xor", 2), range(2), 4)
    assert not verify_full_knowledge(make_q("max", 4), range(4), 3)
    assert not verify_full_knowledge(make_q("const", 4), range(4), 3)


@given(st.sampled_from(["sum_mod", "xor", "max", "const"]), st.integers(2, 4), st.integers(1, 3))
def test_full_knowledge_matches_oracle(name, k, m):
    q = make_q(name, k)
    domain = range(k) if name != "xor" else range(2)
    assert verify_full_knowledge(q, domain, m) == full_knowledge(q, list(domain), m)


# coloring


def _greedy_ordered_ok(t, prefs):
    for v, out in t.outputs.items():
        taken = t.memories[v]["taken_at_turn"]
        if prefs[v] not in taken and out != prefs[v]:
            return False
    return True


def _sequential_greedy(g, prefs, turns):
    colors = {}
    for v in sorted(g.nodes, key=lambda v: turns[v]):
        taken = {colors[u] for u in g.neighbors(v) if u in colors}
        c = prefs[v]
        if c in taken:
            c = 0
            while c in taken:
                c += 1
        colors[v] = c
    return colors


def test_triangle_same_preference_follows_name_order():
    prefs = {1: 5, 2: 5, 3: 5}
    seen = set()
    for _, t in enumerate_executions(TRIANGLE, ColoringViaRenaming(), None, preferences=prefs, keep_memory=True):
        assert t.verdict is Verdict.LEGAL
        names = {v: t.memories[v]["decision_turn"] for v in TRIANGLE.nodes}
        order = sorted(TRIANGLE.nodes, key=names.get)
        assert [t.outputs[v] for v in order] == [5, 0, 1]
        seen.add(tuple(order))
    assert len(seen) == 6


def test_distinct_preferences_are_all_granted():
    prefs = {1: 7, 2: 3, 3: 9, 4: 1}
    for p in (ColoringViaRenaming(), ColoringViaOrientation()):
        t = run_seeded(KITE, p, None, 11, preferences=prefs)
        assert t.outputs == prefs


def test_star_all_same_preference_uses_two_colors():
    prefs = {v: 4 for v in STAR.nodes}
    for _, t in enumerate_executions(STAR, ColoringViaRenaming(), None, preferences=prefs):
        assert proper(STAR.edges, t.outputs)
        assert len(set(t.outputs.values())) == 2


@pytest.mark.parametrize("p", [ColoringViaRenaming(), ColoringViaOrientation()], ids=["renaming", "orient"])
def test_ordered_coloring_is_sequential_greedy(p):
    prefs = {1: 0, 2: 0, 3: 1, 4: 0}
    for seed in range(6):
        t = run_seeded(KITE, p, None, seed, preferences=prefs, keep_memory=True)
        turns = {v: t.memories[v]["decision_turn"] for v in KITE.nodes}
        assert t.outputs == _sequential_greedy(KITE, prefs, turns)
        assert _greedy_ordered_ok(t, prefs)


def test_ring_rule_hand_example():
    layout = (1, 2, 3, 4, 5, 6)
    r, b, gr = 5, 6, 7
    prefs = {1: r, 2: r, 3: r, 4: b, 5: b, 6: gr}
    colors, turns = ring_assignment(layout, prefs, 0)
    assert {v for v, t in turns.items() if t == 0} == {1, 3, 4, 6}
    assert colors == {1: r, 2: 0, 3: r, 4: b, 5: 0, 6: gr}
    ring_edges = [(layout[i], layout[(i + 1) % 6]) for i in range(6)]
    assert proper(ring_edges, colors)


@given(st.integers(4, 9), st.lists(st.integers(0, 2), min_size=9, max_size=9), st.integers(0, 1))
def test_ring_rule_proper_and_greedy(n, raw, bit):
    layout = tuple(range(1, n + 1))
    prefs = {v: raw[i] for i, v in enumerate(layout)}
    colors, turns = ring_assignment(layout, prefs, bit)
    edges = [(layout[i], layout[(i + 1) % n]) for i in range(n)]
    assert proper(edges, colors)
    for j, v in enumerate(layout):
        earlier = {colors[u] for u in (layout[j - 1], layout[(j + 1) % n]) if turns[u] < turns[v]}
        if prefs[v] not in earlier:
            assert colors[v] == prefs[v]


def test_ring_all_distinct_preferences_granted():
    g = _ring(5)
    prefs = {v: i for i, v in enumerate(sorted(g.nodes))}
    for _, t in enumerate_executions(g, ColoringRing(), None, Enumerated(lazy_pads=True), preferences=prefs):
        assert t.outputs == prefs


def test_color_out_of_turn_aborts():
    # the delayed agent only speaks at the phase start when it drew the first name
    prefs = {v: 0 for v in TRIANGLE.nodes}
    caught = Fraction(0)
    for pr, t in enumerate_executions(TRIANGLE, ColoringViaRenaming(), _with(TRIANGLE, 1, Deviation("delay", 1, milestone=2)), preferences=prefs):
        if t.aborted is not None:
            assert "out of turn" in t.aborted.reason and t.verdict is Verdict.ERRONEOUS
            caught += pr
    assert caught == Fraction(1, 3)


# partition


@pytest.mark.parametrize("n", [4, 6])
def test_partition_pairs_split_evenly(n):
    g = _ring(n)
    layout = canonical_ring(g)
    total = Fraction(0)
    for pr, t in enumerate_executions(g, RingPartition(), None):
        assert t.verdict is Verdict.LEGAL
        assert Counter(t.outputs.values()) == {0: n // 2, 1: n // 2}
        for pos, v in enumerate(layout):
            assert t.outputs[v] != t.outputs[layout[partner_of(layout, pos)]]
        total += pr
    assert total == 1


def test_partition_each_agent_side_is_fair():
    g = _ring(4)
    dist = defaultdict(Fraction)
    for pr, t in enumerate_executions(g, RingPartition(), None):
        dist[t.outputs[10]] += pr
    assert dist == {0: Fraction(1, 2), 1: Fraction(1, 2)}


def test_partition_odd_ring_aborts():
    for _, t in enumerate_executions(_ring(5), RingPartition(), None):
        assert t.aborted is not None and t.verdict is Verdict.ERRONEOUS


# orientation


def test_orientation_head_rule():
    assert head_of(3, 7, 1) == 7 and head_of(7, 3, 1) == 7
    assert head_of(3, 7, 0) == 3


def test_orientation_agreement_and_uniformity():
    heads = defaultdict(lambda: defaultdict(Fraction))
    for pr, t in enumerate_executions(KITE, EdgeOrientation(), None):
        assert t.verdict is Verdict.LEGAL
        for v, out in t.outputs.items():
            for u, h in out:
                other = dict(t.outputs[u])[v]
                assert h == other
                heads[frozenset((u, v))][h] += pr / 2
    for e, dist in heads.items():
        assert dict(dist) == {x: Fraction(1, 2) for x in e}


# registry


def test_registry_lists_every_problem():
    assert set(REGISTRY) == {"ks", "ks2", "color-renaming", "color-orient", "color-ring", "partition", "orientation", "leader"}
    assert isinstance(make_protocol("ks", k=2, field_size=2), KnowledgeSharing)
    with pytest.raises(UnknownProblem):
        make_protocol("consensus")
