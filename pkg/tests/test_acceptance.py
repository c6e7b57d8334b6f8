"""One test per acceptance criterion; each prints a PASS/FAIL line with its evidence."""

from __future__ import annotations

import random
import time
from collections import Counter, defaultdict
from fractions import Fraction

from sybileq.bounds import (
    KnowledgeBound,
    classify_bound,
    grid_argmax,
    ks_dup_expected_utility,
    ks_dup_expected_utility_sweep,
    ks_incentive,
    ks_optimal_duplication,
    leader_dup_expected_utility,
    max_useful_duplication,
    summary_rows,
)
from sybileq.building_blocks import canonical_ring
from sybileq.engine import Enumerated, ProblemKind, Verdict, enumerate_executions, run_seeded
from sybileq.protocols import (
    ColoringRing,
    ColoringViaOrientation,
    ColoringViaRenaming,
    EdgeOrientation,
    KnowledgeSharing,
    RingPartition,
)
from sybileq.rationality import (
    FAMILIES,
    NO_PROFIT,
    Setting,
    check_equilibrium,
    consecutive_segments,
    deviation_catalog,
    expected_utility_exact,
    posterior_uniform,
)
from sybileq.rationality.attack import default_h, run_attack
from sybileq.topology import build_ring, from_edges

KS_CELLS = [(4, 8), (5, 4), (6, 4), (5, 2), (6, 2)]
SECRECY_FIELD = 8
GRID_ALPHA = range(3, 13)
GRID_BETA_MAX = 24
GRID_K = (2, 3, 4, 10)
GRID_X = (Fraction(1, 2), Fraction(1))
MC_RUNS = 10_000
MC_MAX_N = 12

TABLE = [
    ("α+1", "Leader Election"),
    ("2α−2", "Knowledge Sharing"),
    ("∞", "Coloring, 2-Knowledge Sharing"),
    ("unbounded", "Partition, Orientation"),
]

SMALL_GRAPHS = {
    "triangle": from_edges([1, 2, 3], [(1, 2), (2, 3), (1, 3)]),
    "kite": from_edges([1, 2, 3, 4], [(1, 2), (1, 3), (1, 4), (2, 3), (3, 4)]),
    "ring4": build_ring(4, [1, 2, 3, 4]),
    "ring5": build_ring(5, [1, 2, 3, 4, 5]),
    "house": from_edges([1, 2, 3, 4, 5], [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1), (2, 5)]),
}


def _ring(n):
    return build_ring(n, [10 * (i + 1) for i in range(n)])


def _grid_cells():
    for a in GRID_ALPHA:
        for beta in range(a, GRID_BETA_MAX + 1):
            for k in GRID_K:
                for x in GRID_X:
                    if Fraction(1, k) < x:
                        yield KnowledgeBound(a, beta), k, x


def test_criterion_01_honest_sharing_is_correct(verdict):
    start = time.perf_counter()
    bad = []
    branches = 0
    for n, field in KS_CELLS:
        g = _ring(n)
        mass = Fraction(0)
        for pr, t in enumerate_executions(g, KnowledgeSharing(k=field, field_size=field), None, Enumerated(lazy_pads=True)):
            branches += 1
            mass += pr
            want = sum(t.inputs.values()) % field
            if t.verdict is not Verdict.LEGAL or set(t.outputs.values()) != {want}:
                bad.append((n, field, dict(t.inputs)))
        if mass != 1:
            bad.append((n, field, "mass", mass))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 60
    cells = ", ".join(f"n={n}/F={f}" for n, f in KS_CELLS)
    verdict(1, ok, f"{branches} branches over {cells}; {len(bad)} wrong; {elapsed:.1f}s (limit 60s)")
    assert ok


def test_criterion_02_secrecy_before_delivery(verdict):
    n = 5
    g = _ring(n)
    p = KnowledgeSharing(k=SECRECY_FIELD, field_size=SECRECY_FIELD)
    upto = p.milestones(g)[2]
    layout = canonical_ring(g)
    bits = (SECRECY_FIELD - 1).bit_length()
    max_len = -(-n // 2)
    checked = 0
    failures = []
    for sender in layout:
        others = {v: (v // 10) % SECRECY_FIELD for v in layout if v != sender}
        for seg in consecutive_segments(layout, max_len, exclude=sender):
            checked += 1
            if not posterior_uniform(g, p, sender, seg, upto, others, range(SECRECY_FIELD), bits).uniform:
                failures.append((sender, seg))
    minority_ok = all(2 * len(seg) > n for _, seg in failures)
    detail = f"{checked - len(failures)}/{checked} segments of <= {max_len} agents leave the input uniform by round {upto}"
    if failures:
        shown = "; ".join(f"sender {s} vs {seg}" for s, seg in failures)
        detail += f"; non-uniform: {shown}"
        if minority_ok:
            detail += "; every segment of < n/2 agents is uniform"
    verdict(2, not failures, detail)
    assert not failures


def test_criterion_03_no_profitable_deviation_up_to_n(verdict):
    g = _ring(4)
    p = KnowledgeSharing(k=2, field_size=2, q_name="xor")
    families = [f for f in FAMILIES if f != "sybil"]
    catalog = deviation_catalog(p, g.n, families=families, milestone_count=len(p.milestones(g)))
    report = check_equilibrium(Setting(g, p, {}), catalog, sorted(g.nodes), preference_values=[0, 1], stop_at_first=False)
    best = max(r.margin for r in report.results)
    ok = report.verdict == NO_PROFIT
    verdict(3, ok, f"{len(report.results)} comparisons ({len(catalog)} deviations x 4 agents x 2 inputs x 2 preferences), best margin {best}: {report.verdict}")
    assert ok


def test_criterion_04_segment_emulation_pays(verdict):
    g, scheme = default_h(3)
    report = run_attack(g, scheme, k=4)
    honest_agents = len(g.nodes) - 1
    ok = report.margin > 0 and honest_agents == 3 and scheme.d == g.n + 1
    verdict(4, ok, f"|D|={honest_agents}, d={scheme.d}, k=4: honest {report.honest_eu}, attack {report.attack_eu}, margin {report.margin}")
    assert ok


def test_criterion_05_honest_utility_is_one_over_k(verdict):
    g = _ring(4)
    values = {}
    for k in (2, 4):
        p = KnowledgeSharing(k=k, field_size=k)
        for pref in range(k):
            values[(k, pref)] = expected_utility_exact(Setting(g, p, {10: pref}), 10)
    ok = all(v == Fraction(1, k) for (k, _), v in values.items())
    verdict(5, ok, "; ".join(f"k={k} pref={x}: {v}" for (k, x), v in sorted(values.items())))
    assert ok


def test_criterion_06_closed_form_matches_grid(verdict):
    cells = mismatched = feasible = argmax_bad = optimum_bad = 0
    for b, k, x in _grid_cells():
        values = {}
        for d in range(b.alpha, max_useful_duplication(b) + 1):
            cells += 1
            sweep = ks_dup_expected_utility_sweep(b, d, k, x)
            values[d] = sweep
            if ks_dup_expected_utility(b, d, k, x) != sweep:
                mismatched += 1
        opt = ks_optimal_duplication(b, k, x)
        if opt.feasible:
            feasible += 1
            argmax_bad += opt.d_star not in grid_argmax(values)
            optimum_bad += opt.payoff != values[opt.d_star]
    ok = mismatched == 0 and argmax_bad == 0
    verdict(
        6,
        ok,
        f"closed form = grid on {cells - mismatched}/{cells} (d, cell) pairs; d* in grid argmax on "
        f"{feasible - argmax_bad}/{feasible} cells; closed form exact at d* on {feasible - optimum_bad}/{feasible}",
    )
    assert ok


def test_criterion_07_two_valued_sharing_never_pays(verdict):
    cells = [(b, x) for b, k, x in _grid_cells() if k == 2]
    paying = [(b.alpha, b.beta, x) for b, x in cells if ks_incentive(b, 2, x)]
    verdict(7, not paying, f"{len(cells)} k=2 cells, {len(paying)} with an incentive")
    assert not paying


def test_criterion_08_leader_inequalities(verdict):
    bad = []
    checked = 0
    for alpha in range(3, GRID_BETA_MAX + 1):
        tight = KnowledgeBound(alpha, alpha + 1)
        for n in tight.sizes():
            checked += 1
            eu = leader_dup_expected_utility(tight, n)
            if not (eu == Fraction(1, 2) * Fraction(2, n + 1) and eu < Fraction(1, n)):
                bad.append(("a+1", alpha, n))
        loose = KnowledgeBound(alpha, alpha + 2)
        for n in loose.sizes():
            checked += 1
            eu = leader_dup_expected_utility(loose, n)
            holds = eu > Fraction(1, n) if n > 3 else eu == Fraction(1, n)
            if not (eu == Fraction(2, 3) * Fraction(2, n + 1) and holds):
                bad.append(("a+2", alpha, n))
    verdict(8, not bad, f"{checked} exact comparisons for alpha in [3, {GRID_BETA_MAX}]; {len(bad)} violated")
    assert not bad


def _greedy_holds(t, g, prefs):
    turn = {v: t.memories[v]["decision_turn"] for v in g.nodes}
    for v in g.nodes:
        taken = {t.outputs[u] for u in g.neighbors(v) if turn[u] < turn[v]}
        if prefs[v] not in taken and t.outputs[v] != prefs[v]:
            return False
    return True


def _proper(g, colors):
    return all(colors[a] != colors[b] for a, b in g.edges)


def _random_two_connected(n, rng):
    # a shuffled Hamiltonian cycle plus random chords
    nodes = list(range(1, n + 1))
    rng.shuffle(nodes)
    edges = {tuple(sorted((nodes[i], nodes[(i + 1) % n]))) for i in range(n)}
    for _ in range(rng.randrange(n)):
        a, b = rng.sample(nodes, 2)
        edges.add(tuple(sorted((a, b))))
    return from_edges(nodes, sorted(edges))


def test_criterion_09_coloring_is_proper_and_greedy(verdict):
    protocols = {"renaming": ColoringViaRenaming(), "orient": ColoringViaOrientation(), "ring": ColoringRing()}
    stats = Counter()
    for name, p in protocols.items():
        for gname, g in SMALL_GRAPHS.items():
            if name == "ring" and not gname.startswith("ring"):
                continue
            nodes = sorted(g.nodes)
            for prefs in ({v: 0 for v in nodes}, {v: i for i, v in enumerate(nodes)}, {v: v % 2 for v in nodes}):
                for _, t in enumerate_executions(g, p, None, Enumerated(lazy_pads=True), preferences=prefs, keep_memory=True):
                    stats["enumerated"] += 1
                    if t.aborted is not None:
                        stats["aborted"] += 1
                        continue
                    stats["improper"] += not _proper(g, t.outputs)
                    stats["greedy"] += not _greedy_holds(t, g, prefs)
    rng = random.Random(2024)
    names = list(protocols)
    for i in range(MC_RUNS):
        name = names[i % 3]
        n = 4 + (i // 3) % (MC_MAX_N - 3)
        g = build_ring(n, list(range(1, n + 1))) if name == "ring" else _random_two_connected(n, rng)
        prefs = {v: rng.randrange(3) for v in g.nodes}
        t = run_seeded(g, protocols[name], None, i, preferences=prefs, keep_memory=True)
        stats["sampled"] += 1
        if t.aborted is not None:
            stats["aborted"] += 1
            continue
        stats["improper"] += not _proper(g, t.outputs)
        stats["greedy"] += not _greedy_holds(t, g, prefs)
    ok = stats["improper"] == 0 and stats["greedy"] == 0
    verdict(
        9,
        ok,
        f"{stats['enumerated']} enumerated branches (n <= 5) and {stats['sampled']} seeded runs (n <= {MC_MAX_N}); "
        f"{stats['aborted']} aborted, {stats['improper']} improper, {stats['greedy']} greediness violations",
    )
    assert ok


def test_criterion_10_partition(verdict):
    unbalanced = Counter()
    branches = Counter()
    for n in (4, 6, 8):
        for _, t in enumerate_executions(_ring(n), RingPartition(), None):
            branches[n] += 1
            if t.verdict is not Verdict.LEGAL or Counter(t.outputs.values()) != {0: n // 2, 1: n // 2}:
                unbalanced[n] += 1
    odd = [t.aborted is not None and t.verdict is Verdict.ERRONEOUS for _, t in enumerate_executions(_ring(5), RingPartition(), None)]
    ok = not unbalanced and all(odd)
    verdict(10, ok, f"even rings {dict(branches)} branches, {sum(unbalanced.values())} unbalanced; odd ring: {sum(odd)}/{len(odd)} branches aborted")
    assert ok


def test_criterion_11_orientation(verdict):
    disagreements = 0
    skewed = []
    for gname, g in SMALL_GRAPHS.items():
        heads = defaultdict(lambda: defaultdict(Fraction))
        for pr, t in enumerate_executions(g, EdgeOrientation(), None):
            for v, out in t.outputs.items():
                for u, h in out:
                    disagreements += dict(t.outputs[u])[v] != h
                    if v < u:
                        heads[(v, u)][h] += pr
        skewed.extend((gname, e) for e, dist in heads.items() if dict(dist) != {e[0]: Fraction(1, 2), e[1]: Fraction(1, 2)})
    g = SMALL_GRAPHS["kite"]
    p = EdgeOrientation()
    catalog = deviation_catalog(p, 2, families=("duplicate", "biased-draw", "output-override", "withhold", "forge", "delay"), milestone_count=1)
    verdicts = []
    for a in sorted(g.nodes):
        nb = sorted(g.neighbors(a))
        prefs = [{u: a for u in nb}, {u: u for u in nb}]
        verdicts.append(check_equilibrium(Setting(g, p, {}), catalog, [a], preference_values=prefs, stop_at_first=False).verdict)
    ok = disagreements == 0 and not skewed and set(verdicts) == {NO_PROFIT}
    verdict(
        11,
        ok,
        f"{disagreements} endpoint disagreements, {len(skewed)} non-uniform edges over {len(SMALL_GRAPHS)} graphs; "
        f"{len(catalog)} bit-biasing deviations x 4 agents: {', '.join(sorted(set(verdicts)))}",
    )
    assert ok


def test_criterion_12_summary_table(verdict):
    rows = summary_rows()
    kinds = {
        ProblemKind.LEADER_ELECTION: "α+1",
        ProblemKind.KNOWLEDGE_SHARING: "2α−2",
        ProblemKind.COLORING: "∞",
        ProblemKind.TWO_KNOWLEDGE_SHARING: "∞",
        ProblemKind.RING_PARTITION: "unbounded",
        ProblemKind.ORIENTATION: "unbounded",
    }
    ok = rows == TABLE and all(classify_bound(k).label == label for k, label in kinds.items())
    verdict(12, ok, " | ".join(f"{b}: {p}" for b, p in rows))
    assert ok
