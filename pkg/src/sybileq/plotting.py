"""Report figures, rendered off-screen."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def messages_per_round(trace, path: Path) -> Path:
    counts = [len(r) for r in trace.rounds]
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.bar(range(len(counts)), counts, color="#4c72b0")
    if trace.aborted is not None:
        ax.axvline(trace.aborted.round, color="#c44e52", ls="--", label=f"abort by {trace.aborted.detector}")
        ax.legend(loc="upper right")
    ax.set_xlabel("round")
    ax.set_ylabel("messages delivered")
    ax.set_title(f"{trace.protocol}: {trace.verdict.value}")
    return _save(fig, path)


def outcome_distribution(counts: Mapping[str, Fraction | float], path: Path, title: str) -> Path:
    labels = list(counts)
    values = [float(counts[k]) for k in labels]
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.bar(labels, values, color="#55a868")
    ax.set_ylim(0, 1)
    ax.set_ylabel("probability")
    ax.set_title(title)
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    return _save(fig, path)


def deviation_margins(results: Sequence[Any], path: Path) -> Path:
    best: dict[str, float] = {}
    for r in results:
        best[r.label] = max(best.get(r.label, float("-inf")), float(r.margin))
    labels = list(best)
    values = [best[k] for k in labels]
    fig, ax = plt.subplots(figsize=(8, max(2.5, 0.22 * len(labels) + 1)))
    colors = ["#c44e52" if v > 0 else "#4c72b0" for v in values]
    ax.barh(range(len(labels)), values, color=colors)
    ax.set_yticks(range(len(labels)))
    ax.set_yticklabels(labels, fontsize=7)
    ax.axvline(0, color="black", lw=0.8)
    ax.set_xlabel("best margin over honest play")
    ax.invert_yaxis()
    return _save(fig, path)


def incentive_grid(rows: Sequence[Mapping[str, Any]], path: Path) -> Path:
    ks = sorted({r["k"] for r in rows})
    xs = sorted({r["X"] for r in rows}, key=Fraction)
    fig, axes = plt.subplots(len(xs), len(ks), figsize=(3 * len(ks), 2.8 * len(xs)), squeeze=False)
    for i, x in enumerate(xs):
        for j, k in enumerate(ks):
            ax = axes[i][j]
            sel = [r for r in rows if r["k"] == k and r["X"] == x]
            if not sel:
                ax.set_axis_off()
                continue
            yes = [(r["alpha"], r["beta"]) for r in sel if r["incentive"]]
            no = [(r["alpha"], r["beta"]) for r in sel if not r["incentive"]]
            if no:
                ax.scatter(*zip(*no), s=9, color="#4c72b0", label="no incentive")
            if yes:
                ax.scatter(*zip(*yes), s=9, color="#c44e52", label="incentive")
            alphas = sorted({r["alpha"] for r in sel})
            ax.plot(alphas, [2 * a - 2 for a in alphas], color="black", lw=0.8, label="β = 2α−2")
            ax.set_title(f"k={k}, X={x}", fontsize=9)
            ax.set_xlabel("α")
            ax.set_ylabel("β")
    handles: dict[str, Any] = {}
    for ax in axes.flat:
        for h, lab in zip(*ax.get_legend_handles_labels()):
            handles.setdefault(lab, h)
    if handles:
        fig.legend(list(handles.values()), list(handles), fontsize=7, loc="lower right")
    return _save(fig, path)


def attack_summary(report, path: Path) -> Path:
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.2))
    a1.bar(["honest", "emulation"], [float(report.honest_eu), float(report.attack_eu)], color=["#4c72b0", "#c44e52"])
    a1.axhline(1 / report.k, color="black", lw=0.8, ls=":")
    a1.set_ylim(0, 1.05)
    a1.set_ylabel("cheater expected utility")
    rounds = sorted({r for r in report.cheater_first if r is not None} | {r for r in report.honest_first if r is not None})
    width = 0.4
    a2.bar([r - width / 2 for r in rounds], [float(report.cheater_first.get(r, 0)) for r in rounds], width, label="cheater segment")
    a2.bar([r + width / 2 for r in rounds], [float(report.honest_first.get(r, 0)) for r in rounds], width, label="honest agents")
    a2.set_xlabel("first round the shared result is computable")
    a2.set_ylabel("probability")
    a2.legend(fontsize=8)
    return _save(fig, path)
