"""Aggregation of decision logs into summaries, learning curves and deltas."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .domain import ATTRIBUTE_NAMES, ArmSpace, Dataset
from .scoring import rank
from .simulator import DecisionRecord


def _mean(values) -> float:
    values = list(values)
    # fsum is exactly rounded, hence independent of summation order.
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class DailyReport:
    day_index: int
    mean_reward: float
    mean_regret: float
    best_arm_rate: float
    arm_pulls: tuple[int, ...]
    search_count: int


@dataclass(frozen=True)
class RunSummary:
    avg_reward: float
    avg_regret: float
    best_arm_pct: float
    avg_best_reward: float = math.nan
    search_count: int = 0


@dataclass(frozen=True)
class TopKStats:
    k: int
    means: Mapping[str, float]
    search_count: int = 0


@dataclass(frozen=True)
class DeltaReport:
    absolute: Mapping[str, float]
    relative: Mapping[str, float] = field(default_factory=dict)

    def relative_pct(self, metric: str, digits: int = 1) -> float:
        """Relative delta as a percentage rounded to ``digits`` decimals."""
        return round(100.0 * self.relative[metric], digits)

    def format_relative(self, metric: str) -> str:
        return f"{self.relative_pct(metric):+.1f}%"


def summarize(decisions: Sequence[DecisionRecord], n_arms: int | None = None
              ) -> tuple[RunSummary, list[DailyReport]]:
    if not decisions:
        raise ValueError("cannot summarize an empty decision log")
    if n_arms is None:
        n_arms = len(decisions[0].counterfactual_rewards)
    by_day: dict[int, list[DecisionRecord]] = {}
    for d in decisions:
        by_day.setdefault(d.day_index, []).append(d)
    daily = []
    for day in sorted(by_day):
        ds = by_day[day]
        pulls = [0] * n_arms
        for d in ds:
            pulls[d.chosen_arm_index] += 1
        daily.append(DailyReport(
            day_index=day,
            mean_reward=_mean(d.realized_reward for d in ds),
            mean_regret=_mean(d.regret for d in ds),
            best_arm_rate=_mean(1.0 if d.is_best_arm else 0.0 for d in ds),
            arm_pulls=tuple(pulls),
            search_count=len(ds),
        ))
    summary = RunSummary(
        avg_reward=_mean(d.realized_reward for d in decisions),
        avg_regret=_mean(d.regret for d in decisions),
        best_arm_pct=_mean(1.0 if d.is_best_arm else 0.0 for d in decisions),
        avg_best_reward=_mean(d.best_reward for d in decisions),
        search_count=len(decisions),
    )
    return summary, daily


def top_k_stats(decisions: Sequence[DecisionRecord], dataset: Dataset, arm_space: ArmSpace,
                k: int = 10) -> TopKStats:
    """Mean item attributes within the top ``k`` of each realized ranking.

    Attributes are averaged per search over the items that carry them, then
    over the searches where at least one top-k item carries them.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    records = {r.search_id: r for r in dataset.records}
    per_attr: dict[str, list[float]] = {a: [] for a in ATTRIBUTE_NAMES}
    for d in decisions:
        try:
            rec = records[d.search_id]
        except KeyError:
            raise ValueError(f"search {d.search_id} not in dataset") from None
        order = rank(rec, arm_space.arm(d.chosen_arm_index)).ordered_item_indices[:k]
        top = [rec.items[i] for i in order]
        for attr in ATTRIBUTE_NAMES:
            vals = [it.attributes[attr] for it in top if attr in it.attributes]
            if vals:
                per_attr[attr].append(_mean(vals))
    means = {a: _mean(v) for a, v in per_attr.items() if v}
    if not means:
        raise ValueError("no search has any attributed item in its top-k window")
    return TopKStats(k=k, means=means, search_count=len(decisions))


def compare_to_baseline(run: RunSummary | TopKStats, baseline: RunSummary | TopKStats) -> DeltaReport:
    """Absolute deltas per metric and relative deltas ``(x - b) / b``."""
    if type(run) is not type(baseline):
        raise TypeError("run and baseline must be the same kind of report")
    if run.search_count != baseline.search_count:
        raise ValueError(f"dataset mismatch: {run.search_count} vs {baseline.search_count} searches")
    if isinstance(run, TopKStats):
        if run.k != baseline.k:
            raise ValueError("top-k windows differ")
        keys = [a for a in ATTRIBUTE_NAMES if a in run.means and a in baseline.means]
        x, b = run.means, baseline.means
    else:
        keys = ["avg_reward", "avg_regret", "best_arm_pct"]
        x = {m: getattr(run, m) for m in keys}
        b = {m: getattr(baseline, m) for m in keys}
    absolute = {m: x[m] - b[m] for m in keys}
    relative = {m: (x[m] - b[m]) / b[m] for m in keys if b[m] != 0}
    return DeltaReport(absolute, relative)


# --------------------------------------------------------------------------
# CSV outputs
# --------------------------------------------------------------------------

SUMMARY_COLUMNS = ("policy", "avg_reward", "avg_regret", "best_arm_pct")
DAILY_COLUMNS = ("run", "day", "mean_reward", "mean_regret", "best_arm_rate")


def fmt(x: float) -> str:
    return f"{x:.12f}"


def write_summary_csv(path, rows: Sequence[tuple[str, RunSummary]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for name, s in rows:
            w.writerow([name, fmt(s.avg_reward), fmt(s.avg_regret), fmt(s.best_arm_pct)])


def write_daily_csv(path, runs: Sequence[tuple[str, Sequence[DailyReport]]], n_arms: int) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(DAILY_COLUMNS) + [f"pulls_arm_{i}" for i in range(n_arms)])
        for name, reports in runs:
            for r in reports:
                w.writerow([name, r.day_index, fmt(r.mean_reward), fmt(r.mean_regret),
                            fmt(r.best_arm_rate), *r.arm_pulls])


def write_topk_delta_csv(path, deltas: Sequence[tuple[str, DeltaReport]]) -> None:
    """One row per attribute, one delta column per run."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["attribute"] + [name for name, _ in deltas])
        for attr in ATTRIBUTE_NAMES:
            if all(attr in rep.absolute for _, rep in deltas):
                w.writerow([attr] + [fmt(rep.absolute[attr]) for _, rep in deltas])


def write_comparison_csv(path, deltas: Sequence[tuple[str, DeltaReport]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "metric", "delta", "relative_delta_pct"])
        for name, rep in deltas:
            for metric, delta in rep.absolute.items():
                rel = f"{rep.relative_pct(metric):.1f}" if metric in rep.relative else ""
                w.writerow([name, metric, fmt(delta), rel])
