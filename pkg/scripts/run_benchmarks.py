"""Generate the planted benchmarks, sweep all eleven policies, and write result tables.

    python3 scripts/run_benchmarks.py --out results/ [--bench A B C] [--days 30 --searches 1000] [--seed 1]

Per benchmark this writes <out>/<bench>/summary.csv, daily.csv, comparison.csv,
topk_delta.csv and final_arm_share.csv, and prints a summary table.
"""

from __future__ import annotations

import argparse
import csv
import time
from pathlib import Path

from juggler_mab.benchmarks import BENCHMARKS, scaled
from juggler_mab.datagen import generate
from juggler_mab.domain import ArmSpace
from juggler_mab.metrics import (
    compare_to_baseline,
    summarize,
    top_k_stats,
    write_comparison_csv,
    write_daily_csv,
    write_summary_csv,
    write_topk_delta_csv,
)
from juggler_mab.policies import default_sweep
from juggler_mab.simulator import SimulationConfig, counterfactual_table, run


def final_arm_share(decisions, n_arms: int, last_days: int) -> list[float]:
    last = max(d.day_index for d in decisions)
    tail = [d for d in decisions if d.day_index > last - last_days]
    counts = [0] * n_arms
    for d in tail:
        counts[d.chosen_arm_index] += 1
    return [c / len(tail) for c in counts]


def run_benchmark(name: str, days: int, searches: int, seed: int, out: Path) -> None:
    cfg = scaled(BENCHMARKS[name], days, searches)
    t0 = time.perf_counter()
    dataset = generate(cfg)
    t1 = time.perf_counter()
    space = ArmSpace()
    table = counterfactual_table(dataset.records, space)
    rows, curves, logs, shares = [], [], {}, []
    for pc in default_sweep():
        res = run(dataset, SimulationConfig(seed=seed, policy_config=pc), rewards=table)
        summary, daily = summarize(res.decisions, len(space))
        rows.append((pc.display_name, summary))
        curves.append((pc.display_name, daily))
        logs[pc.display_name] = res.decisions
        shares.append((pc.display_name, final_arm_share(res.decisions, len(space), min(10, days))))
    t2 = time.perf_counter()

    out.mkdir(parents=True, exist_ok=True)
    write_summary_csv(out / "summary.csv", rows)
    write_daily_csv(out / "daily.csv", curves, len(space))
    base = rows[0][1]
    write_comparison_csv(out / "comparison.csv", [(n, compare_to_baseline(s, base)) for n, s in rows[1:]])
    base_topk = top_k_stats(logs["baseline"], dataset, space)
    write_topk_delta_csv(out / "topk_delta.csv", [
        (n, compare_to_baseline(top_k_stats(logs[n], dataset, space), base_topk)) for n, _ in rows[1:]
    ])
    with open(out / "final_arm_share.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["policy"] + [f"arm_{i}" for i in range(len(space))])
        for n, share in shares:
            w.writerow([n] + [f"{x:.4f}" for x in share])

    print(f"\nbenchmark {name}: {len(dataset.records)} searches "
          f"(generate {t1 - t0:.1f}s, sweep {t2 - t1:.1f}s)")
    print(f"{'policy':24s} {'reward':>8s} {'regret':>8s} {'best arm':>9s} {'vs base':>8s}")
    for n, s in rows:
        rel = compare_to_baseline(s, base).format_relative("avg_reward")
        print(f"{n:24s} {s.avg_reward:8.4f} {s.avg_regret:8.4f} {s.best_arm_pct:9.4f} {rel:>8s}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--bench", nargs="+", default=list(BENCHMARKS), choices=list(BENCHMARKS))
    ap.add_argument("--days", type=int, default=30)
    ap.add_argument("--searches", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    for name in args.bench:
        run_benchmark(name, args.days, args.searches, args.seed, Path(args.out) / name)


if __name__ == "__main__":
    main()
