"""Push the published aggregate results through compare_to_baseline.

Only aggregate values were released, so this checks the reporting
arithmetic (relative deltas at one decimal), not the experiment itself.
"""

from juggler_mab.metrics import RunSummary, compare_to_baseline

SEARCHES = 600_000
PUBLISHED = {
    "Juggler": (0.1776, 0.0373, 0.7515),
    "GT": (0.1791, 0.0358, 0.7866),
    "eps-greedy (0.3)": (0.1811, 0.0339, 0.8095),
    "eps-greedy (0.1)": (0.1824, 0.0325, 0.8218),
    "RLS_brand": (0.1827, 0.0322, 0.8252),
    "RLS_device": (0.1822, 0.0327, 0.8200),
    "RLS_geo": (0.1825, 0.0325, 0.8228),
    "RLS_geo,brand": (0.1827, 0.0323, 0.8246),
    "RLS_device,brand": (0.1827, 0.0322, 0.8228),
    "RLS_geo,device": (0.1827, 0.0322, 0.8247),
    "RLS_geo,device,brand": (0.1826, 0.0323, 0.8246),
}


def main() -> None:
    base = RunSummary(*PUBLISHED["Juggler"], search_count=SEARCHES)
    print(f"{'run':22s} {'reward':>8s} {'regret':>8s} {'best arm':>9s}")
    for name, values in PUBLISHED.items():
        rep = compare_to_baseline(RunSummary(*values, search_count=SEARCHES), base)
        cells = [rep.format_relative(m) for m in ("avg_reward", "avg_regret", "best_arm_pct")]
        print(f"{name:22s} " + " ".join(f"{c:>8s}" for c in cells))


if __name__ == "__main__":
    main()
