"""Planted benchmark generator configurations used by the acceptance suite and scripts.

A: one best arm everywhere (0.3 utility correction), stationary.
B: two brands whose best arms sit on opposite corners of the grid.
C: best arm lowers compensation and compensation anti-correlates with relevance.
"""

from __future__ import annotations

from dataclasses import replace

from .datagen import GenConfig

DAYS = 30
SEARCHES_PER_DAY = 1000

BENCHMARK_A = GenConfig(
    seed=20240901,
    days=DAYS,
    searches_per_day=SEARCHES_PER_DAY,
    default_arm=7,
    reward_gap=0.1,
    label_noise=0.2,
)

BENCHMARK_B = replace(
    BENCHMARK_A,
    seed=20240902,
    default_arm=None,
    context_effect={"brand_0": 2, "brand_1": 6},
)

BENCHMARK_C = replace(
    BENCHMARK_A,
    seed=20240903,
    default_arm=3,
    disturbance_correlation=-0.6,
)

BENCHMARKS = {"A": BENCHMARK_A, "B": BENCHMARK_B, "C": BENCHMARK_C}


def scaled(config: GenConfig, days: int, searches_per_day: int) -> GenConfig:
    """Smaller copy of a benchmark for quick tests."""
    return replace(config, days=days, searches_per_day=searches_per_day)
