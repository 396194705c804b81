"""NDCG reward.

The scalar functions route through the batched ones so that a reward
computed for a single ranking is bit-identical to the same ranking's entry
in a counterfactual batch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

Gain = Literal["exponential", "linear"]


@dataclass(frozen=True)
class NdcgConfig:
    cutoff: int | None = None
    gain: Gain = "exponential"

    def __post_init__(self):
        if self.cutoff is not None and self.cutoff < 1:
            raise ValueError(f"cutoff must be >= 1, got {self.cutoff}")
        if self.gain not in ("exponential", "linear"):
            raise ValueError(f"unknown gain {self.gain!r}")

    def to_json(self) -> dict:
        return {"cutoff": self.cutoff, "gain": self.gain}

    @classmethod
    def from_json(cls, obj) -> "NdcgConfig":
        return cls(cutoff=obj.get("cutoff"), gain=obj.get("gain", "exponential"))


def gains(labels: np.ndarray, config: NdcgConfig) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.float64)
    if config.gain == "exponential":
        return np.exp2(labels) - 1.0
    return labels


def _discounts(n: int, config: NdcgConfig) -> np.ndarray:
    disc = 1.0 / np.log2(np.arange(2, n + 2, dtype=np.float64))
    if config.cutoff is not None:
        disc[config.cutoff:] = 0.0
    return disc


def dcg_batch(label_rows: np.ndarray, config: NdcgConfig = NdcgConfig()) -> np.ndarray:
    """DCG of every row of a (m, n) matrix of labels in rank order."""
    label_rows = np.atleast_2d(label_rows)
    if label_rows.shape[1] == 0:
        raise ValueError("label list must be non-empty")
    return np.sum(gains(label_rows, config) * _discounts(label_rows.shape[1], config), axis=1)


def ideal_dcg(labels: Sequence[int] | np.ndarray, config: NdcgConfig = NdcgConfig()) -> float:
    ideal = -np.sort(-np.asarray(labels))
    return float(dcg_batch(ideal[None, :], config)[0])


def ndcg_batch(label_rows: np.ndarray, config: NdcgConfig = NdcgConfig()) -> np.ndarray:
    """NDCG of each row; all rows must be permutations of the same labels.

    A zero ideal DCG yields 0 for every row.
    """
    label_rows = np.atleast_2d(label_rows)
    idcg = ideal_dcg(label_rows[0], config)
    if idcg == 0.0:
        return np.zeros(label_rows.shape[0])
    return dcg_batch(label_rows, config) / idcg


def dcg(labels_in_rank_order: Sequence[int], config: NdcgConfig = NdcgConfig()) -> float:
    return float(dcg_batch(np.asarray(labels_in_rank_order)[None, :], config)[0])


def ndcg(labels_in_rank_order: Sequence[int], config: NdcgConfig = NdcgConfig()) -> float:
    return float(ndcg_batch(np.asarray(labels_in_rank_order)[None, :], config)[0])
