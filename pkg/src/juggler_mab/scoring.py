"""Additive combination of Juggler and bandit weights into item sort scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Arm, ArmSpace, Item, JugglerPrediction, SearchRecord
from .reward import NdcgConfig, ndcg_batch


@dataclass(frozen=True)
class ScoredRanking:
    ordered_item_indices: np.ndarray
    sort_scores: np.ndarray


def combined_weights(juggler: JugglerPrediction, arm: Arm) -> tuple[float, float]:
    return juggler.w_utility + arm.w_utility_mab, juggler.w_comp + arm.w_comp_mab


def sort_score(item: Item, juggler: JugglerPrediction, arm: Arm) -> float:
    w_u, w_c = combined_weights(juggler, arm)
    return w_u * item.utility_score + w_c * item.compensation_score


def _order(scores: np.ndarray) -> np.ndarray:
    # Stable sort on negated scores: descending, ties keep logged order.
    return np.argsort(-scores, axis=-1, kind="stable")


def arm_scores(record: SearchRecord, arm_space: ArmSpace) -> np.ndarray:
    """(n_arms, n_items) sort scores for every arm in the space."""
    corr = arm_space.corrections
    w_u = record.juggler.w_utility + corr[:, 0]
    w_c = record.juggler.w_comp + corr[:, 1]
    return w_u[:, None] * record.utility_scores[None, :] + w_c[:, None] * record.compensation_scores[None, :]


def rank(record: SearchRecord, arm: Arm) -> ScoredRanking:
    w_u, w_c = combined_weights(record.juggler, arm)
    scores = w_u * record.utility_scores + w_c * record.compensation_scores
    return ScoredRanking(ordered_item_indices=_order(scores), sort_scores=scores)


def reward_of_arm(record: SearchRecord, arm: Arm, ndcg_config: NdcgConfig = NdcgConfig()) -> float:
    order = rank(record, arm).ordered_item_indices
    return float(ndcg_batch(record.labels[order][None, :], ndcg_config)[0])


def counterfactual_rewards(record: SearchRecord, arm_space: ArmSpace,
                           ndcg_config: NdcgConfig = NdcgConfig()) -> np.ndarray:
    """Reward of every arm for one search, in arm-index order."""
    orders = _order(arm_scores(record, arm_space))
    return ndcg_batch(record.labels[orders], ndcg_config)

