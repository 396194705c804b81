"""Contextual bandit corrections on top of meta-learned ranking weights, with offline replay."""

from .domain import (
    Arm,
    ArmSpace,
    Context,
    Dataset,
    DatasetHeader,
    DataValidationError,
    Item,
    JugglerPrediction,
    SearchRecord,
    encode_context,
    load_dataset,
    validate_record,
    write_dataset,
)
from .policies import PolicyConfig, make_policy, default_sweep
from .reward import NdcgConfig, dcg, ndcg
from .scoring import rank, reward_of_arm, sort_score
from .simulator import DecisionRecord, SimulationConfig, oracle_best_arm, run

__all__ = [
    "Arm", "ArmSpace", "Context", "Dataset", "DatasetHeader", "DataValidationError", "Item",
    "JugglerPrediction", "SearchRecord", "encode_context", "load_dataset", "validate_record",
    "write_dataset", "PolicyConfig", "make_policy", "default_sweep", "NdcgConfig", "dcg", "ndcg",
    "rank", "reward_of_arm", "sort_score", "DecisionRecord", "SimulationConfig", "oracle_best_arm", "run",
]
