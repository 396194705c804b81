"""Day-by-day replay of logged searches under a bandit policy."""

from __future__ import annotations

import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .domain import (
    ArmSpace,
    Dataset,
    DataValidationError,
    SearchRecord,
    ZeroCombinedWeightWarning,
    context_dimension,
    dumps_line,
    encode_context,
    validate_record,
)
from .policies import Observation, Policy, PolicyConfig, make_policy, policy_from_snapshot
from .reward import NdcgConfig
from .rng import search_stream
from .scoring import counterfactual_rewards

UPDATE_MODES = ("per_observation", "daily_mean")
THREADS_ENV = "JUGGLER_MAB_THREADS"


@dataclass(frozen=True)
class SimulationConfig:
    seed: int = 0
    horizon_days: int | None = None
    ndcg_config: NdcgConfig = field(default_factory=NdcgConfig)
    arm_space: ArmSpace = field(default_factory=ArmSpace)
    policy_config: PolicyConfig = field(default_factory=lambda: PolicyConfig("baseline"))
    update_mode: str = "per_observation"

    def __post_init__(self):
        if self.horizon_days is not None and self.horizon_days < 1:
            raise ValueError("horizon_days must be >= 1")
        if self.update_mode not in UPDATE_MODES:
            raise ValueError(f"unknown update_mode {self.update_mode!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class DecisionRecord:
    search_id: str
    day_index: int
    chosen_arm_index: int
    realized_reward: float
    counterfactual_rewards: tuple[float, ...]
    best_reward: float
    regret: float
    is_best_arm: bool
    was_exploration: bool

    def to_json(self) -> dict:
        return {
            "search_id": self.search_id,
            "day_index": self.day_index,
            "chosen_arm_index": self.chosen_arm_index,
            "realized_reward": self.realized_reward,
            "counterfactual_rewards": list(self.counterfactual_rewards),
            "best_reward": self.best_reward,
            "regret": self.regret,
            "is_best_arm": self.is_best_arm,
            "was_exploration": self.was_exploration,
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> "DecisionRecord":
        return cls(
            search_id=str(obj["search_id"]),
            day_index=int(obj["day_index"]),
            chosen_arm_index=int(obj["chosen_arm_index"]),
            realized_reward=float(obj["realized_reward"]),
            counterfactual_rewards=tuple(float(v) for v in obj["counterfactual_rewards"]),
            best_reward=float(obj["best_reward"]),
            regret=float(obj["regret"]),
            is_best_arm=bool(obj["is_best_arm"]),
            was_exploration=bool(obj["was_exploration"]),
        )


@dataclass
class SimulationResult:
    decisions: list[DecisionRecord]
    snapshot: dict


def oracle_best_arm(record: SearchRecord, arm_space: ArmSpace,
                    ndcg_config: NdcgConfig = NdcgConfig()) -> tuple[frozenset[int], float]:
    """All arms attaining the maximum reward on ``record``, and that maximum."""
    rewards = counterfactual_rewards(record, arm_space, ndcg_config)
    best = float(rewards.max())
    return frozenset(int(i) for i in np.flatnonzero(rewards == best)), best


def counterfactual_table(records: Sequence[SearchRecord], arm_space: ArmSpace,
                         ndcg_config: NdcgConfig = NdcgConfig(), threads: int = 1) -> np.ndarray:
    """(n_searches, n_arms) reward matrix; identical for any thread count."""
    def rows(chunk):
        return [counterfactual_rewards(r, arm_space, ndcg_config) for r in chunk]

    if not records:
        return np.zeros((0, len(arm_space)))
    return np.vstack(_map_chunks(rows, list(records), threads))


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def _map_chunks(fn, items: list, threads: int) -> list:
    """Apply ``fn`` to contiguous chunks and concatenate results in input order."""
    if threads <= 1 or len(items) < 2 * threads:
        return fn(items)
    size = -(-len(items) // threads)
    chunks = [items[i:i + size] for i in range(0, len(items), size)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, chunks))
    return [x for part in parts for x in part]


class ReplaySimulator:
    """Replays a dataset day by day against one policy.

    Policy state is frozen for the whole of a day; observations collected
    during the day are applied in one ``update_batch`` call at its end.
    """

    def __init__(self, config: SimulationConfig, vocab: Mapping[str, Sequence[str]],
                 policy: Policy | None = None, threads: int | None = None):
        self.config = config
        self.vocab = vocab
        self.arm_space = config.arm_space
        pc = config.policy_config
        self.features = pc.features if pc.contextual else ()
        dim = context_dimension(vocab, self.features) if pc.contextual else 0
        if policy is None:
            policy = make_policy(pc, len(self.arm_space), dim, neutral_index=self.arm_space.neutral_index)
        if policy.n_arms != len(self.arm_space) or policy.dim != dim:
            raise ValueError("policy shape does not match arm space / context encoding")
        self.policy = policy
        self.threads = resolve_threads(threads)

    def _context(self, record: SearchRecord) -> np.ndarray:
        if not self.features:
            return np.zeros(0)
        return encode_context(record.context, self.vocab, self.features)

    def run_day(self, day_index: int, records: Sequence[SearchRecord],
                rewards: np.ndarray | None = None) -> list[DecisionRecord]:
        cfg = self.config
        for rec in records:
            if rec.day_index != day_index:
                raise DataValidationError(f"record belongs to day {rec.day_index}, not {day_index}",
                                          rec.search_id)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ZeroCombinedWeightWarning)
                validate_record(rec, self.arm_space, self.vocab)
        if rewards is None:
            rewards = counterfactual_table(records, self.arm_space, cfg.ndcg_config, self.threads)
        contexts = [self._context(r) for r in records]

        def decide(idx: list[int]):
            return [self.policy.select(contexts[i], search_stream(cfg.seed, day_index, i)) for i in idx]

        choices = _map_chunks(decide, list(range(len(records))), self.threads)

        out = []
        observations = []
        for rec, ctx, choice, row in zip(records, contexts, choices, rewards):
            realized = float(row[choice.arm_index])
            best = float(row.max())
            out.append(DecisionRecord(
                search_id=rec.search_id,
                day_index=day_index,
                chosen_arm_index=choice.arm_index,
                realized_reward=realized,
                counterfactual_rewards=tuple(float(v) for v in row),
                best_reward=best,
                regret=best - realized,
                is_best_arm=realized == best,
                was_exploration=choice.was_exploration,
            ))
            observations.append(Observation(ctx, choice.arm_index, realized))
        if cfg.update_mode == "daily_mean":
            observations = daily_mean_observations(observations)
        self.policy.update_batch(observations)
        return out

    def run(self, dataset: Dataset, start_day: int = 0,
            rewards: np.ndarray | None = None) -> SimulationResult:
        """Replay days ``start_day .. horizon-1``.

        ``rewards`` optionally supplies the precomputed counterfactual table
        for the full dataset (rows in dataset order), which lets a sweep
        share it across policies.
        """
        days = dataset.by_day()
        horizon = self.config.horizon_days
        if horizon is not None:
            if horizon > len(days):
                raise DataValidationError(f"horizon of {horizon} days exceeds the {len(days)} days in the dataset")
            days = days[:horizon]
        decisions: list[DecisionRecord] = []
        offset = 0
        for day_index, recs in days:
            n = len(recs)
            if day_index >= start_day:
                day_rewards = None if rewards is None else rewards[offset:offset + n]
                decisions.extend(self.run_day(day_index, recs, day_rewards))
            offset += n
        return SimulationResult(decisions, self.policy.snapshot())


def daily_mean_observations(observations: Iterable[Observation]) -> list[Observation]:
    """Collapse a day's observations to one mean-reward observation per (arm, context)."""
    groups: dict[tuple, list[Observation]] = {}
    for obs in observations:
        key = (obs.arm_index, tuple(np.asarray(obs.context_vector).tolist()))
        groups.setdefault(key, []).append(obs)
    out = []
    for (arm, _), members in groups.items():
        mean = float(np.mean([o.reward for o in members]))
        out.append(Observation(members[0].context_vector, arm, mean))
    return out


def run(dataset: Dataset, config: SimulationConfig, *, snapshot: Mapping | None = None,
        start_day: int = 0, threads: int | None = None,
        rewards: np.ndarray | None = None) -> SimulationResult:
    """Replay ``dataset`` under ``config``; optionally resume from a policy snapshot."""
    policy = policy_from_snapshot(snapshot) if snapshot is not None else None
    sim = ReplaySimulator(config, dataset.vocab, policy=policy, threads=threads)
    return sim.run(dataset, start_day=start_day, rewards=rewards)


def write_decisions(decisions: Iterable[DecisionRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for d in decisions:
            fh.write(dumps_line(d.to_json()) + "\n")


def read_decisions(path) -> list[DecisionRecord]:
    with open(path, encoding="utf-8") as fh:
        return [DecisionRecord.from_json(json.loads(ln)) for ln in fh if ln.strip()]

