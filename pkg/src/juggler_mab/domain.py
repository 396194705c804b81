"""Shared data model: items, contexts, searches, arms, and dataset I/O."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

SCHEMA_VERSION = 1
CONTEXT_FEATURES = ("brand", "device", "geo")
ATTRIBUTE_NAMES = ("daily_price", "guest_rating", "star_rating", "margin_pct", "margin_abs")


class DataValidationError(ValueError):
    """A search record or dataset file violates the data model."""

    def __init__(self, message: str, search_id: str | None = None):
        self.search_id = search_id
        if search_id is not None:
            message = f"search {search_id}: {message}"
        super().__init__(message)


class ZeroCombinedWeightWarning(UserWarning):
    """Some arm drives a combined (juggler + correction) weight to exactly zero."""


@dataclass(frozen=True, slots=True)
class Item:
    item_id: str
    utility_score: float
    compensation_score: float
    relevance_label: int
    attributes: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Context:
    brand: str
    device: str
    geo: str

    def value(self, feature: str) -> str:
        return getattr(self, feature)


@dataclass(frozen=True)
class JugglerPrediction:
    w_utility: float
    w_comp: float


@dataclass(frozen=True)
class SearchRecord:
    search_id: str
    day_index: int
    context: Context
    juggler: JugglerPrediction
    items: tuple[Item, ...]

    # Column views used by the vectorised scorer.
    @cached_property
    def utility_scores(self) -> np.ndarray:
        return np.array([it.utility_score for it in self.items], dtype=np.float64)

    @cached_property
    def compensation_scores(self) -> np.ndarray:
        return np.array([it.compensation_score for it in self.items], dtype=np.float64)

    @cached_property
    def labels(self) -> np.ndarray:
        return np.array([it.relevance_label for it in self.items], dtype=np.int64)


@dataclass(frozen=True)
class Arm:
    w_utility_mab: float
    w_comp_mab: float
    arm_index: int


@dataclass(frozen=True)
class ArmSpace:
    utility_values: tuple[float, ...] = (-0.3, 0.0, 0.3)
    comp_values: tuple[float, ...] = (-0.2, 0.0, 0.2)

    def __post_init__(self):
        for name in ("utility_values", "comp_values"):
            vals = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, vals)
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"{name} must be strictly increasing")
            if 0.0 not in vals:
                raise ValueError(f"{name} must contain the neutral value 0.0")

    def __len__(self) -> int:
        return len(self.utility_values) * len(self.comp_values)

    def arm(self, arm_index: int) -> Arm:
        if not 0 <= arm_index < len(self):
            raise IndexError(f"arm_index {arm_index} out of range [0, {len(self)})")
        iu, ic = divmod(arm_index, len(self.comp_values))
        return Arm(self.utility_values[iu], self.comp_values[ic], arm_index)

    def index_of(self, w_utility_mab: float, w_comp_mab: float) -> int:
        iu = self.utility_values.index(float(w_utility_mab))
        ic = self.comp_values.index(float(w_comp_mab))
        return iu * len(self.comp_values) + ic

    @cached_property
    def arms(self) -> tuple[Arm, ...]:
        return tuple(self.arm(i) for i in range(len(self)))

    @cached_property
    def neutral_index(self) -> int:
        return self.index_of(0.0, 0.0)

    @cached_property
    def corrections(self) -> np.ndarray:
        """(n_arms, 2) array of (utility, compensation) corrections in arm order."""
        return np.array([(a.w_utility_mab, a.w_comp_mab) for a in self.arms], dtype=np.float64)

    def to_json(self) -> dict:
        return {"utility_values": list(self.utility_values), "comp_values": list(self.comp_values)}

    @classmethod
    def from_json(cls, obj: Mapping) -> "ArmSpace":
        return cls(tuple(obj["utility_values"]), tuple(obj["comp_values"]))


Vocab = Mapping[str, Sequence[str]]


def zero_weight_arms(record: SearchRecord, arm_space: ArmSpace) -> list[int]:
    """Arms for which either combined weight of ``record`` is exactly zero."""
    corr = arm_space.corrections
    zero = ((record.juggler.w_utility + corr[:, 0]) == 0.0) | ((record.juggler.w_comp + corr[:, 1]) == 0.0)
    return np.flatnonzero(zero).tolist()


def validate_record(record: SearchRecord, arm_space: ArmSpace, vocab: Vocab) -> SearchRecord:
    """Check ``record`` against the data model and return it unchanged.

    Raises DataValidationError on structural problems. Arms that zero out a
    combined weight are reported through a ZeroCombinedWeightWarning rather
    than rejected.
    """
    sid = record.search_id
    if not record.items:
        raise DataValidationError("empty item list", sid)
    if record.day_index < 0:
        raise DataValidationError(f"negative day_index {record.day_index}", sid)
    seen = set()
    for it in record.items:
        if it.item_id in seen:
            raise DataValidationError(f"duplicate item_id {it.item_id!r}", sid)
        seen.add(it.item_id)
        if not (math.isfinite(it.utility_score) and math.isfinite(it.compensation_score)):
            raise DataValidationError(f"non-finite score on item {it.item_id!r}", sid)
        if int(it.relevance_label) != it.relevance_label or it.relevance_label < 0:
            raise DataValidationError(
                f"relevance_label must be a non-negative integer, got {it.relevance_label!r}", sid)
    if not (math.isfinite(record.juggler.w_utility) and math.isfinite(record.juggler.w_comp)):
        raise DataValidationError("non-finite juggler weight", sid)
    for feat in CONTEXT_FEATURES:
        value = record.context.value(feat)
        if value not in vocab.get(feat, ()):
            raise DataValidationError(f"out-of-vocabulary {feat} value {value!r}", sid)
    zeros = zero_weight_arms(record, arm_space)
    if zeros:
        warnings.warn(
            f"search {sid}: combined weight is zero under arms {zeros}",
            ZeroCombinedWeightWarning,
            stacklevel=2,
        )
    return record


def encode_context(context: Context, vocab: Vocab, enabled_features: Iterable[str]) -> np.ndarray:
    """Intercept followed by one one-hot block per enabled feature.

    Blocks always appear in (brand, device, geo) order regardless of the
    order of ``enabled_features``.
    """
    enabled = set(enabled_features)
    unknown = enabled - set(CONTEXT_FEATURES)
    if unknown:
        raise ValueError(f"unknown context features {sorted(unknown)}")
    parts = [np.ones(1)]
    for feat in CONTEXT_FEATURES:
        if feat not in enabled:
            continue
        values = list(vocab[feat])
        value = context.value(feat)
        try:
            pos = values.index(value)
        except ValueError:
            raise DataValidationError(f"out-of-vocabulary {feat} value {value!r}") from None
        block = np.zeros(len(values))
        block[pos] = 1.0
        parts.append(block)
    return np.concatenate(parts)


def context_dimension(vocab: Vocab, enabled_features: Iterable[str]) -> int:
    enabled = set(enabled_features)
    return 1 + sum(len(vocab[f]) for f in CONTEXT_FEATURES if f in enabled)


# --------------------------------------------------------------------------
# Dataset files
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetHeader:
    vocab: Mapping[str, tuple[str, ...]]
    days: int
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "vocab": {f: list(self.vocab[f]) for f in CONTEXT_FEATURES},
            "days": self.days,
        }


@dataclass(frozen=True)
class Dataset:
    header: DatasetHeader
    records: tuple[SearchRecord, ...]

    @property
    def vocab(self) -> Mapping[str, tuple[str, ...]]:
        return self.header.vocab

    def by_day(self) -> list[tuple[int, list[SearchRecord]]]:
        """Group records by day, requiring days to run 0, 1, 2, ... without gaps."""
        groups: list[tuple[int, list[SearchRecord]]] = []
        for rec in self.records:
            if groups and rec.day_index == groups[-1][0]:
                groups[-1][1].append(rec)
                continue
            expected = groups[-1][0] + 1 if groups else 0
            if rec.day_index != expected:
                raise DataValidationError(
                    f"non-contiguous days: expected day {expected}, found {rec.day_index}",
                    rec.search_id)
            groups.append((rec.day_index, [rec]))
        return groups


def item_to_json(item: Item) -> dict:
    obj = {
        "item_id": item.item_id,
        "utility_score": item.utility_score,
        "compensation_score": item.compensation_score,
        "relevance_label": item.relevance_label,
    }
    if item.attributes:
        obj["attributes"] = dict(item.attributes)
    return obj


def record_to_json(rec: SearchRecord) -> dict:
    return {
        "search_id": rec.search_id,
        "day_index": rec.day_index,
        "context": {f: rec.context.value(f) for f in CONTEXT_FEATURES},
        "juggler": {"w_utility": rec.juggler.w_utility, "w_comp": rec.juggler.w_comp},
        "items": [item_to_json(it) for it in rec.items],
    }


def record_from_json(obj: Mapping) -> SearchRecord:
    try:
        items = tuple(
            Item(
                item_id=str(it["item_id"]),
                utility_score=float(it["utility_score"]),
                compensation_score=float(it["compensation_score"]),
                relevance_label=it["relevance_label"],
                attributes={k: float(v) for k, v in it.get("attributes", {}).items()},
            )
            for it in obj["items"]
        )
        ctx = obj["context"]
        return SearchRecord(
            search_id=str(obj["search_id"]),
            day_index=int(obj["day_index"]),
            context=Context(brand=ctx["brand"], device=ctx["device"], geo=ctx["geo"]),
            juggler=JugglerPrediction(float(obj["juggler"]["w_utility"]), float(obj["juggler"]["w_comp"])),
            items=items,
        )
    except (KeyError, TypeError) as exc:
        raise DataValidationError(f"malformed record: {exc!r}", obj.get("search_id")) from None


def header_from_json(obj: Mapping) -> DatasetHeader:
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DataValidationError(f"unsupported schema_version {version!r}")
    try:
        vocab = {f: tuple(obj["vocab"][f]) for f in CONTEXT_FEATURES}
        return DatasetHeader(vocab=vocab, days=int(obj["days"]), schema_version=version)
    except (KeyError, TypeError) as exc:
        raise DataValidationError(f"malformed header: {exc!r}") from None


def dumps_line(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_line(dataset.header.to_json()) + "\n")
        for rec in dataset.records:
            fh.write(dumps_line(record_to_json(rec)) + "\n")


def load_dataset(path: str | Path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln.strip()]
    if not lines:
        raise DataValidationError(f"{path}: empty dataset file")
    try:
        header = header_from_json(json.loads(lines[0]))
        records = tuple(record_from_json(json.loads(ln)) for ln in lines[1:])
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"{path}: invalid JSON: {exc}") from None
    return Dataset(header, records)
